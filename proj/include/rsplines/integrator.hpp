#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rsplines/potential.hpp"

namespace rsplines {

/// Fourth-order state in chart coordinates: position, velocity, covariant
/// acceleration and covariant jerk. Storing the covariant jets (rather than
/// plain coordinate derivatives) makes the equation of motion and the
/// guard-endpoint residual direct.
struct JetState {
    Vec q, v, a, j;

    bool finite() const {
        return q.allFinite() && v.allFinite() && a.allFinite() && j.allFinite();
    }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<JetState> states;
    std::string chart;

    std::size_t size() const { return times.size(); }
    double duration() const { return times.empty() ? 0.0 : times.back() - times.front(); }
    const JetState& front() const { return states.front(); }
    const JetState& back() const { return states.back(); }
};

enum class StepMethod { euler, rk4 };

inline StepMethod step_method_from_string(const std::string& s) {
    if (s == "euler") return StepMethod::euler;
    if (s == "rk4") return StepMethod::rk4;
    throw validation_error("unknown integration method '" + s + "' (euler|rk4)");
}

inline std::string to_string(StepMethod m) {
    return m == StepMethod::euler ? "euler" : "rk4";
}

struct JetDerivative {
    Vec dq, dv, da, dj;
};

/// Right-hand side of the variational equation as a first-order system in
/// the covariant jets:
///   q̇ = v,   v̇ = a − Γ(v,v),   ȧ = j − Γ(v,a),
///   j̇ = −R(a,v)v − grad V(q) − Γ(v,j).
inline JetDerivative ode_rhs(const Chart& chart, const PotentialSum& sum, const JetState& s) {
    JetDerivative d;
    d.dq = s.v;
    if (chart.flat) {  // Γ ≡ 0, R ≡ 0
        d.dv = s.a;
        d.da = s.j;
        d.dj = -sum_gradient(chart, sum, s.q);
        return d;
    }
    const Christoffel G = chart.christoffel_at(s.q);
    d.dv = s.a - G.contract(s.v, s.v);
    d.da = s.j - G.contract(s.v, s.a);
    d.dj = -chart.curvature_apply(s.q, s.a, s.v, s.v) - sum_gradient(chart, sum, s.q) -
           G.contract(s.v, s.j);
    return d;
}

namespace detail {

inline JetState jet_axpy(const JetState& s, double h, const JetDerivative& d) {
    return {s.q + h * d.dq, s.v + h * d.dv, s.a + h * d.da, s.j + h * d.dj};
}

inline JetState step_euler(const Chart& chart, const PotentialSum& sum, const JetState& s,
                           double h) {
    return jet_axpy(s, h, ode_rhs(chart, sum, s));
}

inline JetState step_rk4(const Chart& chart, const PotentialSum& sum, const JetState& s,
                         double h) {
    const JetDerivative k1 = ode_rhs(chart, sum, s);
    const JetDerivative k2 = ode_rhs(chart, sum, jet_axpy(s, 0.5 * h, k1));
    const JetDerivative k3 = ode_rhs(chart, sum, jet_axpy(s, 0.5 * h, k2));
    const JetDerivative k4 = ode_rhs(chart, sum, jet_axpy(s, h, k3));
    JetState out;
    out.q = s.q + (h / 6.0) * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
    out.v = s.v + (h / 6.0) * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
    out.a = s.a + (h / 6.0) * (k1.da + 2.0 * k2.da + 2.0 * k3.da + k4.da);
    out.j = s.j + (h / 6.0) * (k1.dj + 2.0 * k2.dj + 2.0 * k3.dj + k4.dj);
    return out;
}

}  // namespace detail

/// Advance one step of size h from state s.
inline JetState integrate_step(const Chart& chart, const PotentialSum& sum, const JetState& s,
                               double h, StepMethod method) {
    return method == StepMethod::euler ? detail::step_euler(chart, sum, s, h)
                                       : detail::step_rk4(chart, sum, s, h);
}

/// Fixed-step integration over [0, T]. The grid is uniform with step h; if
/// T is not an integer multiple of h, one final partial step closes the
/// horizon exactly. Throws divergence_error at the first non-finite state.
inline Trajectory integrate(const Chart& chart, const PotentialSum& sum, const JetState& s0,
                            double T, double h, StepMethod method = StepMethod::rk4) {
    if (!(h > 0.0) || !(T > 0.0)) throw validation_error("integrate: need T > 0 and h > 0");
    if (h > T) throw validation_error("integrate: step h exceeds the horizon T");
    if (!s0.finite()) throw divergence_error(0.0, "integrate: initial state is not finite");

    Trajectory traj;
    traj.chart = chart.name;
    const auto n_full = static_cast<std::size_t>(std::floor(T / h + 1e-9));
    traj.times.reserve(n_full + 2);
    traj.states.reserve(n_full + 2);
    traj.times.push_back(0.0);
    traj.states.push_back(s0);

    JetState s = s0;
    double t = 0.0;
    for (std::size_t i = 0; i < n_full; ++i) {
        s = integrate_step(chart, sum, s, h, method);
        t = static_cast<double>(i + 1) * h;
        if (!s.finite()) throw divergence_error(t, "integrate: non-finite state at t = " +
                                                       std::to_string(t));
        traj.times.push_back(t);
        traj.states.push_back(s);
    }
    if (t < T - 1e-12 * std::max(1.0, T)) {  // final partial step
        s = integrate_step(chart, sum, s, T - t, method);
        if (!s.finite()) throw divergence_error(T, "integrate: non-finite state at t = " +
                                                       std::to_string(T));
        traj.times.push_back(T);
        traj.states.push_back(s);
    } else {
        traj.times.back() = T;
    }
    return traj;
}

/// Action ½∫(‖a‖² + V) dt by composite trapezoid over the stored samples.
inline double action_value(const Chart& chart, const PotentialSum& sum, const Trajectory& traj) {
    if (traj.size() < 2) return 0.0;
    auto integrand = [&](const JetState& s) {
        const Mat g = chart.metric_at(s.q);
        return 0.5 * (s.a.dot(g * s.a) + sum_value(chart, sum, s.q));
    };
    double acc = 0.0;
    double prev = integrand(traj.states[0]);
    for (std::size_t i = 1; i < traj.size(); ++i) {
        const double cur = integrand(traj.states[i]);
        acc += 0.5 * (prev + cur) * (traj.times[i] - traj.times[i - 1]);
        prev = cur;
    }
    return acc;
}

}  // namespace rsplines
