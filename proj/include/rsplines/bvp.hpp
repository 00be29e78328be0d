#pragma once

#include <limits>
#include <optional>
#include <utility>

#include "rsplines/integrator.hpp"
#include "rsplines/nelder_mead.hpp"

namespace rsplines {

/// Two-point boundary data: endpoint positions and velocities over [0, T].
struct BoundaryData {
    Vec q0, v0, qT, vT;
    double T = 1.0;

    void validate(int dim) const {
        if (q0.size() != dim || v0.size() != dim || qT.size() != dim || vT.size() != dim)
            throw validation_error("boundary data: dimension mismatch with the chart");
        if (!(T > 0.0)) throw validation_error("boundary data: horizon T must be > 0");
    }
};

struct ShootOptions {
    double h = 1e-3;
    StepMethod method = StepMethod::rk4;
    double tolerance = 1e-6;       // converged iff residual < tolerance
    long max_evaluations = 20000;
    double initial_step = 0.1;     // simplex perturbation around the start jets
    double position_weight = 1.0;
    double velocity_weight = 1.0;
    std::optional<std::pair<Vec, Vec>> warm_start;  // (a0, j0) to seed the simplex
    std::function<void(long, double)> observer;     // per-iteration best residual
};

struct ShootingResult {
    Trajectory trajectory;
    double residual = std::numeric_limits<double>::infinity();
    Vec a0, j0;
    long evaluations = 0;
    bool converged = false;
};

/// Terminal mismatch of a trajectory endpoint against the boundary data:
/// weighted d(q(T), qT)² + ‖v(T) − vT‖². Velocities are compared in chart
/// coordinates (no parallel transport); both endpoints must live on the
/// same chart.
inline double terminal_mismatch(const Chart& chart, const JetState& end, const BoundaryData& bd,
                                double position_weight = 1.0, double velocity_weight = 1.0) {
    const double dq = chart.distance(end.q, bd.qT);
    const double dv = (end.v - bd.vT).norm();
    return position_weight * dq * dq + velocity_weight * dv * dv;
}

/// Single shooting for the fourth-order boundary value problem: searches the
/// unknown initial covariant acceleration and jerk with downhill simplex.
/// Probes that diverge or leave the chart score +inf. Non-convergence is not
/// an error; the best candidate found is returned with converged = false.
inline ShootingResult shoot(const Chart& chart, const PotentialSum& sum, const BoundaryData& bd,
                            const ShootOptions& opts = {}) {
    const int n = chart.dim;
    bd.validate(n);

    auto objective = [&](const Vec& x) {
        JetState s0{bd.q0, bd.v0, x.head(n), x.tail(n)};
        try {
            const Trajectory traj = integrate(chart, sum, s0, bd.T, opts.h, opts.method);
            return terminal_mismatch(chart, traj.back(), bd, opts.position_weight,
                                     opts.velocity_weight);
        } catch (const divergence_error&) {
            return std::numeric_limits<double>::infinity();
        } catch (const chart_domain_error&) {
            return std::numeric_limits<double>::infinity();
        } catch (const singularity_error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    Vec x0 = Vec::Zero(2 * n);
    if (opts.warm_start) {
        x0.head(n) = opts.warm_start->first;
        x0.tail(n) = opts.warm_start->second;
    }

    NelderMeadOptions nm;
    nm.initial_step = opts.initial_step;
    nm.max_evaluations = opts.max_evaluations;
    nm.target = opts.tolerance;
    nm.observer = opts.observer;
    const NelderMeadResult best = nelder_mead_minimize(objective, x0, nm);

    ShootingResult result;
    result.a0 = best.x.head(n);
    result.j0 = best.x.tail(n);
    result.evaluations = best.evaluations;
    JetState s0{bd.q0, bd.v0, result.a0, result.j0};
    result.trajectory = integrate(chart, sum, s0, bd.T, opts.h, opts.method);
    result.residual = terminal_mismatch(chart, result.trajectory.back(), bd,
                                        opts.position_weight, opts.velocity_weight);
    result.converged = result.residual < opts.tolerance;
    return result;
}

/// Coordinate cubic through the boundary data (exact solution of the flat
/// V ≡ 0 problem) evaluated as initial jets; used to warm-start shooting.
inline std::pair<Vec, Vec> hermite_initial_jets(const BoundaryData& bd) {
    const double T = bd.T;
    const Vec dq = bd.qT - bd.q0;
    const Vec c2 = (3.0 * dq - (2.0 * bd.v0 + bd.vT) * T) / (T * T);
    const Vec c3 = (-2.0 * dq + (bd.v0 + bd.vT) * T) / (T * T * T);
    return {2.0 * c2, 6.0 * c3};
}

}  // namespace rsplines
