#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rsplines/errors.hpp"

namespace rsplines {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Christoffel symbols at a point: gamma[i](j,k) = Γ^i_{jk}, symmetric in (j,k).
struct Christoffel {
    std::vector<Mat> gamma;

    int dim() const { return static_cast<int>(gamma.size()); }

    /// Bilinear contraction Γ(x,y)^i = Γ^i_{jk} x^j y^k.
    Vec contract(const Vec& x, const Vec& y) const {
        Vec out(dim());
        for (int i = 0; i < dim(); ++i) out[i] = x.dot(gamma[i] * y);
        return out;
    }
};

/// A coordinate chart of a Riemannian manifold. All geometry the library
/// needs is carried as callables so users can register their own charts.
///
/// Conventions: curvature_apply(q, A, B, C) is the endomorphism
/// R(A,B)C = ∇_A ∇_B C − ∇_B ∇_A C − ∇_{[A,B]} C applied at q; with this
/// sign the unit sphere has sectional curvature +1.
struct Chart {
    std::string name;
    int dim = 0;
    bool flat = false;  // identity metric, vanishing Γ and R (fast paths)
    std::function<Mat(const Vec&)> metric_at;
    std::function<Christoffel(const Vec&)> christoffel_at;
    std::function<Vec(const Vec&, const Vec&, const Vec&, const Vec&)> curvature_apply;
    std::function<Vec(const Vec&, const Vec&)> exp_at;
    std::function<Vec(const Vec&, const Vec&)> log_at;   // partial: inside injectivity radius
    std::function<double(const Vec&, const Vec&)> distance;

    double norm_at(const Vec& q, const Vec& v) const {
        return std::sqrt(std::max(0.0, v.dot(metric_at(q) * v)));
    }
};

/// Flat R^n: identity metric, vanishing Γ and R, straight-line geodesics.
inline Chart euclidean_chart(int n) {
    if (n < 1) throw validation_error("euclidean_chart: dimension must be >= 1");
    Chart c;
    c.name = "euclidean:" + std::to_string(n);
    c.dim = n;
    c.flat = true;
    c.metric_at = [n](const Vec&) { return Mat::Identity(n, n); };
    c.christoffel_at = [n](const Vec&) {
        Christoffel ch;
        ch.gamma.assign(n, Mat::Zero(n, n));
        return ch;
    };
    c.curvature_apply = [n](const Vec&, const Vec&, const Vec&, const Vec&) {
        return Vec::Zero(n).eval();
    };
    c.exp_at = [](const Vec& q, const Vec& v) { return (q + v).eval(); };
    c.log_at = [](const Vec& q, const Vec& y) { return (y - q).eval(); };
    c.distance = [](const Vec& q, const Vec& y) { return (y - q).norm(); };
    return c;
}

namespace detail {

constexpr double kSpherePoleTol = 1e-9;

inline void check_sphere_point(const Vec& q) {
    if (std::abs(std::sin(q[0])) < kSpherePoleTol)
        throw chart_domain_error("sphere2: chart singular at the poles (sin(theta) ~ 0)");
}

/// Embedding of the (theta, phi) chart into the unit sphere in R^3.
inline Eigen::Vector3d sphere_embed(const Vec& q) {
    const double st = std::sin(q[0]), ct = std::cos(q[0]);
    const double sp = std::sin(q[1]), cp = std::cos(q[1]);
    return {st * cp, st * sp, ct};
}

/// Jacobian of the embedding; columns are the coordinate frame in R^3.
inline Eigen::Matrix<double, 3, 2> sphere_frame(const Vec& q) {
    const double st = std::sin(q[0]), ct = std::cos(q[0]);
    const double sp = std::sin(q[1]), cp = std::cos(q[1]);
    Eigen::Matrix<double, 3, 2> J;
    J.col(0) << ct * cp, ct * sp, -st;
    J.col(1) << -st * sp, st * cp, 0.0;
    return J;
}

/// Chart coordinates of a unit vector, with azimuth unwrapped to the
/// branch nearest `phi_ref`.
inline Vec sphere_unembed(const Eigen::Vector3d& x, double phi_ref) {
    const double z = std::min(1.0, std::max(-1.0, x[2]));
    const double theta = std::acos(z);
    if (std::abs(std::sin(theta)) < kSpherePoleTol)
        throw chart_domain_error("sphere2: result lies on the chart's singular set (pole)");
    double phi = std::atan2(x[1], x[0]);
    phi += 2.0 * M_PI * std::round((phi_ref - phi) / (2.0 * M_PI));
    Vec q(2);
    q << theta, phi;
    return q;
}

}  // namespace detail

/// Unit round 2-sphere in the polar/azimuth chart (theta, phi):
/// embedding (sin θ cos φ, sin θ sin φ, cos θ), metric diag(1, sin²θ).
/// The chart is singular at the poles sin θ = 0; evaluation there is
/// rejected. exp/log/distance are computed through the embedding, so the
/// distance is the exact great-circle angle; log is defined for angles
/// strictly below π (the injectivity radius).
inline Chart sphere_chart() {
    Chart c;
    c.name = "sphere2";
    c.dim = 2;
    c.metric_at = [](const Vec& q) {
        detail::check_sphere_point(q);
        Mat g = Mat::Zero(2, 2);
        g(0, 0) = 1.0;
        g(1, 1) = std::sin(q[0]) * std::sin(q[0]);
        return g;
    };
    c.christoffel_at = [](const Vec& q) {
        detail::check_sphere_point(q);
        const double st = std::sin(q[0]), ct = std::cos(q[0]);
        Christoffel ch;
        ch.gamma.assign(2, Mat::Zero(2, 2));
        ch.gamma[0](1, 1) = -st * ct;
        ch.gamma[1](0, 1) = ch.gamma[1](1, 0) = ct / st;
        return ch;
    };
    c.curvature_apply = [](const Vec& q, const Vec& A, const Vec& B, const Vec& C) {
        detail::check_sphere_point(q);
        Mat g = Mat::Zero(2, 2);
        g(0, 0) = 1.0;
        g(1, 1) = std::sin(q[0]) * std::sin(q[0]);
        // constant sectional curvature +1: R(A,B)C = g(B,C) A − g(A,C) B
        return (B.dot(g * C) * A - A.dot(g * C) * B).eval();
    };
    c.exp_at = [](const Vec& q, const Vec& v) {
        detail::check_sphere_point(q);
        const Eigen::Vector3d x = detail::sphere_embed(q);
        const Eigen::Vector3d vh = detail::sphere_frame(q) * v;
        const double s = vh.norm();
        if (s < 1e-300) return q;
        const Eigen::Vector3d y = std::cos(s) * x + (std::sin(s) / s) * vh;
        return detail::sphere_unembed(y, q[1]);
    };
    c.log_at = [](const Vec& q, const Vec& y) {
        detail::check_sphere_point(q);
        detail::check_sphere_point(y);
        const Eigen::Vector3d xq = detail::sphere_embed(q);
        const Eigen::Vector3d xy = detail::sphere_embed(y);
        const double angle = std::atan2(xq.cross(xy).norm(), xq.dot(xy));
        if (angle > M_PI - 1e-9)
            throw singularity_error("sphere2: log undefined at/near the antipode");
        if (angle < 1e-300) return Vec::Zero(2).eval();
        const Eigen::Vector3d u = (xy - xq.dot(xy) * xq).normalized();
        const Eigen::Vector3d vh = angle * u;
        const auto J = detail::sphere_frame(q);
        const Mat g = (J.transpose() * J).eval();
        return g.ldlt().solve(J.transpose() * vh).eval();
    };
    c.distance = [](const Vec& q, const Vec& y) {
        detail::check_sphere_point(q);
        detail::check_sphere_point(y);
        const Eigen::Vector3d xq = detail::sphere_embed(q);
        const Eigen::Vector3d xy = detail::sphere_embed(y);
        return std::atan2(xq.cross(xy).norm(), xq.dot(xy));
    };
    return c;
}

/// Γ from metric partial derivatives (Levi-Civita), central differences.
inline Christoffel christoffel_from_metric(const std::function<Mat(const Vec&)>& metric,
                                           const Vec& q, double step = 1e-5) {
    const int n = static_cast<int>(q.size());
    std::vector<Mat> dg(n);  // dg[l] = ∂_l g
    for (int l = 0; l < n; ++l) {
        Vec qp = q, qm = q;
        qp[l] += step;
        qm[l] -= step;
        dg[l] = (metric(qp) - metric(qm)) / (2.0 * step);
    }
    const Mat ginv = metric(q).inverse();
    Christoffel ch;
    ch.gamma.assign(n, Mat::Zero(n, n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double s = 0.0;
                for (int l = 0; l < n; ++l)
                    s += ginv(i, l) * (dg[j](l, k) + dg[k](l, j) - dg[l](j, k));
                ch.gamma[i](j, k) = 0.5 * s;
            }
    return ch;
}

/// R(A,B)C assembled from Γ by the coordinate formula
/// R^i_{abc} = ∂_a Γ^i_{bc} − ∂_b Γ^i_{ac} + Γ^i_{am}Γ^m_{bc} − Γ^i_{bm}Γ^m_{ac}.
inline Vec curvature_from_christoffel(const std::function<Christoffel(const Vec&)>& christoffel,
                                      const Vec& q, const Vec& A, const Vec& B, const Vec& C,
                                      double step = 1e-4) {
    const int n = static_cast<int>(q.size());
    const Christoffel G = christoffel(q);
    std::vector<Christoffel> dG(n);  // dG[a] = ∂_a Γ
    for (int a = 0; a < n; ++a) {
        Vec qp = q, qm = q;
        qp[a] += step;
        qm[a] -= step;
        const Christoffel Gp = christoffel(qp), Gm = christoffel(qm);
        dG[a].gamma.resize(n);
        for (int i = 0; i < n; ++i) dG[a].gamma[i] = (Gp.gamma[i] - Gm.gamma[i]) / (2.0 * step);
    }
    Vec out = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int cc = 0; cc < n; ++cc) {
                    double Ri = dG[a].gamma[i](b, cc) - dG[b].gamma[i](a, cc);
                    for (int m = 0; m < n; ++m)
                        Ri += G.gamma[i](a, m) * G.gamma[m](b, cc) -
                              G.gamma[i](b, m) * G.gamma[m](a, cc);
                    acc += Ri * A[a] * B[b] * C[cc];
                }
        out[i] = acc;
    }
    return out;
}

/// Build a chart from a metric alone: Γ and R fall back to central finite
/// differences (step 1e-5 on the metric), exp integrates the geodesic
/// equation. log and distance are not derivable from the metric in closed
/// form and are left unsupported.
inline Chart chart_from_metric(int dim, std::function<Mat(const Vec&)> metric,
                               std::string name = "metric-chart") {
    if (dim < 1) throw validation_error("chart_from_metric: dimension must be >= 1");
    Chart c;
    c.name = std::move(name);
    c.dim = dim;
    c.metric_at = metric;
    c.christoffel_at = [metric](const Vec& q) {
        return christoffel_from_metric(metric, q, 1e-5);
    };
    auto christoffel = c.christoffel_at;
    c.curvature_apply = [christoffel](const Vec& q, const Vec& A, const Vec& B, const Vec& C) {
        return curvature_from_christoffel(christoffel, q, A, B, C, 1e-4);
    };
    c.exp_at = [christoffel](const Vec& q0, const Vec& v0) {
        // geodesic equation q̈ = −Γ(q̇, q̇), classical RK4, fixed substeps
        const int steps = 256;
        const double h = 1.0 / steps;
        Vec q = q0, v = v0;
        auto rhs = [&](const Vec& qq, const Vec& vv, Vec& dq, Vec& dv) {
            dq = vv;
            dv = -christoffel(qq).contract(vv, vv);
        };
        Vec k1q, k1v, k2q, k2v, k3q, k3v, k4q, k4v;
        for (int i = 0; i < steps; ++i) {
            rhs(q, v, k1q, k1v);
            rhs(q + 0.5 * h * k1q, v + 0.5 * h * k1v, k2q, k2v);
            rhs(q + 0.5 * h * k2q, v + 0.5 * h * k2v, k3q, k3v);
            rhs(q + h * k3q, v + h * k3v, k4q, k4v);
            q += (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
            v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        return q;
    };
    const std::string nm = c.name;
    c.log_at = [nm](const Vec&, const Vec&) -> Vec {
        throw validation_error("chart '" + nm + "' built from a metric only: log unavailable");
    };
    c.distance = [nm](const Vec&, const Vec&) -> double {
        throw validation_error("chart '" + nm + "' built from a metric only: distance unavailable");
    };
    return c;
}

/// Gradient at q of the distance-to-p function m ↦ d(p, m): the unit
/// outward radial vector −log_q(p)/d(p,q). Undefined at q = p.
inline Vec grad_distance_from(const Chart& chart, const Vec& p, const Vec& q) {
    const double d = chart.distance(p, q);
    if (d < 1e-14)
        throw singularity_error("grad_distance_from: gradient undefined at the base point");
    return (-chart.log_at(q, p) / d).eval();
}

/// Resolve "euclidean:n" / "sphere2" names used by scenario files.
inline Chart chart_by_name(const std::string& name) {
    if (name == "sphere2") return sphere_chart();
    const std::string prefix = "euclidean:";
    if (name.rfind(prefix, 0) == 0) {
        const std::string num = name.substr(prefix.size());
        try {
            std::size_t pos = 0;
            const int n = std::stoi(num, &pos);
            if (pos == num.size() && n >= 1) return euclidean_chart(n);
        } catch (const std::exception&) {
        }
    }
    throw validation_error("unknown chart name '" + name +
                           "' (expected 'euclidean:<n>' or 'sphere2')");
}

}  // namespace rsplines
