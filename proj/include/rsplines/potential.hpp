#pragma once

#include <cmath>
#include <vector>

#include "rsplines/manifold.hpp"

namespace rsplines {

/// One compactly supported repulsive bump. The radial profile is
///   V(d) = e · height · exp(−1 / (1 − (d/support_radius)^(2·sharpness)))
/// for d < support_radius and identically 0 beyond; the peak value at the
/// center is exactly `height`.
struct BumpSpec {
    Vec center;
    double support_radius = 0.0;  // D
    double height = 0.0;          // tau
    int sharpness = 1;            // k

    void validate() const {
        if (!(support_radius > 0.0)) throw validation_error("potential term: D must be > 0");
        if (!(height > 0.0)) throw validation_error("potential term: tau must be > 0");
        if (sharpness < 1) throw validation_error("potential term: k must be >= 1");
    }
};

/// Sum of bump terms; an empty list is the zero potential.
struct PotentialSum {
    std::vector<BumpSpec> terms;

    void validate(double sensing_radius = 0.0) const {
        for (const auto& t : terms) {
            t.validate();
            if (sensing_radius > 0.0 && t.support_radius > sensing_radius)
                throw validation_error(
                    "potential term: support radius D exceeds the sensing radius h");
        }
    }
};

namespace detail {

/// (d/D)^(2k) computed in log space; large k would overflow pow directly.
inline double bump_s(double d, double D, int k) {
    if (d <= 0.0) return 0.0;
    return std::exp(2.0 * k * std::log(d / D));
}

}  // namespace detail

/// Radial profile value at distance d from the center. Evaluated as
/// tau · exp(−s/(1−s)) with s = (d/D)^(2k), which equals the defining
/// e · tau · exp(−1/(1−s)) but is exact (= tau) at the center.
inline double bump_profile(double d, double D, double tau, int k) {
    if (d >= D) return 0.0;
    const double s = detail::bump_s(d, D, k);
    const double one_minus = 1.0 - s;
    if (one_minus < 1e-300) return 0.0;  // seam: exp(−s/(1−s)) underflows anyway
    return tau * std::exp(-s / one_minus);
}

/// dV/dd of the radial profile. Zero at d = 0 (even profile) and beyond D.
inline double bump_profile_derivative(double d, double D, double tau, int k) {
    if (d >= D || d <= 0.0) return 0.0;
    const double s = detail::bump_s(d, D, k);
    const double one_minus = 1.0 - s;
    if (one_minus < 1e-300) return 0.0;
    const double value = tau * std::exp(-s / one_minus);
    return -value * (2.0 * k * s) / (d * one_minus * one_minus);
}

inline double potential_value(const Chart& chart, const BumpSpec& spec, const Vec& q) {
    const double d =
        chart.flat ? (q - spec.center).norm() : chart.distance(spec.center, q);
    return bump_profile(d, spec.support_radius, spec.height, spec.sharpness);
}

/// Riemannian gradient of one bump at q; finite everywhere, exactly zero
/// outside the support and at the center.
inline Vec potential_gradient(const Chart& chart, const BumpSpec& spec, const Vec& q) {
    if (chart.flat) {
        const Vec radial = q - spec.center;
        const double d = radial.norm();
        if (d >= spec.support_radius || d < 1e-14) return Vec::Zero(chart.dim);
        const double dv =
            bump_profile_derivative(d, spec.support_radius, spec.height, spec.sharpness);
        return ((dv / d) * radial).eval();
    }
    const double d = chart.distance(spec.center, q);
    if (d >= spec.support_radius || d < 1e-14) return Vec::Zero(chart.dim);
    const double dv = bump_profile_derivative(d, spec.support_radius, spec.height, spec.sharpness);
    if (dv == 0.0) return Vec::Zero(chart.dim);
    return (dv * grad_distance_from(chart, spec.center, q)).eval();
}

inline double sum_value(const Chart& chart, const PotentialSum& sum, const Vec& q) {
    double v = 0.0;
    for (const auto& t : sum.terms) v += potential_value(chart, t, q);
    return v;
}

inline Vec sum_gradient(const Chart& chart, const PotentialSum& sum, const Vec& q) {
    Vec g = Vec::Zero(chart.dim);
    for (const auto& t : sum.terms) g += potential_gradient(chart, t, q);
    return g;
}

}  // namespace rsplines
