#pragma once

#include <array>
#include <cmath>

#include "rsplines/avoidance.hpp"
#include "rsplines/bvp.hpp"
#include "rsplines/rng.hpp"

namespace rsplines {

/// Fixed data of the R³ simulation: three covering centers on the unit
/// sphere, ball radius 0.3, bump shape (tau, k) = (100/e, 4), boundary data
/// over T = 1, Euler integration with h = 0.001.
struct SimulationSetup {
    std::vector<Vec> centers;
    double R = 0.3;
    double tau = 100.0 / M_E;
    int sharpness = 4;
    BoundaryData boundary;
    double h = 1e-3;
    StepMethod method = StepMethod::euler;

    // the obstacle: unit-sphere patch phi in (0, pi/4), theta in (0, pi/2)
    double phi_lo = 0.0, phi_hi = M_PI / 4.0;
    double theta_lo = 0.0, theta_hi = M_PI / 2.0;
};

inline SimulationSetup simulation_setup() {
    auto on_sphere = [](double phi, double theta) {
        Vec p(3);
        p << std::sin(phi) * std::sin(theta), std::sin(phi) * std::cos(theta), std::cos(phi);
        return p;
    };
    SimulationSetup setup;
    setup.centers = {on_sphere(M_PI / 12, M_PI / 4), on_sphere(M_PI / 5, M_PI / 9),
                     on_sphere(M_PI / 5, M_PI / 3)};
    Vec q0(3), v0(3), qT(3), vT(3);
    q0 << 0.0, 0.0, 0.0;
    v0 << 0.125, 0.125, 0.45;
    qT << 0.2, 0.5, 1.8;
    vT << 0.3, 0.25, 0.5;
    setup.boundary = BoundaryData{q0, v0, qT, vT, 1.0};
    return setup;
}

struct PatchCoverCheck {
    long samples = 0;
    long violations = 0;             // patch samples farther than R from every center
    double max_min_distance = 0.0;   // worst min-distance seen
};

/// Monte-Carlo check that the configured balls cover the sampled patch:
/// draws (phi, theta) uniformly over the parameter box and tests
/// min_i d(m, p_i) < R for the embedded point m.
inline PatchCoverCheck check_patch_cover(const SimulationSetup& setup, long n_samples,
                                         std::uint64_t seed) {
    PatchCoverCheck check;
    check.samples = n_samples;
    Rng rng(seed);
    for (long i = 0; i < n_samples; ++i) {
        const double phi = rng.uniform(setup.phi_lo, setup.phi_hi);
        const double theta = rng.uniform(setup.theta_lo, setup.theta_hi);
        Vec m(3);
        m << std::sin(phi) * std::sin(theta), std::sin(phi) * std::cos(theta), std::cos(phi);
        double dmin = std::numeric_limits<double>::infinity();
        for (const auto& c : setup.centers) dmin = std::min(dmin, (m - c).norm());
        check.max_min_distance = std::max(check.max_min_distance, dmin);
        if (!(dmin < setup.R)) ++check.violations;
    }
    return check;
}

struct ReproReport {
    PatchCoverCheck cover;
    ShootingResult shooting;
    std::vector<double> min_center_distance;  // per covering center
    std::vector<double> min_center_time;
    double action = 0.0;
    SimulationSetup setup;
};

struct ReproOptions {
    std::uint64_t seed = 0;
    long cover_samples = 10000;
    long max_evaluations = 60000;
    double tolerance = 1e-6;
    std::optional<StepMethod> method_override;
    std::optional<double> step_override;
};

/// Full reproduction pipeline: patch cover check with the hand-picked
/// centers, potential build, boundary-value shooting, and per-center
/// minimum-distance report.
inline ReproReport run_repro_sim(const ReproOptions& opts = {}) {
    ReproReport report;
    report.setup = simulation_setup();
    if (opts.method_override) report.setup.method = *opts.method_override;
    if (opts.step_override) report.setup.h = *opts.step_override;

    report.cover = check_patch_cover(report.setup, opts.cover_samples, opts.seed);

    const Chart chart = euclidean_chart(3);
    const PotentialSum sum = build_avoidance_potential(report.setup.centers, report.setup.R,
                                                       report.setup.tau, report.setup.sharpness);
    ShootOptions shoot_opts;
    shoot_opts.h = report.setup.h;
    shoot_opts.method = report.setup.method;
    shoot_opts.tolerance = opts.tolerance;
    shoot_opts.max_evaluations = opts.max_evaluations;
    report.shooting = shoot(chart, sum, report.setup.boundary, shoot_opts);

    for (const auto& c : report.setup.centers) {
        const auto [d, t] = min_distance(chart, report.shooting.trajectory,
                                         ObstacleCloud{{c}});
        report.min_center_distance.push_back(d);
        report.min_center_time.push_back(t);
    }
    report.action = action_value(chart, sum, report.shooting.trajectory);
    return report;
}

}  // namespace rsplines
