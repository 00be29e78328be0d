#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "rsplines/integrator.hpp"
#include "rsplines/rng.hpp"

namespace rsplines {

/// Nested tolerance radii around an obstacle: collision r, risk r*, safety R.
struct ToleranceBands {
    double r = 0.0;
    double r_star = 0.0;
    double R = 0.0;

    void validate() const {
        if (!(0.0 < r && r < r_star && r_star < R))
            throw validation_error("tolerance bands: need 0 < r < r_star < R");
    }
};

/// Finite point sample standing in for an obstacle set; the set distance
/// d(q, P) is the minimum over the sample.
struct ObstacleCloud {
    std::vector<Vec> points;

    void validate() const {
        if (points.empty()) throw validation_error("obstacle cloud: must be non-empty");
    }
};

inline double cloud_distance(const Chart& chart, const Vec& q, const ObstacleCloud& obs) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : obs.points) best = std::min(best, chart.distance(q, p));
    return best;
}

/// Minimum of d(q(t), P) over the trajectory samples and its argmin time.
inline std::pair<double, double> min_distance(const Chart& chart, const Trajectory& traj,
                                              const ObstacleCloud& obs) {
    obs.validate();
    if (!traj.states.empty() && obs.points.front().size() != traj.front().q.size())
        throw validation_error("min_distance: trajectory and cloud dimensions differ");
    double best = std::numeric_limits<double>::infinity();
    double at = traj.times.empty() ? 0.0 : traj.times.front();
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double d = cloud_distance(chart, traj.states[i].q, obs);
        if (d < best) {
            best = d;
            at = traj.times[i];
        }
    }
    return {best, at};
}

/// Avoidance certificate: constants of the reference-trajectory bound and
/// the threshold inequality. satisfied ⇔ V_star_lower > threshold, in which
/// case every action minimizer clears the collision radius r.
struct Certificate {
    double a = 0.0;             // sup of the reference's covariant acceleration norm
    double c = 0.0;             // (a² + V_minus) T
    double v = 0.0;             // √(cT) + √(cT + ‖v0‖²)
    double threshold = 0.0;     // c v / (2 (r_star − r))
    double V_star_lower = 0.0;  // certified lower bound of the potential on the risk region
    double V_minus = 0.0;       // certified upper bound of the potential on the safety region
    bool satisfied = false;
    ToleranceBands bands;
};

namespace detail {

/// Lower bound of the summed potential over the risk ball of each term
/// center: own term at radius r_star, other terms at d(centers) + r_star.
inline double risk_region_lower_bound(const Chart& chart, const PotentialSum& sum,
                                      double r_star) {
    if (sum.terms.empty()) return 0.0;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sum.terms.size(); ++i) {
        double bound = 0.0;
        for (std::size_t j = 0; j < sum.terms.size(); ++j) {
            const auto& tj = sum.terms[j];
            const double radius =
                i == j ? r_star
                       : chart.distance(sum.terms[i].center, tj.center) + r_star;
            bound += bump_profile(radius, tj.support_radius, tj.height, tj.sharpness);
        }
        worst = std::min(worst, bound);
    }
    return worst;
}

/// Upper bound of the summed potential outside distance R of every center:
/// terms supported within R contribute 0, wider terms at most their value
/// at radius R.
inline double safety_region_upper_bound(const PotentialSum& sum, double R) {
    double bound = 0.0;
    for (const auto& t : sum.terms)
        if (t.support_radius > R)
            bound += bump_profile(R, t.support_radius, t.height, t.sharpness);
    return bound;
}

}  // namespace detail

/// Evaluate the avoidance certificate for a reference trajectory that stays
/// in the safety region (distance > R from every term center for all
/// samples; violations are a precondition error naming the first bad time).
inline Certificate certify(const Chart& chart, const Trajectory& reference,
                           const PotentialSum& sum, const ToleranceBands& bands, double v0_norm,
                           double T) {
    bands.validate();
    for (std::size_t i = 0; i < reference.size(); ++i) {
        for (const auto& term : sum.terms) {
            const double d = chart.distance(reference.states[i].q, term.center);
            if (d <= bands.R)
                throw validation_error(
                    "certify: reference trajectory leaves the safety region at t = " +
                    std::to_string(reference.times[i]) + " (distance " + std::to_string(d) +
                    " <= R)");
        }
    }

    Certificate cert;
    cert.bands = bands;
    for (const auto& s : reference.states)
        cert.a = std::max(cert.a, chart.norm_at(s.q, s.a));
    cert.V_minus = detail::safety_region_upper_bound(sum, bands.R);
    cert.c = (cert.a * cert.a + cert.V_minus) * T;
    const double cT = cert.c * T;
    cert.v = std::sqrt(cT) + std::sqrt(cT + v0_norm * v0_norm);
    cert.threshold = cert.c * cert.v / (2.0 * (bands.r_star - bands.r));
    cert.V_star_lower = detail::risk_region_lower_bound(chart, sum, bands.r_star);
    cert.satisfied = cert.V_star_lower > cert.threshold;
    return cert;
}

/// Reference-trajectory constants the certificate needs.
struct CertificateInputs {
    double accel_bound = 0.0;  // a
    double v0_norm = 0.0;
    double T = 1.0;
    double v_minus = 0.0;  // safety-region potential bound (0 for supports within R)
};

inline CertificateInputs make_certificate_inputs(const Chart& chart,
                                                 const Trajectory& reference) {
    CertificateInputs in;
    in.T = reference.duration();
    for (const auto& s : reference.states)
        in.accel_bound = std::max(in.accel_bound, chart.norm_at(s.q, s.a));
    const JetState& s0 = reference.front();
    in.v0_norm = chart.norm_at(s0.q, s0.v);
    return in;
}

/// Search grid for (tau, k). Lexicographic (k, tau) order: the smallest
/// sharpness that certifies wins, then the smallest height.
struct ParameterGrid {
    std::vector<double> taus = {1.0,    2.0,    5.0,    10.0,   20.0,  50.0,
                                100.0,  200.0,  500.0,  1000.0, 2000.0, 5000.0,
                                10000.0, 20000.0, 50000.0, 100000.0};
    std::vector<int> ks = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
};

struct SelectionResult {
    bool feasible = false;
    double tau = 0.0;
    int k = 0;
    double threshold = 0.0;      // Prop-style threshold the pair must beat by 10%
    double v_star_lower = 0.0;   // achieved bound for the returned pair
};

/// Pick the smallest (k, tau) on the grid whose single-obstacle certificate
/// with support D = R holds with strict margin >= 10%. Infeasible grids are
/// reported, not thrown.
inline SelectionResult select_parameters(const ToleranceBands& bands, double h_sense,
                                         const CertificateInputs& in,
                                         const ParameterGrid& grid = {}) {
    bands.validate();
    if (h_sense > 0.0 && bands.R > h_sense)
        throw validation_error("select_parameters: need R <= sensing radius h");

    SelectionResult out;
    const double c = (in.accel_bound * in.accel_bound + in.v_minus) * in.T;
    const double cT = c * in.T;
    const double v = std::sqrt(cT) + std::sqrt(cT + in.v0_norm * in.v0_norm);
    out.threshold = c * v / (2.0 * (bands.r_star - bands.r));

    for (int k : grid.ks) {
        for (double tau : grid.taus) {
            const double v_star = bump_profile(bands.r_star, bands.R, tau, k);
            if (v_star > 1.1 * out.threshold) {
                out.feasible = true;
                out.tau = tau;
                out.k = k;
                out.v_star_lower = v_star;
                return out;
            }
        }
    }
    return out;
}

/// One bump per covering center, shared support R and shape (tau, k).
inline PotentialSum build_avoidance_potential(const std::vector<Vec>& centers, double R,
                                              double tau, int k) {
    PotentialSum sum;
    sum.terms.reserve(centers.size());
    for (const auto& c : centers) sum.terms.push_back(BumpSpec{c, R, tau, k});
    return sum;
}

namespace detail {

/// Deterministic well-spread direction sets in chart coordinates:
/// dim 1 the two signs, dim 2 equal angles, dim 3 a Fibonacci sphere,
/// higher dims seeded Gaussian directions.
inline std::vector<Vec> direction_set(int dim, int count, std::uint64_t seed) {
    std::vector<Vec> dirs;
    if (dim == 1) {
        Vec plus(1), minus(1);
        plus << 1.0;
        minus << -1.0;
        dirs = {plus, minus};
    } else if (dim == 2) {
        dirs.reserve(count);
        for (int i = 0; i < count; ++i) {
            const double ang = 2.0 * M_PI * i / count;
            Vec d(2);
            d << std::cos(ang), std::sin(ang);
            dirs.push_back(d);
        }
    } else if (dim == 3) {
        dirs.reserve(count);
        const double golden = M_PI * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < count; ++i) {
            const double z = 1.0 - 2.0 * (i + 0.5) / count;
            const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double ang = golden * i;
            Vec d(3);
            d << rho * std::cos(ang), rho * std::sin(ang), z;
            dirs.push_back(d);
        }
    } else {
        Rng rng(seed);
        dirs.reserve(count);
        for (int i = 0; i < count; ++i) dirs.push_back(rng.unit_vector(dim));
    }
    return dirs;
}

/// Rescale a coordinate direction to unit Riemannian norm at q.
inline Vec metric_normalize(const Chart& chart, const Vec& q, const Vec& d) {
    const double n = chart.norm_at(q, d);
    if (n < 1e-300) throw singularity_error("metric_normalize: zero direction");
    return (d / n).eval();
}

}  // namespace detail

struct CoverOptions {
    int directions = 0;       // 0 → per-dimension default
    int max_sources = 512;    // cloud points used to seed boundary samples
    double reject_epsilon = 1e-3;
    std::uint64_t seed = 0;   // only used for dim >= 4 direction sets
};

struct Cover {
    std::vector<Vec> centers;            // selected generators p_i ⊂ P
    std::vector<int> generator_indices;  // indices into the cloud
    double r_star = 0.0;
    double delta = 0.0;
    std::size_t boundary_samples = 0;
    std::size_t net_size = 0;
};

/// Covering construction for a totally bounded obstacle sample: offset cloud
/// points distance r along a well-spread direction set to sample the outer
/// boundary shell, thin the surviving samples to a greedy delta-net, and
/// keep each net point's generating cloud point as a center. The radii are
/// delta = (R − 2r)/2 and r_star = (2r + delta + R)/2.
inline Cover cover_obstacle(const Chart& chart, const ObstacleCloud& obs, double r, double R,
                            const CoverOptions& opts = {}) {
    obs.validate();
    if (!(r > 0.0) || !(R > 0.0) || !(r < R / 2.0))
        throw validation_error("cover_obstacle: need 0 < r < R/2");

    Cover cover;
    cover.delta = (R - 2.0 * r) / 2.0;
    cover.r_star = (2.0 * r + cover.delta + R) / 2.0;

    // boundary shell samples, each remembering its generating cloud index
    const int dim = chart.dim;
    int n_dirs = opts.directions;
    if (n_dirs <= 0) n_dirs = dim == 1 ? 2 : (dim == 2 ? 64 : (dim == 3 ? 128 : 256));
    const std::vector<Vec> dirs = detail::direction_set(dim, n_dirs, opts.seed);

    std::vector<int> sources(obs.points.size());
    for (std::size_t i = 0; i < sources.size(); ++i) sources[i] = static_cast<int>(i);
    if (static_cast<int>(sources.size()) > opts.max_sources) {
        // deterministic farthest-point thinning of the source set
        std::vector<int> picked = {0};
        std::vector<double> dist(sources.size(), std::numeric_limits<double>::infinity());
        while (static_cast<int>(picked.size()) < opts.max_sources) {
            int far = -1;
            double far_d = -1.0;
            for (std::size_t i = 0; i < sources.size(); ++i) {
                dist[i] = std::min(dist[i],
                                   chart.distance(obs.points[i], obs.points[picked.back()]));
                if (dist[i] > far_d) {
                    far_d = dist[i];
                    far = static_cast<int>(i);
                }
            }
            if (far_d <= 0.0) break;
            picked.push_back(far);
        }
        sources = picked;
    }

    std::vector<Vec> shell;
    std::vector<int> shell_gen;
    for (int src : sources) {
        const Vec& p = obs.points[src];
        for (const auto& d : dirs) {
            Vec x;
            try {
                x = chart.exp_at(p, r * detail::metric_normalize(chart, p, d));
            } catch (const chart_domain_error&) {
                continue;  // offset left the chart; skip this direction
            }
            if (cloud_distance(chart, x, obs) >= r * (1.0 - opts.reject_epsilon)) {
                shell.push_back(x);
                shell_gen.push_back(src);
            }
        }
    }
    cover.boundary_samples = shell.size();

    // greedy farthest-point delta-net over the shell samples
    std::vector<int> net;
    if (!shell.empty()) {
        net.push_back(0);
        std::vector<double> dist(shell.size(), std::numeric_limits<double>::infinity());
        for (;;) {
            int far = -1;
            double far_d = -1.0;
            for (std::size_t i = 0; i < shell.size(); ++i) {
                dist[i] = std::min(dist[i], chart.distance(shell[i], shell[net.back()]));
                if (dist[i] > far_d) {
                    far_d = dist[i];
                    far = static_cast<int>(i);
                }
            }
            if (far_d <= cover.delta) break;
            net.push_back(far);
        }
    }
    cover.net_size = net.size();

    // each net point keeps its generator; deduplicate by cloud index
    std::vector<int> gens;
    for (int idx : net) {
        const int g = shell_gen[idx];
        if (std::find(gens.begin(), gens.end(), g) == gens.end()) gens.push_back(g);
    }
    for (int g : gens) {
        cover.generator_indices.push_back(g);
        cover.centers.push_back(obs.points[g]);
    }
    return cover;
}

/// Interior grid sample of the unit-sphere patch
/// (sin φ sin θ, sin φ cos θ, cos φ), φ ∈ (phi_lo, phi_hi), θ ∈ (theta_lo, theta_hi),
/// as a cloud in R³.
inline ObstacleCloud sample_spherical_patch(double phi_lo, double phi_hi, double theta_lo,
                                            double theta_hi, int n_phi, int n_theta) {
    if (n_phi < 1 || n_theta < 1)
        throw validation_error("sample_spherical_patch: need at least one sample per axis");
    ObstacleCloud cloud;
    cloud.points.reserve(static_cast<std::size_t>(n_phi) * n_theta);
    for (int i = 1; i <= n_phi; ++i)
        for (int j = 1; j <= n_theta; ++j) {
            const double phi = phi_lo + (phi_hi - phi_lo) * i / (n_phi + 1.0);
            const double theta = theta_lo + (theta_hi - theta_lo) * j / (n_theta + 1.0);
            Vec p(3);
            p << std::sin(phi) * std::sin(theta), std::sin(phi) * std::cos(theta),
                std::cos(phi);
            cloud.points.push_back(p);
        }
    return cloud;
}

struct CoverCheck {
    long samples = 0;
    long inner_violations = 0;   // B_r(P) points not within r_star of a center
    long outer_violations = 0;   // r_star-ball points farther than R from P
    double max_min_center_distance = 0.0;
    double max_cloud_distance = 0.0;
};

/// Monte-Carlo verification of B_r(P) ⊂ ∪ B_{r*}(p_i) ⊂ B_R(P) on sampled
/// points; deterministic for a fixed seed.
inline CoverCheck verify_cover(const Chart& chart, const ObstacleCloud& obs,
                               const std::vector<Vec>& centers, double r, double r_star,
                               double R, long n_samples, std::uint64_t seed) {
    obs.validate();
    if (centers.empty()) throw validation_error("verify_cover: no centers");
    CoverCheck check;
    check.samples = n_samples;
    Rng rng(seed);
    const int dim = chart.dim;

    auto ball_point = [&](const Vec& base, double radius) {
        const Vec dir = detail::metric_normalize(chart, base, rng.unit_vector(dim));
        const double u = radius * std::pow(rng.uniform01(), 1.0 / dim);
        return chart.exp_at(base, u * dir);
    };

    for (long s = 0; s < n_samples; ++s) {
        // inner check: sample of B_r(P)
        const Vec& p = obs.points[rng.integer(obs.points.size())];
        Vec m;
        try {
            m = ball_point(p, r);
        } catch (const chart_domain_error&) {
            --s;  // resample points that fall off the chart
            continue;
        }
        double dmin = std::numeric_limits<double>::infinity();
        for (const auto& c : centers) dmin = std::min(dmin, chart.distance(m, c));
        check.max_min_center_distance = std::max(check.max_min_center_distance, dmin);
        if (!(dmin < r_star)) ++check.inner_violations;

        // outer check: sample of ∪ B_{r*}(p_i)
        const Vec& c = centers[rng.integer(centers.size())];
        Vec x;
        try {
            x = ball_point(c, r_star);
        } catch (const chart_domain_error&) {
            continue;
        }
        const double dcloud = cloud_distance(chart, x, obs);
        check.max_cloud_distance = std::max(check.max_cloud_distance, dcloud);
        if (!(dcloud < R)) ++check.outer_violations;
    }
    return check;
}

}  // namespace rsplines
