#pragma once

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rsplines/avoidance.hpp"
#include "rsplines/bvp.hpp"

namespace rsplines {

/// A guard: the finite cloud drives avoidance potentials, the membership
/// predicate drives crossing detection.
struct Guard {
    ObstacleCloud cloud;
    std::function<bool(const Vec&)> membership;
};

/// Affine reset (q, v) → (Aq + b, Mv + c) applied at guard contact.
struct ResetMap {
    Mat pos_linear;
    Vec pos_offset;
    Mat vel_linear;
    Vec vel_offset;

    static ResetMap identity(int n) {
        return {Mat::Identity(n, n), Vec::Zero(n), Mat::Identity(n, n), Vec::Zero(n)};
    }
    static ResetMap translation(const Vec& shift) {
        const int n = static_cast<int>(shift.size());
        return {Mat::Identity(n, n), shift, Mat::Identity(n, n), Vec::Zero(n)};
    }

    std::pair<Vec, Vec> apply(const Vec& q, const Vec& v) const {
        return {pos_linear * q + pos_offset, vel_linear * v + vel_offset};
    }
};

struct HybridVertex {
    std::string id;
    Chart chart;
};

struct HybridEdge {
    std::string from, to;
    Guard guard;
    ResetMap reset;
};

struct HybridSystem {
    std::vector<HybridVertex> vertices;
    std::vector<HybridEdge> edges;

    const HybridVertex& vertex(const std::string& id) const {
        for (const auto& v : vertices)
            if (v.id == id) return v;
        throw validation_error("hybrid system: unknown vertex '" + id + "'");
    }

    std::vector<int> out_edges(const std::string& id) const {
        std::vector<int> out;
        for (std::size_t e = 0; e < edges.size(); ++e)
            if (edges[e].from == id) out.push_back(static_cast<int>(e));
        return out;
    }

    /// Structural checks: known endpoints, non-empty guard clouds, and the
    /// underlying undirected graph connected.
    void validate() const {
        if (vertices.empty()) throw validation_error("hybrid system: no vertices");
        for (const auto& e : edges) {
            vertex(e.from);
            vertex(e.to);
            e.guard.cloud.validate();
            if (!e.guard.membership)
                throw validation_error("hybrid system: edge " + e.from + "->" + e.to +
                                       " has no membership predicate");
        }
        if (vertices.size() > 1) {
            std::map<std::string, std::vector<std::string>> undirected;
            for (const auto& e : edges) {
                undirected[e.from].push_back(e.to);
                undirected[e.to].push_back(e.from);
            }
            std::deque<std::string> frontier{vertices.front().id};
            std::vector<std::string> seen{vertices.front().id};
            while (!frontier.empty()) {
                const std::string cur = frontier.front();
                frontier.pop_front();
                for (const auto& nxt : undirected[cur])
                    if (std::find(seen.begin(), seen.end(), nxt) == seen.end()) {
                        seen.push_back(nxt);
                        frontier.push_back(nxt);
                    }
            }
            if (seen.size() != vertices.size())
                throw validation_error("hybrid system: graph is not connected");
        }
    }

    /// Shortest directed path (vertex ids, inclusive). Throws if unreachable.
    std::vector<std::string> find_path(const std::string& from, const std::string& to) const {
        vertex(from);
        vertex(to);
        if (from == to) return {from};
        std::map<std::string, std::string> parent;
        std::deque<std::string> frontier{from};
        parent[from] = from;
        while (!frontier.empty()) {
            const std::string cur = frontier.front();
            frontier.pop_front();
            for (int e : out_edges(cur)) {
                const std::string& nxt = edges[e].to;
                if (parent.count(nxt)) continue;
                parent[nxt] = cur;
                if (nxt == to) {
                    std::vector<std::string> path{to};
                    while (path.back() != from) path.push_back(parent[path.back()]);
                    std::reverse(path.begin(), path.end());
                    return path;
                }
                frontier.push_back(nxt);
            }
        }
        throw validation_error("hybrid system: no directed path " + from + " -> " + to);
    }

    int edge_between(const std::string& from, const std::string& to) const {
        for (std::size_t e = 0; e < edges.size(); ++e)
            if (edges[e].from == from && edges[e].to == to) return static_cast<int>(e);
        throw validation_error("hybrid system: no edge " + from + " -> " + to);
    }
};

// ---------------------------------------------------------------------------
// membership primitives for scenario files

inline std::function<bool(const Vec&)> halfspace_membership(const Vec& normal, double offset) {
    return [normal, offset](const Vec& q) { return normal.dot(q) - offset > 0.0; };
}

inline std::function<bool(const Vec&)> ball_membership(const Vec& center, double radius) {
    return [center, radius](const Vec& q) { return (q - center).norm() < radius; };
}

/// Proximity to the unit-sphere patch used by the R³ simulation: member iff
/// the distance to the (angle-clamped) nearest patch point is below the
/// thickness.
inline std::function<bool(const Vec&)> spherical_patch_membership(double phi_lo, double phi_hi,
                                                                  double theta_lo,
                                                                  double theta_hi,
                                                                  double thickness) {
    return [=](const Vec& q) {
        const double rho = q.norm();
        if (rho < 1e-12) return false;
        const double phi = std::acos(std::min(1.0, std::max(-1.0, q[2] / rho)));
        double theta = std::atan2(q[0], q[1]);  // embedding measures azimuth from +y
        const double phi_c = std::min(phi_hi, std::max(phi_lo, phi));
        double theta_c = std::min(theta_hi, std::max(theta_lo, theta));
        Vec nearest(3);
        nearest << std::sin(phi_c) * std::sin(theta_c), std::sin(phi_c) * std::cos(theta_c),
            std::cos(phi_c);
        return (q - nearest).norm() < thickness;
    };
}

// ---------------------------------------------------------------------------
// zeno exclusion

struct ZenoOffender {
    int edge_index = -1;
    int sample_index = -1;
    double distance = 0.0;
};

struct ZenoReport {
    bool pass = true;
    double margin = 0.0;
    std::vector<ZenoOffender> offenders;
};

/// Check that every reset image of every guard sample keeps at least
/// `margin` distance from all guards leaving the target vertex; violations
/// are reported, not thrown.
inline ZenoReport validate_zeno(const HybridSystem& sys, double margin) {
    ZenoReport report;
    report.margin = margin;
    for (std::size_t e = 0; e < sys.edges.size(); ++e) {
        const HybridEdge& edge = sys.edges[e];
        const Chart& target_chart = sys.vertex(edge.to).chart;
        const auto next_edges = sys.out_edges(edge.to);
        if (next_edges.empty()) continue;
        for (std::size_t i = 0; i < edge.guard.cloud.points.size(); ++i) {
            const Vec& x = edge.guard.cloud.points[i];
            const Vec image =
                edge.reset.apply(x, Vec::Zero(static_cast<int>(x.size()))).first;
            for (int f : next_edges) {
                const double d = cloud_distance(target_chart, image, sys.edges[f].guard.cloud);
                if (d < margin) {
                    report.pass = false;
                    report.offenders.push_back(
                        {static_cast<int>(e), static_cast<int>(i), d});
                }
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// crossing detection

/// Interpolated jet at time t inside a stored trajectory: cubic Hermite in
/// position and velocity (endpoint derivatives from the stored jets), linear
/// in acceleration and jerk.
inline JetState trajectory_state_at(const Chart& chart, const Trajectory& traj, double t) {
    if (traj.size() == 0) throw validation_error("trajectory_state_at: empty trajectory");
    if (t <= traj.times.front()) return traj.front();
    if (t >= traj.times.back()) return traj.back();
    std::size_t i = 1;
    while (traj.times[i] < t) ++i;
    const double t0 = traj.times[i - 1], t1 = traj.times[i];
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    const JetState& A = traj.states[i - 1];
    const JetState& B = traj.states[i];

    auto hermite = [&](const Vec& p0, const Vec& d0, const Vec& p1, const Vec& d1) {
        const double h00 = 2 * s * s * s - 3 * s * s + 1;
        const double h10 = s * s * s - 2 * s * s + s;
        const double h01 = -2 * s * s * s + 3 * s * s;
        const double h11 = s * s * s - s * s;
        return (h00 * p0 + h10 * h * d0 + h01 * p1 + h11 * h * d1).eval();
    };

    JetState out;
    out.q = hermite(A.q, A.v, B.q, B.v);
    // coordinate accelerations as the velocity slopes
    const Vec dv0 =
        chart.flat ? A.a : (A.a - chart.christoffel_at(A.q).contract(A.v, A.v)).eval();
    const Vec dv1 =
        chart.flat ? B.a : (B.a - chart.christoffel_at(B.q).contract(B.v, B.v)).eval();
    out.v = hermite(A.v, dv0, B.v, dv1);
    out.a = (1.0 - s) * A.a + s * B.a;
    out.j = (1.0 - s) * A.j + s * B.j;
    return out;
}

/// Prefix of a trajectory up to t_cut, with the clipped state appended as a
/// final (event-aligned) sample.
inline Trajectory clip_trajectory(const Chart& chart, const Trajectory& traj, double t_cut) {
    Trajectory out;
    out.chart = traj.chart;
    for (std::size_t i = 0; i < traj.size() && traj.times[i] < t_cut - 1e-12; ++i) {
        out.times.push_back(traj.times[i]);
        out.states.push_back(traj.states[i]);
    }
    out.times.push_back(t_cut);
    out.states.push_back(trajectory_state_at(chart, traj, t_cut));
    return out;
}

struct GuardCrossing {
    double time = 0.0;
    JetState state;
};

/// First membership flip along the trajectory, bisected to time tolerance.
/// The trajectory must start outside the guard. Flips shorter than one
/// integration step can be missed (sample-based detection).
inline std::optional<GuardCrossing> detect_crossing(const Chart& chart, const Trajectory& traj,
                                                    const Guard& guard,
                                                    double time_tol = 1e-9) {
    if (traj.size() == 0) return std::nullopt;
    if (guard.membership(traj.front().q))
        throw validation_error("detect_crossing: trajectory starts inside the guard");
    std::size_t hit = 0;
    for (std::size_t i = 1; i < traj.size(); ++i)
        if (guard.membership(traj.states[i].q)) {
            hit = i;
            break;
        }
    if (hit == 0) return std::nullopt;

    double lo = traj.times[hit - 1], hi = traj.times[hit];
    while (hi - lo > time_tol) {
        const double mid = 0.5 * (lo + hi);
        if (guard.membership(trajectory_state_at(chart, traj, mid).q))
            hi = mid;
        else
            lo = mid;
    }
    GuardCrossing crossing;
    crossing.time = hi;
    crossing.state = trajectory_state_at(chart, traj, hi);
    return crossing;
}

/// Free-endpoint optimality residual g(a(T), a(T)) − g(v(T), j(T)) at the
/// final sample; zero characterizes an optimally chosen guard endpoint.
inline double boundary_residual(const Chart& chart, const Trajectory& piece) {
    if (piece.size() == 0) throw validation_error("boundary_residual: empty trajectory");
    const JetState& end = piece.back();
    const Mat g = chart.metric_at(end.q);
    return end.a.dot(g * end.a) - end.v.dot(g * end.j);
}

// ---------------------------------------------------------------------------
// interpolation

struct Knot {
    std::string vertex;
    Vec q, v;
};

struct KnotSequence {
    std::vector<double> times;
    std::vector<Knot> knots;

    void validate() const {
        if (knots.size() < 2) throw validation_error("knot sequence: need at least two knots");
        if (times.size() != knots.size())
            throw validation_error("knot sequence: times/knots length mismatch");
        if (times.front() != 0.0) throw validation_error("knot sequence: times must start at 0");
        for (std::size_t i = 1; i < times.size(); ++i)
            if (!(times[i] > times[i - 1]))
                throw validation_error("knot sequence: times must strictly increase");
    }
};

struct ImpactRecord {
    double time = 0.0;
    int edge_index = -1;
    Vec pre_q, pre_v;
    Vec post_q, post_v;
};

struct HybridPiece {
    std::string vertex;
    Trajectory trajectory;  // piece-local times starting at 0
    double t_begin = 0.0;
    double t_end = 0.0;
};

struct HybridTrajectory {
    std::vector<HybridPiece> pieces;
    std::vector<ImpactRecord> impacts;
};

struct PlanOptions {
    double cover_r = 0.1;      // collision tolerance used to cover guard clouds
    double cover_R = 0.3;      // support radius of the guard-avoidance bumps
    double tau = 100.0 / M_E;  // bump height when auto selection is not applicable
    int sharpness = 4;
    bool auto_select = true;   // certify (tau, k) from the zero-potential probe when it
                               // already clears every guard cover
    CoverOptions cover;
    ShootOptions shoot = [] {
        ShootOptions s;
        s.tolerance = 1e-10;  // knot tolerances need deeper convergence than the default
        s.max_evaluations = 40000;
        return s;
    }();
    double knot_tolerance = 1e-4;
    double zeno_margin = 1e-6;
    double crossing_time_tol = 1e-9;
};

namespace detail {

struct GuardPotential {
    PotentialSum sum;
    std::vector<Vec> centers;
};

/// Cover every outgoing guard cloud (optionally excluding the targeted
/// edge) and build the summed avoidance potential. The bump height either
/// comes from a certificate around the zero-potential probe trajectory (when
/// that probe already stays in the safety region of every center) or from
/// the configured fallback.
inline GuardPotential build_guard_potential(const HybridSystem& sys, const Chart& chart,
                                            const std::string& vertex_id, int exclude_edge,
                                            const BoundaryData& bd, const PlanOptions& opts) {
    GuardPotential gp;
    for (int e : sys.out_edges(vertex_id)) {
        if (e == exclude_edge) continue;
        const Cover cover =
            cover_obstacle(chart, sys.edges[e].guard.cloud, opts.cover_r, opts.cover_R, opts.cover);
        gp.centers.insert(gp.centers.end(), cover.centers.begin(), cover.centers.end());
    }
    if (gp.centers.empty()) return gp;

    double tau = opts.tau;
    int k = opts.sharpness;
    if (opts.auto_select) {
        const ShootingResult probe = shoot(chart, PotentialSum{}, bd, opts.shoot);
        bool clear = true;
        for (const auto& s : probe.trajectory.states) {
            for (const auto& c : gp.centers)
                if (chart.distance(s.q, c) <= opts.cover_R) {
                    clear = false;
                    break;
                }
            if (!clear) break;
        }
        if (clear) {
            const double delta = (opts.cover_R - 2.0 * opts.cover_r) / 2.0;
            const double r_star = (2.0 * opts.cover_r + delta + opts.cover_R) / 2.0;
            const ToleranceBands bands{opts.cover_r, r_star, opts.cover_R};
            const SelectionResult sel =
                select_parameters(bands, 0.0, make_certificate_inputs(chart, probe.trajectory));
            if (sel.feasible) {
                tau = sel.tau;
                k = sel.k;
            }
        }
    }
    gp.sum = build_avoidance_potential(gp.centers, opts.cover_R, tau, k);
    return gp;
}

/// Initial jets of the coordinate cubic through (q0, v0), a waypoint at
/// t_mid, and qT at T (the terminal velocity condition is dropped); used
/// only to seed the simplex with a detouring candidate.
inline std::pair<Vec, Vec> detour_jets(const BoundaryData& bd, const Vec& waypoint,
                                       double t_mid) {
    const double t = t_mid, T = bd.T;
    const Vec w1 = waypoint - bd.q0 - bd.v0 * t;
    const Vec w2 = bd.qT - bd.q0 - bd.v0 * T;
    Eigen::Matrix2d M;
    M << t * t / 2.0, t * t * t / 6.0, T * T / 2.0, T * T * T / 6.0;
    const Eigen::Matrix2d Minv = M.inverse();
    Vec a0(bd.q0.size()), j0(bd.q0.size());
    for (int i = 0; i < bd.q0.size(); ++i) {
        const Eigen::Vector2d sol = Minv * Eigen::Vector2d(w1[i], w2[i]);
        a0[i] = sol[0];
        j0[i] = sol[1];
    }
    return {a0, j0};
}

/// Simplex seeds for an avoidance shoot. Shooting converges to critical
/// points, and a path cutting straight through the flat interior of the
/// summed potential is itself a critical point; when the direct cubic dives
/// into a covering ball, seeds pushed radially out of the deepest ball give
/// the search a route around.
inline std::vector<std::pair<Vec, Vec>> avoidance_starts(const Chart& chart,
                                                         const std::vector<Vec>& centers,
                                                         const BoundaryData& bd, double R) {
    std::vector<std::pair<Vec, Vec>> starts;
    starts.emplace_back(Vec::Zero(bd.q0.size()), Vec::Zero(bd.q0.size()));
    starts.push_back(hermite_initial_jets(bd));
    if (centers.empty()) return starts;

    // deepest incursion of the direct cubic into the covering balls
    const auto [a0, j0] = hermite_initial_jets(bd);
    double worst_depth = 0.0, worst_t = 0.5 * bd.T;
    Vec worst_q = bd.q0, worst_center = centers.front();
    for (int i = 1; i < 100; ++i) {
        const double t = bd.T * i / 100.0;
        const Vec q =
            bd.q0 + t * bd.v0 + 0.5 * t * t * a0 + (t * t * t / 6.0) * j0;
        for (const auto& c : centers) {
            const double depth = R - chart.distance(q, c);
            if (depth > worst_depth) {
                worst_depth = depth;
                worst_t = t;
                worst_q = q;
                worst_center = c;
            }
        }
    }
    if (worst_depth <= 0.0) return starts;  // the direct route is already clear

    // the direct route dives into a ball: detouring seeds go first, the
    // straight-through seeds (likely tunneling critical points) last
    Vec outward = worst_q - worst_center;
    if (outward.norm() < 1e-9) outward = Vec::Unit(bd.q0.size(), 0);
    outward.normalize();
    std::vector<std::pair<Vec, Vec>> ordered;
    for (double factor : {1.5, 2.5})
        ordered.push_back(detour_jets(bd, worst_center + factor * R * outward, worst_t));
    ordered.insert(ordered.end(), starts.begin(), starts.end());
    return ordered;
}

/// Shoot the boundary value problem trying each seed in turn; the first
/// converged trajectory that crosses none of the given guards wins.
inline ShootingResult shoot_avoiding(const HybridSystem& sys, const Chart& chart,
                                     const GuardPotential& gp, const BoundaryData& bd,
                                     const std::vector<int>& guard_edges,
                                     const PlanOptions& opts, const std::string& label) {
    std::string diagnostics;
    for (const auto& start : avoidance_starts(chart, gp.centers, bd, opts.cover_R)) {
        ShootOptions shoot_opts = opts.shoot;
        shoot_opts.warm_start = start;
        const ShootingResult res = shoot(chart, gp.sum, bd, shoot_opts);
        if (!res.converged) {
            diagnostics += " [seed: residual " + std::to_string(res.residual) + "]";
            continue;
        }
        bool crossed = false;
        for (int e : guard_edges)
            if (detect_crossing(chart, res.trajectory, sys.edges[e].guard,
                                opts.crossing_time_tol)) {
                diagnostics += " [seed: crosses " + sys.edges[e].from + "->" +
                               sys.edges[e].to + "]";
                crossed = true;
                break;
            }
        if (!crossed) return res;
    }
    throw segment_error(-1, label + ": no converged guard-clearing trajectory found;" +
                                diagnostics);
}

}  // namespace detail

/// Case 1 of the interpolation procedure: both knots on one vertex; avoid
/// every outgoing guard, then verify post hoc that none was crossed.
inline Trajectory plan_segment_case1(const HybridSystem& sys, const std::string& vertex_id,
                                     const Knot& from, const Knot& to, double duration,
                                     const PlanOptions& opts = {}) {
    const Chart& chart = sys.vertex(vertex_id).chart;
    BoundaryData bd{from.q, from.v, to.q, to.v, duration};

    const detail::GuardPotential gp =
        detail::build_guard_potential(sys, chart, vertex_id, -1, bd, opts);
    const ShootingResult res =
        detail::shoot_avoiding(sys, chart, gp, bd, sys.out_edges(vertex_id), opts,
                               "case-1 segment on vertex '" + vertex_id + "'");
    return res.trajectory;
}

struct Case2Result {
    std::vector<HybridPiece> pieces;  // absolute times in [t0, t1]
    std::vector<ImpactRecord> impacts;
};

/// Case 2: cross to another vertex along a directed path, hitting the guard
/// of each edge on the way and applying its reset. Each intermediate leg has
/// the budget (t1 − t0)/m; early crossings donate their slack to the final
/// leg, which targets the end knot exactly.
inline Case2Result plan_segment_case2(const HybridSystem& sys,
                                      const std::vector<std::string>& path, const Knot& from,
                                      const Knot& to, double t0, double t1,
                                      const PlanOptions& opts = {},
                                      const std::vector<Vec>& guard_targets = {}) {
    if (path.size() < 2)
        throw validation_error("plan_segment_case2: path must visit at least two vertices");
    const auto m = path.size();
    const double alpha = (t1 - t0) / static_cast<double>(m);

    Case2Result out;
    Vec q_cur = from.q, v_cur = from.v;
    double t_abs = t0;

    for (std::size_t leg = 0; leg + 1 < m; ++leg) {
        const std::string& vid = path[leg];
        const Chart& chart = sys.vertex(vid).chart;
        const int target_edge = sys.edge_between(vid, path[leg + 1]);
        const Guard& target_guard = sys.edges[target_edge].guard;

        // guard target: supplied, or the cloud point nearest the leg start
        Vec eta;
        if (leg < guard_targets.size() && guard_targets[leg].size() > 0) {
            eta = guard_targets[leg];
        } else {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& x : target_guard.cloud.points) {
                const double d = chart.distance(q_cur, x);
                if (d < best) {
                    best = d;
                    eta = x;
                }
            }
        }
        const Vec v_eta = (chart.log_at(q_cur, eta) / alpha).eval();

        BoundaryData bd{q_cur, v_cur, eta, v_eta, alpha};
        const detail::GuardPotential gp =
            detail::build_guard_potential(sys, chart, vid, target_edge, bd, opts);

        // try the seeds until one reaches the target guard without touching
        // a non-target guard on the way (convergence toward the provisional
        // target is not required; the crossing point is what matters)
        std::optional<GuardCrossing> crossing;
        Trajectory piece;
        std::string diagnostics;
        for (const auto& start :
             detail::avoidance_starts(chart, gp.centers, bd, opts.cover_R)) {
            ShootOptions shoot_opts = opts.shoot;
            shoot_opts.warm_start = start;
            const ShootingResult res = shoot(chart, gp.sum, bd, shoot_opts);
            const auto hit =
                detect_crossing(chart, res.trajectory, target_guard, opts.crossing_time_tol);
            if (!hit) {
                diagnostics += " [seed: never reaches the guard]";
                continue;
            }
            Trajectory candidate = clip_trajectory(chart, res.trajectory, hit->time);
            bool clean = true;
            for (int e : sys.out_edges(vid)) {
                if (e == target_edge) continue;
                if (detect_crossing(chart, candidate, sys.edges[e].guard,
                                    opts.crossing_time_tol)) {
                    diagnostics += " [seed: crosses the non-target guard of edge " +
                                   sys.edges[e].from + "->" + sys.edges[e].to + "]";
                    clean = false;
                    break;
                }
            }
            if (!clean) continue;
            crossing = hit;
            piece = std::move(candidate);
            break;
        }
        if (!crossing)
            throw segment_error(static_cast<int>(leg),
                                "case-2 leg " + std::to_string(leg) + " on vertex '" + vid +
                                    "' found no clean route to the guard of edge " + vid +
                                    "->" + path[leg + 1] + ";" + diagnostics);

        out.pieces.push_back(HybridPiece{vid, piece, t_abs, t_abs + crossing->time});

        const auto [q_post, v_post] =
            sys.edges[target_edge].reset.apply(crossing->state.q, crossing->state.v);
        ImpactRecord impact;
        impact.time = t_abs + crossing->time;
        impact.edge_index = target_edge;
        impact.pre_q = crossing->state.q;
        impact.pre_v = crossing->state.v;
        impact.post_q = q_post;
        impact.post_v = v_post;
        out.impacts.push_back(impact);

        // the reset image must not sit inside a guard of the next vertex
        for (int e : sys.out_edges(path[leg + 1]))
            if (sys.edges[e].guard.membership(q_post))
                throw segment_error(static_cast<int>(leg),
                                    "reset image of edge " + vid + "->" + path[leg + 1] +
                                        " lands inside the guard of edge " +
                                        sys.edges[e].from + "->" + sys.edges[e].to);

        q_cur = q_post;
        v_cur = v_post;
        t_abs += crossing->time;
    }

    // final leg: remaining time, exact boundary conditions, avoid everything
    {
        const std::string& vid = path.back();
        const Chart& chart = sys.vertex(vid).chart;
        const double remaining = t1 - t_abs;
        BoundaryData bd{q_cur, v_cur, to.q, to.v, remaining};
        const detail::GuardPotential gp =
            detail::build_guard_potential(sys, chart, vid, -1, bd, opts);
        try {
            const ShootingResult res =
                detail::shoot_avoiding(sys, chart, gp, bd, sys.out_edges(vid), opts,
                                       "case-2 final leg on vertex '" + vid + "'");
            out.pieces.push_back(HybridPiece{vid, res.trajectory, t_abs, t1});
        } catch (const segment_error& e) {
            throw segment_error(static_cast<int>(m) - 1, e.what());
        }
    }
    return out;
}

/// Glue segment plans across the knot sequence: Case 1 for same-vertex
/// pairs, Case 2 along a shortest directed path otherwise. Zeno exclusion
/// and knot/guard preconditions are checked up front; knot interpolation is
/// verified after planning.
inline HybridTrajectory interpolate(const HybridSystem& sys, const KnotSequence& knots,
                                    const PlanOptions& opts = {}) {
    sys.validate();
    knots.validate();
    for (std::size_t n = 0; n < knots.knots.size(); ++n) {
        const Knot& knot = knots.knots[n];
        sys.vertex(knot.vertex);
        for (int e : sys.out_edges(knot.vertex))
            if (sys.edges[e].guard.membership(knot.q))
                throw validation_error("knot " + std::to_string(n) +
                                       " lies inside the guard of edge " + sys.edges[e].from +
                                       "->" + sys.edges[e].to);
    }
    const ZenoReport zeno = validate_zeno(sys, opts.zeno_margin);
    if (!zeno.pass)
        throw validation_error("hybrid system fails the reset-separation (Zeno) check with " +
                               std::to_string(zeno.offenders.size()) + " offending samples");

    HybridTrajectory result;
    for (std::size_t n = 0; n + 1 < knots.knots.size(); ++n) {
        const Knot& a = knots.knots[n];
        const Knot& b = knots.knots[n + 1];
        const double t0 = knots.times[n], t1 = knots.times[n + 1];
        try {
            if (a.vertex == b.vertex) {
                Trajectory piece = plan_segment_case1(sys, a.vertex, a, b, t1 - t0, opts);
                result.pieces.push_back(HybridPiece{a.vertex, std::move(piece), t0, t1});
            } else {
                Case2Result seg = plan_segment_case2(sys, sys.find_path(a.vertex, b.vertex), a,
                                                     b, t0, t1, opts);
                for (auto& p : seg.pieces) result.pieces.push_back(std::move(p));
                for (auto& imp : seg.impacts) result.impacts.push_back(imp);
            }
        } catch (const segment_error& e) {
            throw segment_error(static_cast<int>(n), "segment " + std::to_string(n) + " (" +
                                                         a.vertex + " -> " + b.vertex +
                                                         "): " + e.what());
        }

        // knot interpolation check at the segment end
        const HybridPiece& last = result.pieces.back();
        const Chart& chart = sys.vertex(b.vertex).chart;
        const JetState& end = last.trajectory.back();
        const double pos_err = chart.distance(end.q, b.q);
        const double vel_err = (end.v - b.v).norm();
        if (pos_err > opts.knot_tolerance || vel_err > opts.knot_tolerance)
            throw segment_error(static_cast<int>(n),
                                "segment " + std::to_string(n) + " misses knot " +
                                    std::to_string(n + 1) + " (position error " +
                                    std::to_string(pos_err) + ", velocity error " +
                                    std::to_string(vel_err) + ")");
    }
    return result;
}

}  // namespace rsplines
