#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "rsplines/csv_io.hpp"

namespace rsplines {

using json = nlohmann::json;

namespace detail {

inline Vec vec_from_json(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty())
        throw validation_error("scenario: '" + field + "' must be a non-empty array of numbers");
    Vec v(static_cast<int>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw validation_error("scenario: '" + field + "' must contain numbers only");
        v[static_cast<int>(i)] = j[i].get<double>();
    }
    return v;
}

inline Mat mat_from_json(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty())
        throw validation_error("scenario: '" + field + "' must be an array of rows");
    const auto rows = static_cast<int>(j.size());
    const Vec first = vec_from_json(j[0], field);
    Mat m(rows, first.size());
    m.row(0) = first;
    for (int r = 1; r < rows; ++r) {
        const Vec row = vec_from_json(j[r], field);
        if (row.size() != first.size())
            throw validation_error("scenario: '" + field + "' rows differ in width");
        m.row(r) = row;
    }
    return m;
}

inline json vec_to_json(const Vec& v) {
    json out = json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

}  // namespace detail

/// A cloud field accepts inline points, a CSV path (relative to the scenario
/// file), or a spherical-patch generator.
inline ObstacleCloud cloud_from_json(const json& j, const std::filesystem::path& base_dir) {
    if (j.is_string()) return read_cloud_csv(base_dir / j.get<std::string>());
    if (j.is_array()) {
        ObstacleCloud cloud;
        for (const auto& row : j) cloud.points.push_back(detail::vec_from_json(row, "cloud"));
        cloud.validate();
        return cloud;
    }
    if (j.is_object() && j.contains("spherical_patch")) {
        const json& p = j["spherical_patch"];
        const Vec phi = detail::vec_from_json(p.at("phi"), "spherical_patch.phi");
        const Vec theta = detail::vec_from_json(p.at("theta"), "spherical_patch.theta");
        if (phi.size() != 2 || theta.size() != 2)
            throw validation_error("scenario: spherical_patch phi/theta must be [lo, hi]");
        return sample_spherical_patch(phi[0], phi[1], theta[0], theta[1],
                                      p.value("n_phi", 40), p.value("n_theta", 60));
    }
    throw validation_error(
        "scenario: cloud must be inline points, a csv path, or a spherical_patch generator");
}

inline std::function<bool(const Vec&)> membership_from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "halfspace")
        return halfspace_membership(detail::vec_from_json(j.at("normal"), "normal"),
                                    j.at("offset").get<double>());
    if (type == "ball")
        return ball_membership(detail::vec_from_json(j.at("center"), "center"),
                               j.at("radius").get<double>());
    if (type == "spherical_patch") {
        const Vec phi = detail::vec_from_json(j.at("phi"), "phi");
        const Vec theta = detail::vec_from_json(j.at("theta"), "theta");
        if (phi.size() != 2 || theta.size() != 2)
            throw validation_error("scenario: spherical_patch phi/theta must be [lo, hi]");
        return spherical_patch_membership(phi[0], phi[1], theta[0], theta[1],
                                          j.at("thickness").get<double>());
    }
    throw validation_error("scenario: unknown membership type '" + type +
                           "' (halfspace|ball|spherical_patch)");
}

inline ResetMap reset_from_json(const json& j, int dim) {
    if (j.is_object() && j.contains("type")) {
        const std::string type = j.at("type").get<std::string>();
        if (type == "identity") return ResetMap::identity(dim);
        if (type == "translation")
            return ResetMap::translation(detail::vec_from_json(j.at("shift"), "reset.shift"));
        throw validation_error("scenario: unknown reset type '" + type + "'");
    }
    ResetMap reset = ResetMap::identity(dim);
    if (j.contains("pos_linear")) reset.pos_linear = detail::mat_from_json(j["pos_linear"], "pos_linear");
    if (j.contains("pos_offset")) reset.pos_offset = detail::vec_from_json(j["pos_offset"], "pos_offset");
    if (j.contains("vel_linear")) reset.vel_linear = detail::mat_from_json(j["vel_linear"], "vel_linear");
    if (j.contains("vel_offset")) reset.vel_offset = detail::vec_from_json(j["vel_offset"], "vel_offset");
    return reset;
}

struct HybridScenario {
    HybridSystem system;
    KnotSequence knots;
    PlanOptions plan;
};

struct Scenario {
    std::string chart_name = "euclidean:3";
    std::uint64_t seed = 0;
    double sensing_radius = 0.0;  // 0 = undeclared

    PotentialSum potential;  // explicit terms, or built from the obstacle block

    bool has_obstacle = false;
    ObstacleCloud obstacle_cloud;
    ToleranceBands bands;
    bool auto_parameters = false;
    double tau = 100.0 / M_E;
    int sharpness = 4;

    std::optional<ToleranceBands> cert_bands;  // top-level bands for certify

    std::optional<JetState> initial;
    double horizon = 1.0;
    std::optional<BoundaryData> boundary;

    StepMethod method = StepMethod::rk4;
    double h = 1e-3;
    ShootOptions solver;
    bool warm_start_cubic = false;

    std::optional<HybridScenario> hybrid;

    Chart chart() const { return chart_by_name(chart_name); }
};

inline Scenario scenario_from_json(const json& j, const std::filesystem::path& base_dir) {
    Scenario sc;
    sc.chart_name = j.value("chart", std::string("euclidean:3"));
    chart_by_name(sc.chart_name);  // validate early
    sc.seed = j.value("seed", 0ULL);
    sc.sensing_radius = j.value("sensing_radius", 0.0);

    if (j.contains("potential")) {
        for (const auto& t : j["potential"]) {
            BumpSpec spec;
            spec.center = detail::vec_from_json(t.at("center"), "potential.center");
            spec.support_radius = t.at("D").get<double>();
            spec.height = t.at("tau").get<double>();
            spec.sharpness = t.at("k").get<int>();
            sc.potential.terms.push_back(std::move(spec));
        }
        sc.potential.validate(sc.sensing_radius);
    }

    if (j.contains("obstacle")) {
        const json& ob = j["obstacle"];
        sc.has_obstacle = true;
        sc.obstacle_cloud = cloud_from_json(ob.at("cloud"), base_dir);
        const json& bands = ob.at("bands");
        sc.bands.r = bands.at("r").get<double>();
        sc.bands.R = bands.at("R").get<double>();
        sc.bands.r_star = bands.contains("r_star")
                              ? bands["r_star"].get<double>()
                              : (2.0 * sc.bands.r + (sc.bands.R - 2.0 * sc.bands.r) / 2.0 +
                                 sc.bands.R) /
                                    2.0;
        sc.bands.validate();
        if (!(sc.bands.r < sc.bands.R / 2.0))
            throw validation_error("scenario: obstacle bands need r < R/2 for the covering");
        if (sc.sensing_radius > 0.0 && sc.bands.R > sc.sensing_radius)
            throw validation_error("scenario: obstacle bands need R <= sensing radius h");
        if (ob.contains("tau") && ob["tau"].is_string()) {
            if (ob["tau"].get<std::string>() != "auto")
                throw validation_error("scenario: obstacle tau must be a number or \"auto\"");
            sc.auto_parameters = true;
        } else if (ob.contains("tau")) {
            sc.tau = ob["tau"].get<double>();
        }
        if (ob.contains("k") && !ob["k"].is_string()) sc.sharpness = ob["k"].get<int>();
    }

    if (j.contains("bands")) {
        const json& b = j["bands"];
        ToleranceBands bands{b.at("r").get<double>(), b.at("r_star").get<double>(),
                             b.at("R").get<double>()};
        bands.validate();
        sc.cert_bands = bands;
    }

    if (j.contains("initial")) {
        const json& in = j["initial"];
        JetState s;
        s.q = detail::vec_from_json(in.at("q"), "initial.q");
        s.v = detail::vec_from_json(in.at("v"), "initial.v");
        s.a = in.contains("a") ? detail::vec_from_json(in["a"], "initial.a")
                               : Vec::Zero(s.q.size()).eval();
        s.j = in.contains("j") ? detail::vec_from_json(in["j"], "initial.j")
                               : Vec::Zero(s.q.size()).eval();
        sc.initial = std::move(s);
        sc.horizon = in.value("T", 1.0);
    }

    if (j.contains("boundary")) {
        const json& b = j["boundary"];
        BoundaryData bd;
        bd.q0 = detail::vec_from_json(b.at("q0"), "boundary.q0");
        bd.v0 = detail::vec_from_json(b.at("v0"), "boundary.v0");
        bd.qT = detail::vec_from_json(b.at("qT"), "boundary.qT");
        bd.vT = detail::vec_from_json(b.at("vT"), "boundary.vT");
        bd.T = b.value("T", 1.0);
        sc.boundary = std::move(bd);
    }

    if (j.contains("integrator")) {
        sc.method = step_method_from_string(j["integrator"].value("method", "rk4"));
        sc.h = j["integrator"].value("h", 1e-3);
        if (!(sc.h > 0.0)) throw validation_error("scenario: integrator.h must be > 0");
    }

    if (j.contains("solver")) {
        const json& s = j["solver"];
        sc.solver.tolerance = s.value("tolerance", 1e-6);
        sc.solver.max_evaluations = s.value("max_evaluations", 20000L);
        sc.solver.initial_step = s.value("initial_step", 0.1);
        sc.solver.position_weight = s.value("position_weight", 1.0);
        sc.solver.velocity_weight = s.value("velocity_weight", 1.0);
        const std::string warm = s.value("warm_start", "zero");
        if (warm == "cubic")
            sc.warm_start_cubic = true;
        else if (warm != "zero")
            throw validation_error("scenario: solver.warm_start must be \"zero\" or \"cubic\"");
    }
    sc.solver.h = sc.h;
    sc.solver.method = sc.method;

    if (j.contains("hybrid")) {
        const json& hj = j["hybrid"];
        HybridScenario hs;
        for (const auto& vj : hj.at("vertices"))
            hs.system.vertices.push_back(HybridVertex{vj.at("id").get<std::string>(),
                                                      chart_by_name(vj.at("chart").get<std::string>())});
        for (const auto& ej : hj.at("edges")) {
            HybridEdge edge;
            edge.from = ej.at("from").get<std::string>();
            edge.to = ej.at("to").get<std::string>();
            edge.guard.cloud = cloud_from_json(ej.at("guard").at("cloud"), base_dir);
            edge.guard.membership = membership_from_json(ej.at("guard").at("membership"));
            const int target_dim = hs.system.vertex(edge.to).chart.dim;
            edge.reset = ej.contains("reset") ? reset_from_json(ej["reset"], target_dim)
                                              : ResetMap::identity(target_dim);
            hs.system.edges.push_back(std::move(edge));
        }
        for (const auto& t : hj.at("times")) hs.knots.times.push_back(t.get<double>());
        for (const auto& kj : hj.at("knots"))
            hs.knots.knots.push_back(Knot{kj.at("vertex").get<std::string>(),
                                          detail::vec_from_json(kj.at("q"), "knot.q"),
                                          detail::vec_from_json(kj.at("v"), "knot.v")});
        if (hj.contains("avoidance")) {
            const json& av = hj["avoidance"];
            hs.plan.cover_r = av.value("r", hs.plan.cover_r);
            hs.plan.cover_R = av.value("R", hs.plan.cover_R);
            hs.plan.tau = av.value("tau", hs.plan.tau);
            hs.plan.sharpness = av.value("k", hs.plan.sharpness);
            hs.plan.auto_select = av.value("auto_select", hs.plan.auto_select);
        }
        hs.plan.zeno_margin = hj.value("zeno_margin", hs.plan.zeno_margin);
        hs.plan.knot_tolerance = hj.value("knot_tolerance", hs.plan.knot_tolerance);
        hs.plan.shoot.h = sc.h;
        hs.plan.shoot.method = sc.method;
        if (j.contains("solver")) {
            hs.plan.shoot.tolerance = sc.solver.tolerance;
            hs.plan.shoot.max_evaluations = sc.solver.max_evaluations;
        }
        hs.system.validate();
        hs.knots.validate();
        for (const auto& knot : hs.knots.knots) {
            const int dim = hs.system.vertex(knot.vertex).chart.dim;
            if (knot.q.size() != dim || knot.v.size() != dim)
                throw validation_error("scenario: knot on vertex '" + knot.vertex +
                                       "' does not match the chart dimension");
        }
        for (const auto& edge : hs.system.edges) {
            const int dim = hs.system.vertex(edge.from).chart.dim;
            for (const auto& p : edge.guard.cloud.points)
                if (p.size() != dim)
                    throw validation_error("scenario: guard cloud of edge " + edge.from +
                                           "->" + edge.to +
                                           " does not match the chart dimension");
        }
        sc.hybrid = std::move(hs);
    }

    // cross-check vector dimensions against the chart before any computation
    const int dim = chart_by_name(sc.chart_name).dim;
    auto check_dim = [dim](const Vec& v, const char* field) {
        if (v.size() != dim)
            throw validation_error(std::string("scenario: '") + field +
                                   "' does not match the chart dimension");
    };
    for (const auto& t : sc.potential.terms) check_dim(t.center, "potential.center");
    if (sc.has_obstacle)
        for (const auto& p : sc.obstacle_cloud.points) check_dim(p, "obstacle.cloud");
    if (sc.initial) {
        check_dim(sc.initial->q, "initial.q");
        check_dim(sc.initial->v, "initial.v");
        check_dim(sc.initial->a, "initial.a");
        check_dim(sc.initial->j, "initial.j");
    }
    if (sc.boundary) {
        check_dim(sc.boundary->q0, "boundary.q0");
        check_dim(sc.boundary->v0, "boundary.v0");
        check_dim(sc.boundary->qT, "boundary.qT");
        check_dim(sc.boundary->vT, "boundary.vT");
        if (!(sc.boundary->T > 0.0))
            throw validation_error("scenario: boundary.T must be > 0");
    }

    return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open scenario '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw validation_error("scenario '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return scenario_from_json(j, path.parent_path());
}

/// Resolve the scenario's potential: explicit terms pass through; an
/// obstacle block runs the covering construction, with (tau, k) either
/// given or certified against the zero-potential shooting probe when that
/// probe stays in the safety region of every center.
inline PotentialSum resolve_potential(const Scenario& sc, const Chart& chart) {
    if (!sc.has_obstacle) return sc.potential;
    if (!sc.boundary)
        throw validation_error("scenario: the obstacle block needs boundary data");

    const Cover cover = cover_obstacle(chart, sc.obstacle_cloud, sc.bands.r, sc.bands.R,
                                       CoverOptions{.seed = sc.seed});
    double tau = sc.tau;
    int k = sc.sharpness;
    if (sc.auto_parameters) {
        const ShootingResult probe = shoot(chart, PotentialSum{}, *sc.boundary, sc.solver);
        bool clear = true;
        for (const auto& s : probe.trajectory.states) {
            for (const auto& c : cover.centers)
                if (chart.distance(s.q, c) <= sc.bands.R) {
                    clear = false;
                    break;
                }
            if (!clear) break;
        }
        if (clear) {
            const ToleranceBands bands{sc.bands.r, cover.r_star, sc.bands.R};
            const SelectionResult sel = select_parameters(
                bands, sc.sensing_radius, make_certificate_inputs(chart, probe.trajectory));
            if (sel.feasible) {
                tau = sel.tau;
                k = sel.k;
            }
        }
    }
    PotentialSum sum = build_avoidance_potential(cover.centers, sc.bands.R, tau, k);
    sum.validate(sc.sensing_radius);
    return sum;
}

}  // namespace rsplines
