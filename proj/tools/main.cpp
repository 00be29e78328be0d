#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rsplines/csv_io.hpp"
#include "rsplines/repro.hpp"
#include "rsplines/scenario.hpp"

namespace fs = std::filesystem;
using namespace rsplines;

namespace {

struct CommonArgs {
    std::string scenario_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> method;
    std::optional<double> step;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool scenario_required) {
    auto* opt = cmd->add_option("--scenario", args.scenario_path, "scenario JSON file");
    if (scenario_required) opt->required();
    cmd->add_option("--out", args.out_dir, "output directory")->required();
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&args](std::uint64_t s) { args.seed = s; }, "RNG seed override");
    cmd->add_option_function<std::string>(
        "--method", [&args](const std::string& m) { args.method = m; },
        "integration method override (euler|rk4)");
    cmd->add_option_function<double>(
        "--step", [&args](double h) { args.step = h; }, "integration step override");
}

Scenario load_with_overrides(const CommonArgs& args) {
    Scenario sc = load_scenario(args.scenario_path);
    if (args.seed) sc.seed = *args.seed;
    if (args.method) sc.method = step_method_from_string(*args.method);
    if (args.step) {
        if (!(*args.step > 0.0)) throw validation_error("--step must be > 0");
        sc.h = *args.step;
    }
    sc.solver.h = sc.h;
    sc.solver.method = sc.method;
    if (sc.hybrid) {
        sc.hybrid->plan.shoot.h = sc.h;
        sc.hybrid->plan.shoot.method = sc.method;
    }
    return sc;
}

void write_json(const fs::path& path, const json& j) {
    atomic_write_text(path, j.dump(2) + "\n");
}

json shooting_json(const ShootingResult& res) {
    return json{{"residual", res.residual},
                {"evaluations", res.evaluations},
                {"converged", res.converged},
                {"a0", detail::vec_to_json(res.a0)},
                {"j0", detail::vec_to_json(res.j0)}};
}

int cmd_integrate(const CommonArgs& args) {
    const Scenario sc = load_with_overrides(args);
    if (!sc.initial)
        throw validation_error("integrate: scenario needs an \"initial\" jet block");
    const Chart chart = sc.chart();
    const PotentialSum sum = resolve_potential(sc, chart);
    const Trajectory traj = integrate(chart, sum, *sc.initial, sc.horizon, sc.h, sc.method);

    fs::create_directories(args.out_dir);
    write_trajectory_csv(fs::path(args.out_dir) / "trajectory.csv", traj);
    write_json(fs::path(args.out_dir) / "summary.json",
               json{{"chart", sc.chart_name},
                    {"method", to_string(sc.method)},
                    {"h", sc.h},
                    {"samples", traj.size()},
                    {"action", action_value(chart, sum, traj)}});
    return 0;
}

int cmd_shoot(const CommonArgs& args) {
    const Scenario sc = load_with_overrides(args);
    if (!sc.boundary) throw validation_error("shoot: scenario needs a \"boundary\" block");
    const Chart chart = sc.chart();
    const PotentialSum sum = resolve_potential(sc, chart);

    ShootOptions opts = sc.solver;
    if (sc.warm_start_cubic) opts.warm_start = hermite_initial_jets(*sc.boundary);
    const ShootingResult res = shoot(chart, sum, *sc.boundary, opts);

    fs::create_directories(args.out_dir);
    write_trajectory_csv(fs::path(args.out_dir) / "trajectory.csv", res.trajectory);
    json summary = shooting_json(res);
    summary["action"] = action_value(chart, sum, res.trajectory);
    summary["chart"] = sc.chart_name;
    summary["method"] = to_string(sc.method);
    summary["h"] = sc.h;
    write_json(fs::path(args.out_dir) / "shoot_summary.json", summary);

    if (!res.converged) {
        std::cerr << "shoot: no convergence within budget (residual " << res.residual << ")\n";
        return 3;
    }
    return 0;
}

int cmd_cover(const CommonArgs& args) {
    const Scenario sc = load_with_overrides(args);
    if (!sc.has_obstacle) throw validation_error("cover: scenario needs an \"obstacle\" block");
    const Chart chart = sc.chart();

    const Cover cover = cover_obstacle(chart, sc.obstacle_cloud, sc.bands.r, sc.bands.R,
                                       CoverOptions{.seed = sc.seed});
    const CoverCheck check = verify_cover(chart, sc.obstacle_cloud, cover.centers, sc.bands.r,
                                          cover.r_star, sc.bands.R, 10000, sc.seed);

    json centers = json::array();
    for (const auto& c : cover.centers) centers.push_back(detail::vec_to_json(c));
    fs::create_directories(args.out_dir);
    write_json(fs::path(args.out_dir) / "cover.json",
               json{{"centers", centers},
                    {"generator_indices", cover.generator_indices},
                    {"r", sc.bands.r},
                    {"r_star", cover.r_star},
                    {"delta", cover.delta},
                    {"R", sc.bands.R},
                    {"boundary_samples", cover.boundary_samples},
                    {"verification",
                     json{{"samples", check.samples},
                          {"inner_violations", check.inner_violations},
                          {"outer_violations", check.outer_violations},
                          {"max_min_center_distance", check.max_min_center_distance},
                          {"max_cloud_distance", check.max_cloud_distance},
                          {"passed", check.inner_violations == 0 && check.outer_violations == 0}}}});
    if (check.inner_violations > 0 || check.outer_violations > 0)
        std::cerr << "cover: post-hoc verification found violations (see cover.json)\n";
    return 0;
}

int cmd_certify(const CommonArgs& args, const std::string& reference_path) {
    const Scenario sc = load_with_overrides(args);
    const Chart chart = sc.chart();
    const PotentialSum sum = resolve_potential(sc, chart);
    if (sum.terms.empty())
        throw validation_error("certify: scenario defines no potential terms");
    ToleranceBands bands;
    if (sc.cert_bands)
        bands = *sc.cert_bands;
    else if (sc.has_obstacle)
        bands = sc.bands;
    else
        throw validation_error("certify: scenario needs \"bands\" (or an obstacle block)");

    const Trajectory reference = read_trajectory_csv(reference_path);
    const JetState& front = reference.front();
    const double v0_norm = chart.norm_at(front.q, front.v);
    const Certificate cert = certify(chart, reference, sum, bands, v0_norm, reference.duration());

    fs::create_directories(args.out_dir);
    write_json(fs::path(args.out_dir) / "certificate.json",
               json{{"a", cert.a},
                    {"c", cert.c},
                    {"v", cert.v},
                    {"threshold", cert.threshold},
                    {"V_star_lower", cert.V_star_lower},
                    {"V_minus", cert.V_minus},
                    {"satisfied", cert.satisfied},
                    {"bands", json{{"r", bands.r}, {"r_star", bands.r_star}, {"R", bands.R}}},
                    {"v0_norm", v0_norm},
                    {"T", reference.duration()}});
    return 0;
}

int cmd_plan_hybrid(const CommonArgs& args) {
    const Scenario sc = load_with_overrides(args);
    if (!sc.hybrid) throw validation_error("plan-hybrid: scenario needs a \"hybrid\" block");

    const HybridTrajectory plan = interpolate(sc.hybrid->system, sc.hybrid->knots,
                                              sc.hybrid->plan);

    fs::create_directories(args.out_dir);
    write_hybrid_csv(fs::path(args.out_dir) / "plan.csv", plan);
    json impacts = json::array();
    for (const auto& impact : plan.impacts) {
        const HybridEdge& edge = sc.hybrid->system.edges[impact.edge_index];
        impacts.push_back(json{{"time", impact.time},
                               {"edge", json{{"from", edge.from}, {"to", edge.to}}},
                               {"pre_q", detail::vec_to_json(impact.pre_q)},
                               {"pre_v", detail::vec_to_json(impact.pre_v)},
                               {"post_q", detail::vec_to_json(impact.post_q)},
                               {"post_v", detail::vec_to_json(impact.post_v)}});
    }
    json pieces = json::array();
    for (const auto& piece : plan.pieces)
        pieces.push_back(json{{"vertex", piece.vertex},
                              {"t_begin", piece.t_begin},
                              {"t_end", piece.t_end},
                              {"samples", piece.trajectory.size()},
                              {"boundary_residual",
                               boundary_residual(sc.hybrid->system.vertex(piece.vertex).chart,
                                                 piece.trajectory)}});
    write_json(fs::path(args.out_dir) / "impacts.json",
               json{{"impacts", impacts}, {"pieces", pieces}});
    return 0;
}

int cmd_repro_sim(const CommonArgs& args) {
    ReproOptions opts;
    if (args.seed) opts.seed = *args.seed;
    if (args.method) opts.method_override = step_method_from_string(*args.method);
    if (args.step) opts.step_override = *args.step;

    const ReproReport report = run_repro_sim(opts);

    fs::create_directories(args.out_dir);
    write_trajectory_csv(fs::path(args.out_dir) / "trajectory.csv",
                         report.shooting.trajectory);
    json centers = json::array();
    for (const auto& c : report.setup.centers) centers.push_back(detail::vec_to_json(c));
    write_json(
        fs::path(args.out_dir) / "repro_summary.json",
        json{{"cover_check",
              json{{"samples", report.cover.samples},
                   {"violations", report.cover.violations},
                   {"max_min_distance", report.cover.max_min_distance},
                   {"covered", report.cover.violations == 0}}},
             {"centers", centers},
             {"R", report.setup.R},
             {"tau", report.setup.tau},
             {"k", report.setup.sharpness},
             {"method", to_string(report.setup.method)},
             {"h", report.setup.h},
             {"shooting", shooting_json(report.shooting)},
             {"min_center_distances", report.min_center_distance},
             {"min_center_times", report.min_center_time},
             {"action", report.action}});

    if (report.cover.violations > 0)
        std::cerr << "repro-sim: the hand-picked balls do not cover the sampled patch ("
                  << report.cover.violations << "/" << report.cover.samples
                  << " samples outside, worst min-distance " << report.cover.max_min_distance
                  << " vs R = " << report.setup.R << ")\n";
    if (!report.shooting.converged) {
        std::cerr << "repro-sim: shooting did not converge (residual "
                  << report.shooting.residual << ")\n";
        return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"variational obstacle-avoiding trajectory planner"};
    app.require_subcommand(1);

    CommonArgs integrate_args, shoot_args, cover_args, certify_args, hybrid_args, repro_args;
    std::string reference_path;

    add_common(app.add_subcommand("integrate", "integrate an initial jet"), integrate_args,
               true);
    add_common(app.add_subcommand("shoot", "solve the boundary value problem"), shoot_args,
               true);
    add_common(app.add_subcommand("cover", "cover an obstacle cloud"), cover_args, true);
    auto* certify_cmd = app.add_subcommand("certify", "evaluate the avoidance certificate");
    add_common(certify_cmd, certify_args, true);
    certify_cmd->add_option("--reference", reference_path, "reference trajectory CSV")
        ->required();
    add_common(app.add_subcommand("plan-hybrid", "interpolate knots across domains"),
               hybrid_args, true);
    add_common(app.add_subcommand("repro-sim", "run the R3 simulation pipeline"), repro_args,
               false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (app.got_subcommand("integrate")) return cmd_integrate(integrate_args);
        if (app.got_subcommand("shoot")) return cmd_shoot(shoot_args);
        if (app.got_subcommand("cover")) return cmd_cover(cover_args);
        if (app.got_subcommand("certify")) return cmd_certify(certify_args, reference_path);
        if (app.got_subcommand("plan-hybrid")) return cmd_plan_hybrid(hybrid_args);
        if (app.got_subcommand("repro-sim")) return cmd_repro_sim(repro_args);
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const chart_domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const segment_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
