#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rsplines/avoidance.hpp"
#include "rsplines/hybrid.hpp"
#include "rsplines/integrator.hpp"

namespace rsplines {

namespace detail {

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::vector<double> parse_csv_row(const std::string& line) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw validation_error("csv: cannot parse number '" + cell + "'");
        }
    }
    return out;
}

}  // namespace detail

/// Write a file atomically: the content lands under a temp name in the same
/// directory and is renamed into place.
inline void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw validation_error("cannot open '" + tmp.string() + "' for writing");
        out << content;
        if (!out) throw validation_error("failed writing '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline std::string trajectory_csv_header(int dim) {
    std::string header = "t";
    const char* blocks[4] = {"q", "v", "a", "j"};
    for (const char* b : blocks)
        for (int i = 1; i <= dim; ++i) header += "," + std::string(b) + "_" + std::to_string(i);
    return header;
}

inline std::string trajectory_to_csv(const Trajectory& traj) {
    if (traj.size() == 0) throw validation_error("cannot serialize an empty trajectory");
    const int dim = static_cast<int>(traj.front().q.size());
    std::string out = trajectory_csv_header(dim) + "\n";
    for (std::size_t i = 0; i < traj.size(); ++i) {
        out += detail::format_double(traj.times[i]);
        const JetState& s = traj.states[i];
        for (const Vec* block : {&s.q, &s.v, &s.a, &s.j})
            for (int c = 0; c < dim; ++c) out += "," + detail::format_double((*block)[c]);
        out += "\n";
    }
    return out;
}

inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    atomic_write_text(path, trajectory_to_csv(traj));
}

inline Trajectory read_trajectory_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open trajectory csv '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line))
        throw validation_error("empty trajectory csv '" + path.string() + "'");
    const auto cols = 1 + std::count(line.begin(), line.end(), ',');
    if ((cols - 1) % 4 != 0)
        throw validation_error("trajectory csv '" + path.string() + "' has a malformed header");
    const int dim = static_cast<int>((cols - 1) / 4);

    Trajectory traj;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<double> row = detail::parse_csv_row(line);
        if (static_cast<int>(row.size()) != 1 + 4 * dim)
            throw validation_error("trajectory csv row width mismatch");
        traj.times.push_back(row[0]);
        JetState s{Vec(dim), Vec(dim), Vec(dim), Vec(dim)};
        for (int c = 0; c < dim; ++c) {
            s.q[c] = row[1 + c];
            s.v[c] = row[1 + dim + c];
            s.a[c] = row[1 + 2 * dim + c];
            s.j[c] = row[1 + 3 * dim + c];
        }
        traj.states.push_back(std::move(s));
    }
    if (traj.size() < 2) throw validation_error("trajectory csv has fewer than two samples");
    return traj;
}

inline void write_cloud_csv(const std::filesystem::path& path, const ObstacleCloud& cloud) {
    std::string out;
    for (const auto& p : cloud.points) {
        for (int i = 0; i < p.size(); ++i) {
            if (i) out += ",";
            out += detail::format_double(p[i]);
        }
        out += "\n";
    }
    atomic_write_text(path, out);
}

inline ObstacleCloud read_cloud_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open cloud csv '" + path.string() + "'");
    ObstacleCloud cloud;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<double> row = detail::parse_csv_row(line);
        Vec p(static_cast<int>(row.size()));
        for (std::size_t i = 0; i < row.size(); ++i) p[static_cast<int>(i)] = row[i];
        if (!cloud.points.empty() && cloud.points.front().size() != p.size())
            throw validation_error("cloud csv rows have inconsistent widths");
        cloud.points.push_back(std::move(p));
    }
    cloud.validate();
    return cloud;
}

/// Piecewise trajectory as one table with a piece_id column; times are
/// absolute. All pieces must share one chart dimension.
inline std::string hybrid_to_csv(const HybridTrajectory& hybrid) {
    if (hybrid.pieces.empty()) throw validation_error("cannot serialize an empty plan");
    const int dim = static_cast<int>(hybrid.pieces.front().trajectory.front().q.size());
    for (const auto& piece : hybrid.pieces)
        if (piece.trajectory.front().q.size() != dim)
            throw validation_error("piecewise csv needs all charts of equal dimension");

    std::string out = "piece_id," + trajectory_csv_header(dim) + "\n";
    for (std::size_t p = 0; p < hybrid.pieces.size(); ++p) {
        const HybridPiece& piece = hybrid.pieces[p];
        for (std::size_t i = 0; i < piece.trajectory.size(); ++i) {
            out += std::to_string(p) + ",";
            out += detail::format_double(piece.t_begin + piece.trajectory.times[i]);
            const JetState& s = piece.trajectory.states[i];
            for (const Vec* block : {&s.q, &s.v, &s.a, &s.j})
                for (int c = 0; c < dim; ++c) out += "," + detail::format_double((*block)[c]);
            out += "\n";
        }
    }
    return out;
}

inline void write_hybrid_csv(const std::filesystem::path& path, const HybridTrajectory& hybrid) {
    atomic_write_text(path, hybrid_to_csv(hybrid));
}

}  // namespace rsplines
