#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sympoc/trajectory.hpp"
#include "sympoc/vec.hpp"

namespace sympoc {

namespace detail {

inline std::string format_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

// CSV rows `t,agent,x1..xm,v1..vm`, one row per (time, agent), times outer,
// decimals at 17 significant digits so a re-parse is value-exact.
inline void export_trajectory(const Trajectory& traj, int agent_count, int space_dim,
                              const std::string& path) {
    require(traj.state_dim() == agent_count * space_dim,
            "trajectory export: state dim does not match agents");
    require(traj.has_velocities(), "trajectory export: velocities required");
    std::ofstream f(path);
    require(f.good(), "trajectory export: cannot open '" + path + "'");
    f << "t,agent";
    for (int c = 1; c <= space_dim; ++c) f << ",x" << c;
    for (int c = 1; c <= space_dim; ++c) f << ",v" << c;
    f << "\n";
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        for (int a = 0; a < agent_count; ++a) {
            f << detail::format_g17(traj.times[k]) << "," << (a + 1);
            for (int c = 0; c < space_dim; ++c)
                f << "," << detail::format_g17(traj.states[k][static_cast<std::size_t>(a * space_dim + c)]);
            for (int c = 0; c < space_dim; ++c)
                f << "," << detail::format_g17(traj.velocities[k][static_cast<std::size_t>(a * space_dim + c)]);
            f << "\n";
        }
    }
}

struct ImportedTrajectory {
    Trajectory trajectory;
    int agent_count = 0;
    int space_dim = 0;
};

inline ImportedTrajectory import_trajectory(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), "trajectory import: cannot open '" + path + "'");
    std::string line;
    require(static_cast<bool>(std::getline(f, line)), "trajectory import: missing header");
    const auto header = detail::split_csv(line);
    require(header.size() >= 4 && header[0] == "t" && header[1] == "agent",
            "trajectory import: malformed header");
    const int space_dim = static_cast<int>((header.size() - 2) / 2);
    require(header.size() == 2 + 2 * static_cast<std::size_t>(space_dim),
            "trajectory import: malformed header");

    ImportedTrajectory out;
    out.space_dim = space_dim;
    Trajectory& traj = out.trajectory;
    int line_no = 1;
    double cur_t = 0.0;
    bool have_t = false;
    Vec xs, vs;
    auto flush = [&]() {
        if (!have_t) return;
        traj.times.push_back(cur_t);
        traj.states.push_back(xs);
        traj.velocities.push_back(vs);
        xs.clear();
        vs.clear();
    };
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = detail::split_csv(line);
        if (cells.size() != header.size())
            throw std::invalid_argument("trajectory import: wrong column count at line " +
                                        std::to_string(line_no));
        Vec row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const char* b = cells[c].data();
            const char* e = b + cells[c].size();
            const auto [p, ec] = std::from_chars(b, e, row[c]);
            if (ec != std::errc{} || p != e)
                throw std::invalid_argument("trajectory import: bad number at line " +
                                            std::to_string(line_no));
        }
        const double t = row[0];
        if (!have_t || t != cur_t) {
            flush();
            cur_t = t;
            have_t = true;
        }
        for (int c = 0; c < space_dim; ++c) xs.push_back(row[static_cast<std::size_t>(2 + c)]);
        for (int c = 0; c < space_dim; ++c)
            vs.push_back(row[static_cast<std::size_t>(2 + space_dim + c)]);
    }
    flush();
    require(!traj.states.empty(), "trajectory import: no data rows");
    out.agent_count = static_cast<int>(traj.states.front().size()) / space_dim;
    for (const Vec& s : traj.states)
        require(static_cast<int>(s.size()) == out.agent_count * space_dim,
                "trajectory import: inconsistent row counts per time");
    return out;
}

}  // namespace sympoc
