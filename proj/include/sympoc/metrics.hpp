#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include "sympoc/scenario.hpp"
#include "sympoc/trajectory.hpp"
#include "sympoc/vec.hpp"

namespace sympoc {

struct Metrics {
    double min_constraint = 0.0;  // over all h components and grid times
    double cost = 0.0;            // trapezoid rule on |v|^2 / 2
    double scaled_cost = 0.0;     // cost / M
    std::optional<double> min_normalized_distance;  // D; needs M >= 2
    double runtime_seconds = 0.0;
    long iterations = 0;
    std::optional<bool> converged;
};

// D and the cost follow the safe-zone convention: h uses the inflated
// constraint radius, D is normalized by the physical radius.
inline Metrics compute_metrics(const Trajectory& traj, const Scenario& scenario) {
    require(!traj.states.empty(), "metrics: empty trajectory");
    Metrics m;
    const int M = scenario.agent_count;
    const int sd = scenario.space_dim;

    if (traj.has_velocities()) {
        double cost = 0.0;
        for (std::size_t k = 0; k + 1 < traj.times.size(); ++k) {
            const double dt = traj.times[k + 1] - traj.times[k];
            cost += 0.5 * dt * (0.5 * norm2_sq(traj.velocities[k]) +
                                0.5 * norm2_sq(traj.velocities[k + 1]));
        }
        m.cost = cost;
    }
    m.scaled_cost = m.cost / M;

    const auto cs = scenario.build_constraints();
    if (cs) {
        double mc = std::numeric_limits<double>::infinity();
        Vec h(static_cast<std::size_t>(cs->output_dim()));
        for (const Vec& x : traj.states) {
            cs->values(x, h);
            for (double v : h) mc = std::min(mc, v);
        }
        m.min_constraint = mc;
    }

    if (M >= 2 && scenario.agent_radius > 0.0) {
        double dmin = std::numeric_limits<double>::infinity();
        for (const Vec& x : traj.states) {
            for (int i = 0; i < M; ++i) {
                for (int j = i + 1; j < M; ++j) {
                    double d2 = 0.0;
                    for (int c = 0; c < sd; ++c) {
                        const double diff = x[static_cast<std::size_t>(i * sd + c)] -
                                            x[static_cast<std::size_t>(j * sd + c)];
                        d2 += diff * diff;
                    }
                    dmin = std::min(dmin, std::sqrt(d2));
                }
            }
        }
        m.min_normalized_distance = dmin / (2.0 * scenario.agent_radius);
    }
    return m;
}

struct RepeatStats {
    int repeats = 0;
    double distance_mean = 0.0;
    double distance_std = 0.0;
    double cost_mean = 0.0;
    double cost_std = 0.0;
    double scaled_cost_mean = 0.0;
    double scaled_cost_std = 0.0;
};

inline RepeatStats aggregate_metrics(std::span<const Metrics> runs) {
    RepeatStats st;
    st.repeats = static_cast<int>(runs.size());
    if (runs.empty()) return st;
    auto mean_std = [&](auto getter) {
        double mean = 0.0;
        int n = 0;
        for (const Metrics& m : runs) {
            const auto v = getter(m);
            if (!v) continue;
            mean += *v;
            ++n;
        }
        if (n == 0) return std::pair<double, double>{0.0, 0.0};
        mean /= n;
        double var = 0.0;
        for (const Metrics& m : runs) {
            const auto v = getter(m);
            if (!v) continue;
            var += (*v - mean) * (*v - mean);
        }
        const double sd = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
        return std::pair<double, double>{mean, sd};
    };
    std::tie(st.distance_mean, st.distance_std) =
        mean_std([](const Metrics& m) { return m.min_normalized_distance; });
    std::tie(st.cost_mean, st.cost_std) =
        mean_std([](const Metrics& m) { return std::optional<double>(m.cost); });
    std::tie(st.scaled_cost_mean, st.scaled_cost_std) =
        mean_std([](const Metrics& m) { return std::optional<double>(m.scaled_cost); });
    return st;
}

}  // namespace sympoc
