#pragma once

#include <span>
#include <vector>

#include "sympoc/vec.hpp"

namespace sympoc {

// Time-indexed samples of the full physical state (latent coordinates are
// never stored here). `states[k]` and `velocities[k]` have length M*m.
struct Trajectory {
    Vec times;
    std::vector<Vec> states;
    std::vector<Vec> velocities;  // may be empty

    bool has_velocities() const { return !velocities.empty(); }

    int state_dim() const { return states.empty() ? 0 : static_cast<int>(states.front().size()); }

    // piecewise-linear state at time t (clamped to the covered range)
    Vec interpolate_state(double t) const {
        require(!states.empty(), "trajectory: empty");
        if (t <= times.front()) return states.front();
        if (t >= times.back()) return states.back();
        std::size_t hi = 1;
        while (times[hi] < t) ++hi;
        const std::size_t lo = hi - 1;
        const double w = (t - times[lo]) / (times[hi] - times[lo]);
        Vec out(states[lo].size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = (1.0 - w) * states[lo][i] + w * states[hi][i];
        return out;
    }
};

}  // namespace sympoc
