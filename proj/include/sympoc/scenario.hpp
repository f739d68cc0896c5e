#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "sympoc/constraints.hpp"
#include "sympoc/dynamics.hpp"
#include "sympoc/losses.hpp"
#include "sympoc/sympnet.hpp"
#include "sympoc/vec.hpp"

namespace sympoc {

// Full problem description: geometry, boundary states, loss and net
// hyperparameters. Loaded from JSON or produced by a builtin; flags may
// override individual fields downstream.
struct Scenario {
    std::string name;
    int agent_count = 1;              // M
    int space_dim = 2;                // m
    double agent_radius = 0.0;        // physical C_d, used by the distance metric
    double constraint_radius = 0.0;   // inflated C_d' used inside h
    double speed_cap = 25.0;          // C_v
    double horizon = 1.0;             // T
    Vec x0, xT;
    std::vector<Obstacle> obstacles;
    std::optional<double> room_half_width;  // appends four wall constraints

    LossKind loss_kind = LossKind::AugLagrangian;
    double lambda = 600.0;
    double lambda_tilde = 200.0;
    BarrierConfig barrier{0.004, 4e-4};
    double rho1 = 1.0;
    double rho2 = 1.0;
    int num_samples = 40;  // N

    int net_layers = 6;
    int net_width = 60;
    Activation activation = Activation::Relu;
    bool latent_augment = false;
    int latent_dim = 0;  // 0: same size as the physical block

    int collocation_order = 30;  // N_c
    std::uint64_t seed = 1;
    int repeats = 1;
    std::string note;

    int state_dim() const { return agent_count * space_dim; }

    int latent_block() const {
        if (!latent_augment) return 0;
        return latent_dim > 0 ? latent_dim : state_dim();
    }

    int net_half_dim() const { return state_dim() + latent_block(); }

    void validate() const {
        require(agent_count >= 1, "scenario field 'agents.count' must be >= 1");
        require(space_dim >= 1, "scenario field 'agents.space_dim' must be >= 1");
        require(agent_radius >= 0.0, "scenario field 'agents.radius' must be >= 0");
        require(constraint_radius >= agent_radius,
                "scenario field 'agents.constraint_radius' must be >= the physical radius");
        require(speed_cap > 0.0, "scenario field 'speed_cap' must be positive");
        require(horizon > 0.0, "scenario field 'horizon' must be positive");
        require(static_cast<int>(x0.size()) == state_dim(),
                "scenario field 'x0' must have length M*m");
        require(static_cast<int>(xT.size()) == state_dim(),
                "scenario field 'xT' must have length M*m");
        require(barrier.a > 0.0, "scenario field 'loss.barrier_a' must be positive");
        require(barrier.eps > 0.0, "scenario field 'loss.barrier_eps' must be positive");
        require(num_samples >= 2, "scenario field 'loss.samples' must be >= 2");
        require(net_layers >= 1, "scenario field 'net.layers' must be >= 1");
        require(net_width >= 1, "scenario field 'net.width' must be >= 1");
        require(collocation_order >= 2, "scenario field 'refine.order' must be >= 2");
        require(repeats >= 1, "scenario field 'repeats' must be >= 1");
    }

    // Assembled h (obstacles + room walls + pairwise); null when h is empty.
    std::shared_ptr<const ConstraintSet> build_constraints() const {
        std::vector<Obstacle> obs = obstacles;
        if (room_half_width) obs.push_back(Room2d{*room_half_width});
        if (obs.empty() && agent_count < 2) return nullptr;
        return std::make_shared<ConstraintSet>(std::move(obs), constraint_radius, agent_count,
                                               space_dim);
    }

    HamiltonianSpec hamiltonian(std::shared_ptr<const ConstraintSet> cs) const {
        HamiltonianSpec h;
        h.speed_cap = speed_cap;
        h.block_dim = space_dim;
        h.constraint = std::move(cs);
        h.original_dim = state_dim();
        if (!h.constraint) {
            h.kind = latent_augment ? HamiltonianKind::LatentAugmented : HamiltonianKind::CappedKinetic;
            if (latent_augment) h.barrier = barrier;  // unused without constraints
        } else {
            h.kind = latent_augment ? HamiltonianKind::LatentAugmented : HamiltonianKind::Penalized;
            h.barrier = barrier;
        }
        return h;
    }

    LossConfig loss_config() const {
        LossConfig cfg;
        cfg.kind = loss_kind;
        cfg.lambda = lambda;
        cfg.lambda_tilde = lambda_tilde;
        cfg.barrier = barrier;
        cfg.num_samples = num_samples;
        cfg.horizon = horizon;
        cfg.x0 = x0;
        cfg.xT = xT;
        return cfg;
    }
};

namespace detail {

// Deterministic placement on concentric rings near the room boundary,
// keeping at least `min_sep` between neighbours.
inline Vec ring_layout(int count, double outer_radius, double min_sep) {
    Vec pts;
    pts.reserve(static_cast<std::size_t>(count) * 2);
    double radius = outer_radius;
    int placed = 0;
    while (placed < count && radius > min_sep) {
        const int capacity = std::max(
            1, static_cast<int>(std::floor(2.0 * std::numbers::pi * radius / min_sep)));
        const int here = std::min(capacity, count - placed);
        for (int i = 0; i < here; ++i) {
            const double ang = 2.0 * std::numbers::pi * i / here +
                               0.25 * std::numbers::pi * (placed > 0 ? 1.0 : 0.0);
            pts.push_back(radius * std::cos(ang));
            pts.push_back(radius * std::sin(ang));
        }
        placed += here;
        radius -= min_sep;
    }
    require(placed == count, "ring layout: room too small for the requested agent count");
    return pts;
}

}  // namespace detail

// Named scenarios. Obstacle endpoints and initial layouts that are not fixed
// by the problem statement are visually matched reconstructions; those carry
// a note saying so.
inline Scenario builtin_scenario(const std::string& name) {
    Scenario s;
    s.name = name;
    if (name == "four-drones-capsules") {
        s.agent_count = 4;
        s.space_dim = 2;
        s.agent_radius = 0.3;
        s.constraint_radius = 0.3;
        s.x0 = {-2, -2, 2, -2, 2, 2, -2, 2};
        s.xT = {2, 2, -2, 2, -2, -2, 2, -2};
        s.obstacles.push_back(Capsule{{-1.0, -0.9}, {1.0, -0.9}, 0.7});
        s.obstacles.push_back(Capsule{{-1.0, 0.9}, {1.0, 0.9}, 0.7});
        s.note = "capsule segment endpoints are a visually matched reconstruction";
        return s;
    }
    if (name == "circle2d") {
        s.agent_count = 1;
        s.space_dim = 2;
        s.agent_radius = 0.0;
        s.constraint_radius = 0.0;
        s.x0 = {0.0, 0.0};
        s.xT = {0.0, 1.0};
        s.obstacles.push_back(Ball{{0.0, 0.5}, 0.2});
        s.net_width = 60;
        return s;
    }
    if (name.rfind("room-", 0) == 0) {
        if (name == "room-128-balls") {
            s.agent_count = 128;
            s.agent_radius = 0.075;
            s.constraint_radius = 0.1;
            s.net_width = 200;
            s.room_half_width = 5.0;
            for (double sx : {-1.0, 1.0})
                for (double sy : {-1.0, 1.0})
                    s.obstacles.push_back(Ball{{2.5 * sx, 2.5 * sy}, 1.0});
            s.note = "ball obstacle centers/radii and ring layout are reconstructions";
        } else if (name == "room-256") {
            s.agent_count = 256;
            s.agent_radius = 0.09;
            s.constraint_radius = 0.1;
            s.net_width = 200;
            s.room_half_width = 5.0;
            s.note = "initial ring layout is a reconstruction";
        } else {
            const int m = std::stoi(name.substr(5));
            require(m >= 2, "room scenario needs at least 2 agents");
            s.agent_count = m;
            s.agent_radius = 0.3;
            s.constraint_radius = 0.3;
            s.net_width = m <= 16 ? 60 : 200;
            s.room_half_width = 5.0;
            s.note = "initial ring layout is a reconstruction";
        }
        s.space_dim = 2;
        const double sep = std::max(3.0 * s.constraint_radius, 2.5 * s.agent_radius + 0.1);
        s.x0 = detail::ring_layout(s.agent_count, 4.2, sep);
        s.xT.resize(s.x0.size());
        for (std::size_t i = 0; i < s.x0.size(); ++i) s.xT[i] = -s.x0[i];
        return s;
    }
    if (name == "swarm-3d") {
        s.agent_count = 100;
        s.space_dim = 3;
        s.agent_radius = 0.18;
        s.constraint_radius = 0.2;
        s.net_width = 200;
        s.obstacles.push_back(Box3d{{-1.8, -0.3, 0.2}, {1.8, 0.3, 6.8}});
        s.obstacles.push_back(Box3d{{2.2, -0.8, 0.2}, {3.8, 0.8, 3.8}});
        // 10x10 grid crossing the obstacle plane
        const Vec xs = linspace(-2.7, 2.7, 10);
        const Vec zs = linspace(0.8, 6.2, 10);
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 10; ++j) {
                s.x0.insert(s.x0.end(), {xs[static_cast<std::size_t>(i)], -3.0, zs[static_cast<std::size_t>(j)]});
                s.xT.insert(s.xT.end(), {xs[static_cast<std::size_t>(i)], 3.0, zs[static_cast<std::size_t>(j)]});
            }
        s.note = "grid layout is a reconstruction";
        return s;
    }
    throw std::invalid_argument("unknown builtin scenario '" + name + "'");
}

inline bool is_builtin_scenario(const std::string& name) {
    try {
        builtin_scenario(name);
        return true;
    } catch (const std::invalid_argument&) {
        return false;
    } catch (...) {
        return true;
    }
}

}  // namespace sympoc
