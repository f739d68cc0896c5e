#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <span>

#include "sympoc/constraints.hpp"
#include "sympoc/vec.hpp"

namespace sympoc {

// C^1 log penalty: -log(x) above the switch point a, quadratic extension below.
struct BarrierConfig {
    double a = 0.004;     // switch point (> 0)
    double eps = 4e-4;    // penalty weight
};

inline double barrier_scalar(double a, double x) {
    if (x > a) return -std::log(x);
    const double t = (x - 2.0 * a) / a;
    return -std::log(a) + 0.5 * (t * t - 1.0);
}

inline double barrier_deriv(double a, double x) {
    if (x > a) return -1.0 / x;
    return (x - 2.0 * a) / (a * a);
}

inline double barrier_second(double a, double x) {
    if (x > a) return 1.0 / (x * x);
    return 1.0 / (a * a);
}

// value = sum_i beta_a(x_i), grad componentwise
inline std::pair<double, Vec> barrier_value_grad(const BarrierConfig& cfg,
                                                 std::span<const double> x) {
    double value = 0.0;
    Vec grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        value += barrier_scalar(cfg.a, x[i]);
        grad[i] = barrier_deriv(cfg.a, x[i]);
    }
    return {value, std::move(grad)};
}

// Velocity-capped kinetic term for one agent block:
//   |p| <= C_v : |p|^2 / 2,  gradient p
//   |p| >  C_v : C_v |p| - C_v^2 / 2,  gradient C_v p / |p|
// Both branches agree in value and gradient at |p| = C_v.
inline double capped_kinetic_block(std::span<const double> p, double speed_cap,
                                   std::span<double> grad) {
    const double r2 = norm2_sq(p);
    if (r2 <= speed_cap * speed_cap) {
        for (std::size_t i = 0; i < p.size(); ++i) grad[i] = p[i];
        return 0.5 * r2;
    }
    const double r = std::sqrt(r2);
    const double scale = speed_cap / r;
    for (std::size_t i = 0; i < p.size(); ++i) grad[i] = scale * p[i];
    return speed_cap * r - 0.5 * speed_cap * speed_cap;
}

// Full momentum vector treated as consecutive agent blocks of size block_dim.
inline double hamiltonian_capped(std::span<const double> p, int block_dim, double speed_cap,
                                 std::span<double> grad_p) {
    require(block_dim >= 1 && p.size() % static_cast<std::size_t>(block_dim) == 0,
            "capped Hamiltonian: momentum length must be a multiple of the block size");
    double value = 0.0;
    for (std::size_t off = 0; off < p.size(); off += static_cast<std::size_t>(block_dim))
        value += capped_kinetic_block(p.subspan(off, static_cast<std::size_t>(block_dim)),
                                      speed_cap, grad_p.subspan(off, static_cast<std::size_t>(block_dim)));
    return value;
}

enum class HamiltonianKind { CappedKinetic, Penalized, LatentAugmented };

struct HamiltonianSpec {
    HamiltonianKind kind = HamiltonianKind::CappedKinetic;
    double speed_cap = 25.0;
    int block_dim = 1;  // agent momentum block size m
    std::optional<BarrierConfig> barrier;
    std::shared_ptr<const ConstraintSet> constraint;
    int original_dim = 0;  // physical block size n1 for the latent-augmented kind

    int physical_dim(int n) const {
        return kind == HamiltonianKind::LatentAugmented ? original_dim : n;
    }
};

struct HamiltonianEval {
    double value = 0.0;
    Vec grad_x;
    Vec grad_p;
};

inline HamiltonianEval hamiltonian_eval(const HamiltonianSpec& spec, std::span<const double> x,
                                        std::span<const double> p) {
    require(x.size() == p.size(), "Hamiltonian: x and p must have equal length");
    const int n = static_cast<int>(x.size());
    HamiltonianEval out;
    out.grad_x.assign(x.size(), 0.0);
    out.grad_p.assign(p.size(), 0.0);

    const int n1 = spec.physical_dim(n);
    require(n1 <= n, "Hamiltonian: physical block exceeds state size");

    out.value = hamiltonian_capped(p.first(static_cast<std::size_t>(n1)), spec.block_dim,
                                   spec.speed_cap,
                                   std::span<double>(out.grad_p).first(static_cast<std::size_t>(n1)));
    if (spec.kind == HamiltonianKind::LatentAugmented) {
        const auto p2 = p.subspan(static_cast<std::size_t>(n1));
        out.value += 0.5 * norm2_sq(p2);
        for (std::size_t i = static_cast<std::size_t>(n1); i < p.size(); ++i) out.grad_p[i] = p[i];
    }
    if (spec.kind == HamiltonianKind::Penalized)
        require(spec.constraint != nullptr, "penalized Hamiltonian requires a constraint set");
    if (spec.kind != HamiltonianKind::CappedKinetic && spec.constraint) {
        require(spec.barrier.has_value(), "penalized Hamiltonian requires a barrier");
        const auto& cs = *spec.constraint;
        const auto x1 = x.first(static_cast<std::size_t>(n1));
        const Vec h = cs.values(x1);
        Vec bgrad(h.size());
        double bval = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i) {
            bval += barrier_scalar(spec.barrier->a, h[i]);
            bgrad[i] = barrier_deriv(spec.barrier->a, h[i]);
        }
        out.value -= spec.barrier->eps * bval;
        Vec jtv(x1.size(), 0.0);
        cs.accumulate_jtv(x1, bgrad, jtv);
        for (std::size_t i = 0; i < jtv.size(); ++i) out.grad_x[i] = -spec.barrier->eps * jtv[i];
    }
    return out;
}

}  // namespace sympoc
