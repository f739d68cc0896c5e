#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "sympoc/vec.hpp"

namespace sympoc {

// value = f(x), gradient written into g (same length as x)
using Objective = std::function<double(std::span<const double> x, std::span<double> g)>;

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig cfg;
    long step = 0;
    Vec m;  // first moments
    Vec v;  // second moments

    explicit AdamState(std::size_t dim, AdamConfig c = {}) : cfg(c), m(dim, 0.0), v(dim, 0.0) {}
};

// Standard bias-corrected update, in place.
inline void adam_step(AdamState& state, std::span<const double> grad, std::span<double> params) {
    require(grad.size() == params.size() && grad.size() == state.m.size(),
            "adam: shape mismatch");
    ++state.step;
    const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * grad[i];
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * grad[i] * grad[i];
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] -= state.cfg.lr * mhat / (std::sqrt(vhat) + state.cfg.eps);
    }
}

struct LbfgsOptions {
    int memory = 10;
    double grad_tol = 1e-9;        // infinity norm
    double c1 = 1e-4;              // sufficient decrease
    double c2 = 0.9;               // curvature
    int max_line_search = 50;
    double curvature_min = 1e-10;  // pairs with <s,y> below this are skipped
};

struct LbfgsResult {
    Vec x;
    double f = 0.0;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

// Strong-Wolfe line search (bracket + zoom with bisection fallback).
// Returns the accepted step, or 0 on failure. On success x/f/g hold the new point.
inline double wolfe_line_search(const Objective& fn, std::span<const double> x0, double f0,
                                std::span<const double> g0, std::span<const double> dir,
                                const LbfgsOptions& opt, Vec& x, double& f, Vec& g) {
    const double d0 = dot(g0, dir);
    if (d0 >= 0.0) return 0.0;  // not a descent direction

    auto eval_at = [&](double alpha) {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = x0[i] + alpha * dir[i];
        f = fn(x, g);
        return dot(std::span<const double>(g), dir);
    };

    double alpha_prev = 0.0, f_prev = f0;
    double alpha = 1.0;
    double lo = 0.0, hi = 0.0, f_lo = f0;
    bool bracketed = false;

    for (int it = 0; it < opt.max_line_search; ++it) {
        const double deriv = eval_at(alpha);
        if (f > f0 + opt.c1 * alpha * d0 || (it > 0 && f >= f_prev)) {
            lo = alpha_prev;
            f_lo = f_prev;
            hi = alpha;
            bracketed = true;
            break;
        }
        if (std::abs(deriv) <= -opt.c2 * d0) return alpha;  // strong Wolfe met
        if (deriv >= 0.0) {
            lo = alpha;
            f_lo = f;
            hi = alpha_prev;
            bracketed = true;
            break;
        }
        alpha_prev = alpha;
        f_prev = f;
        alpha *= 2.0;
    }
    if (!bracketed) return 0.0;

    for (int it = 0; it < opt.max_line_search; ++it) {
        alpha = 0.5 * (lo + hi);
        const double deriv = eval_at(alpha);
        if (f > f0 + opt.c1 * alpha * d0 || f >= f_lo) {
            hi = alpha;
        } else {
            if (std::abs(deriv) <= -opt.c2 * d0) return alpha;
            if (deriv * (hi - lo) >= 0.0) hi = lo;
            lo = alpha;
            f_lo = f;
        }
        if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
    }
    return 0.0;
}

}  // namespace detail

// Two-loop-recursion L-BFGS. Stops when |grad|_inf < grad_tol or on the
// iteration cap; a failed line search returns the best iterate so far with
// converged = false.
inline LbfgsResult lbfgs_minimize(const Objective& fn, std::span<const double> x0, int max_iters,
                                  double grad_tol, LbfgsOptions opt = {}) {
    opt.grad_tol = grad_tol;
    const std::size_t dim = x0.size();
    LbfgsResult res;
    res.x.assign(x0.begin(), x0.end());
    Vec g(dim);
    res.f = fn(res.x, g);
    require(std::isfinite(res.f), "lbfgs: objective not finite at start");

    std::deque<std::pair<Vec, Vec>> pairs;  // (s, y), newest in back
    Vec dir(dim), x_new(dim), g_new(dim), alpha_buf;

    for (int iter = 0; iter < max_iters; ++iter) {
        if (norm_inf(g) < opt.grad_tol) {
            res.converged = true;
            return res;
        }
        // two-loop recursion
        dir.assign(g.begin(), g.end());
        alpha_buf.assign(pairs.size(), 0.0);
        for (std::size_t k = pairs.size(); k-- > 0;) {
            const auto& [s, y] = pairs[k];
            const double rho = 1.0 / dot(s, y);
            alpha_buf[k] = rho * dot(s, dir);
            axpy(-alpha_buf[k], y, dir);
        }
        if (!pairs.empty()) {
            const auto& [s, y] = pairs.back();
            const double gamma = dot(s, y) / dot(y, y);
            for (double& v : dir) v *= gamma;
        }
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            const auto& [s, y] = pairs[k];
            const double rho = 1.0 / dot(s, y);
            const double beta = rho * dot(y, dir);
            axpy(alpha_buf[k] - beta, s, dir);
        }
        for (double& v : dir) v = -v;

        double f_new = res.f;
        const double alpha =
            detail::wolfe_line_search(fn, res.x, res.f, g, dir, opt, x_new, f_new, g_new);
        if (alpha == 0.0) {
            res.converged = false;
            return res;
        }

        Vec s(dim), y(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            s[i] = x_new[i] - res.x[i];
            y[i] = g_new[i] - g[i];
        }
        if (dot(s, y) > opt.curvature_min) {
            pairs.emplace_back(std::move(s), std::move(y));
            if (static_cast<int>(pairs.size()) > opt.memory) pairs.pop_front();
        }
        res.x = x_new;
        res.f = f_new;
        g = g_new;
        res.iterations = iter + 1;
    }
    res.converged = norm_inf(g) < opt.grad_tol;
    return res;
}

}  // namespace sympoc
