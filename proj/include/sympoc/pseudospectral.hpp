#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "sympoc/constraints.hpp"
#include "sympoc/optim.hpp"
#include "sympoc/trajectory.hpp"
#include "sympoc/vec.hpp"

namespace sympoc {

// Chebyshev-Gauss-Lobatto nodes on [0, T] (ascending, both endpoints
// included), Clenshaw-Curtis quadrature weights, and the differentiation
// matrix that is exact for polynomials up to the grid order at the nodes.
struct CollocationGrid {
    int order = 0;  // N_c
    double horizon = 0.0;
    Vec nodes;            // N_c + 1 ascending times
    Vec weights;          // integrate over [0, T]
    Vec diff;             // (N_c+1)^2 row-major, d/dt at nodes
    Vec barycentric;      // interpolation weights per node

    int count() const { return order + 1; }

    double d(int i, int j) const {
        return diff[static_cast<std::size_t>(i) * count() + static_cast<std::size_t>(j)];
    }
};

inline CollocationGrid cgl_grid(int order, double horizon) {
    require(order >= 2, "collocation grid: order must be >= 2");
    require(horizon > 0.0, "collocation grid: horizon must be positive");
    const int n = order;
    const int count = n + 1;
    CollocationGrid g;
    g.order = n;
    g.horizon = horizon;
    g.nodes.resize(static_cast<std::size_t>(count));
    for (int k = 0; k <= n; ++k)
        g.nodes[static_cast<std::size_t>(k)] =
            0.5 * horizon * (1.0 - std::cos(std::numbers::pi * k / n));

    // Clenshaw-Curtis weights on [-1,1], scaled by T/2; symmetric in k.
    g.weights.assign(static_cast<std::size_t>(count), 0.0);
    const bool even = n % 2 == 0;
    const double end_w = even ? 1.0 / (static_cast<double>(n) * n - 1.0)
                              : 1.0 / (static_cast<double>(n) * n);
    g.weights[0] = end_w;
    g.weights[static_cast<std::size_t>(n)] = end_w;
    for (int k = 1; k < n; ++k) {
        const double theta = std::numbers::pi * k / n;
        double v = 1.0;
        const int half = even ? n / 2 - 1 : (n - 1) / 2;
        for (int j = 1; j <= half; ++j)
            v -= 2.0 * std::cos(2.0 * j * theta) / (4.0 * j * j - 1.0);
        if (even) v -= std::cos(static_cast<double>(n) * theta) / (static_cast<double>(n) * n - 1.0);
        g.weights[static_cast<std::size_t>(k)] = 2.0 * v / n;
    }
    for (double& w : g.weights) w *= 0.5 * horizon;

    // Barycentric weights of Chebyshev-Lobatto points: (-1)^k, halved at the ends.
    g.barycentric.resize(static_cast<std::size_t>(count));
    for (int k = 0; k <= n; ++k) {
        double w = (k % 2 == 0) ? 1.0 : -1.0;
        if (k == 0 || k == n) w *= 0.5;
        g.barycentric[static_cast<std::size_t>(k)] = w;
    }

    // Differentiation matrix from the barycentric form, negative-sum diagonal.
    g.diff.assign(static_cast<std::size_t>(count) * count, 0.0);
    for (int i = 0; i <= n; ++i) {
        double row_sum = 0.0;
        for (int j = 0; j <= n; ++j) {
            if (i == j) continue;
            const double dij = (g.barycentric[static_cast<std::size_t>(j)] /
                                g.barycentric[static_cast<std::size_t>(i)]) /
                               (g.nodes[static_cast<std::size_t>(i)] - g.nodes[static_cast<std::size_t>(j)]);
            g.diff[static_cast<std::size_t>(i) * count + static_cast<std::size_t>(j)] = dij;
            row_sum += dij;
        }
        g.diff[static_cast<std::size_t>(i) * count + static_cast<std::size_t>(i)] = -row_sum;
    }
    return g;
}

// Evaluate the interpolating polynomial through (nodes, rows of values) at t.
inline Vec barycentric_eval(const CollocationGrid& g, std::span<const double> values_flat,
                            int state_dim, double t) {
    const int count = g.count();
    Vec out(static_cast<std::size_t>(state_dim), 0.0);
    double denom = 0.0;
    for (int k = 0; k < count; ++k) {
        const double dt = t - g.nodes[static_cast<std::size_t>(k)];
        if (dt == 0.0) {
            const double* row = values_flat.data() + static_cast<std::size_t>(k) * state_dim;
            std::copy(row, row + state_dim, out.begin());
            return out;
        }
        const double c = g.barycentric[static_cast<std::size_t>(k)] / dt;
        denom += c;
        const double* row = values_flat.data() + static_cast<std::size_t>(k) * state_dim;
        for (int i = 0; i < state_dim; ++i) out[static_cast<std::size_t>(i)] += c * row[i];
    }
    for (double& v : out) v /= denom;
    return out;
}

// Direct transcription: states at the nodes are the decision variables, the
// boundary rows are pinned, the energy objective uses the quadrature rule and
// the differentiation matrix, and h(x_k) >= 0 plus the per-agent speed cap
// hold at every node. h is additionally enforced at the interval midpoints
// (through the interpolating polynomial), which stops solutions that are
// feasible at the nodes but cross constraints between them.
struct NlpProblem {
    CollocationGrid grid;
    std::shared_ptr<const ConstraintSet> constraints;  // may be null
    double speed_cap = 0.0;
    int state_dim = 0;  // M*m
    int block_dim = 0;  // m
    Vec x0, xT;
    Vec states;       // (N_c+1) x state_dim row-major
    Vec check_times;  // interval midpoints
    Vec check_interp; // Lagrange evaluation weights, check x node row-major

    int node_count() const { return grid.count(); }
    int check_count() const { return static_cast<int>(check_times.size()); }
    int constraint_dim() const { return constraints ? constraints->output_dim() : 0; }
    int inequalities_per_node() const {
        return constraint_dim() + (speed_cap > 0.0 ? state_dim / block_dim : 0);
    }
    int total_inequalities() const {
        return node_count() * inequalities_per_node() + check_count() * constraint_dim();
    }
};

inline NlpProblem transcribe(std::shared_ptr<const ConstraintSet> constraints,
                             std::span<const double> x0, std::span<const double> xT,
                             double speed_cap, int block_dim, const Trajectory& init,
                             CollocationGrid grid) {
    require(!init.states.empty(), "transcribe: empty initial trajectory");
    require(init.times.front() <= 1e-12 && init.times.back() >= grid.horizon - 1e-12,
            "transcribe: initial trajectory does not cover [0, T]");
    require(x0.size() == xT.size() && static_cast<int>(x0.size()) == init.state_dim(),
            "transcribe: boundary state dimension mismatch");
    NlpProblem nlp;
    nlp.grid = std::move(grid);
    nlp.constraints = std::move(constraints);
    nlp.speed_cap = speed_cap;
    nlp.state_dim = static_cast<int>(x0.size());
    nlp.block_dim = block_dim;
    nlp.x0.assign(x0.begin(), x0.end());
    nlp.xT.assign(xT.begin(), xT.end());
    const int count = nlp.node_count();
    nlp.states.resize(static_cast<std::size_t>(count) * nlp.state_dim);
    for (int k = 0; k < count; ++k) {
        const Vec xk = init.interpolate_state(nlp.grid.nodes[static_cast<std::size_t>(k)]);
        std::copy(xk.begin(), xk.end(),
                  nlp.states.begin() + static_cast<std::size_t>(k) * nlp.state_dim);
    }
    std::copy(nlp.x0.begin(), nlp.x0.end(), nlp.states.begin());
    std::copy(nlp.xT.begin(), nlp.xT.end(),
              nlp.states.begin() + static_cast<std::size_t>(count - 1) * nlp.state_dim);

    if (nlp.constraints) {
        nlp.check_times.resize(static_cast<std::size_t>(count - 1));
        for (int k = 0; k + 1 < count; ++k)
            nlp.check_times[static_cast<std::size_t>(k)] =
                0.5 * (nlp.grid.nodes[static_cast<std::size_t>(k)] +
                       nlp.grid.nodes[static_cast<std::size_t>(k + 1)]);
        nlp.check_interp.assign(nlp.check_times.size() * static_cast<std::size_t>(count), 0.0);
        for (std::size_t m = 0; m < nlp.check_times.size(); ++m) {
            const double t = nlp.check_times[m];
            double denom = 0.0;
            double* row = nlp.check_interp.data() + m * static_cast<std::size_t>(count);
            for (int k = 0; k < count; ++k) {
                const double c = nlp.grid.barycentric[static_cast<std::size_t>(k)] /
                                 (t - nlp.grid.nodes[static_cast<std::size_t>(k)]);
                row[k] = c;
                denom += c;
            }
            for (int k = 0; k < count; ++k) row[k] /= denom;
        }
    }
    return nlp;
}

// Linear initialization x(t) = x0 + t (xT - x0)/T on a two-point trajectory.
inline Trajectory linear_init_trajectory(std::span<const double> x0, std::span<const double> xT,
                                         double horizon) {
    Trajectory t;
    t.times = {0.0, horizon};
    t.states.emplace_back(x0.begin(), x0.end());
    t.states.emplace_back(xT.begin(), xT.end());
    return t;
}

struct RefineOptions {
    int inner_max_iters = 400;
    double inner_grad_tol = 1e-6;  // relative to max(1, |f|)
    int outer_max = 80;
    double violation_tol = 1e-8;
    int stall_limit = 8;
    double rho_cap = 1e6;
    int output_grid = 100;  // N_out
};

struct RefineStats {
    double min_constraint = 0.0;  // min of h over the nodes (excludes speed caps)
    double cost = 0.0;            // quadrature energy
    int iterations = 0;           // total inner L-BFGS iterations
    int outer_iterations = 0;
    bool converged = false;
};

struct RefineOutcome {
    Trajectory trajectory;  // densified to the output grid
    RefineStats stats;
    Vec node_states;  // refined states at the collocation nodes
};

namespace detail {

struct NlpWork {
    const NlpProblem* nlp = nullptr;
    double rho = 1.0;
    Vec mu;  // one per inequality component, node-major

    int dim() const { return nlp->state_dim; }
    int interior() const { return nlp->node_count() - 2; }

    void velocities(std::span<const double> states, Vec& vel) const {
        const int count = nlp->node_count();
        const int d = dim();
        vel.assign(static_cast<std::size_t>(count) * d, 0.0);
        for (int k = 0; k < count; ++k) {
            double* vk = vel.data() + static_cast<std::size_t>(k) * d;
            for (int j = 0; j < count; ++j) {
                const double dkj = nlp->grid.d(k, j);
                if (dkj == 0.0) continue;
                const double* xj = states.data() + static_cast<std::size_t>(j) * d;
                for (int i = 0; i < d; ++i) vk[i] += dkj * xj[i];
            }
        }
    }

    // state interpolated at check time m (linear combination of node states)
    void check_state(std::span<const double> states, std::size_t m, Vec& out) const {
        const int count = nlp->node_count();
        const int d = dim();
        out.assign(static_cast<std::size_t>(d), 0.0);
        const double* row = nlp->check_interp.data() + m * static_cast<std::size_t>(count);
        for (int k = 0; k < count; ++k) {
            const double w = row[k];
            if (w == 0.0) continue;
            const double* xk = states.data() + static_cast<std::size_t>(k) * d;
            for (int i = 0; i < d; ++i) out[static_cast<std::size_t>(i)] += w * xk[i];
        }
    }

    // inequality values g >= 0: per node [h, speed caps], then h at midpoints
    void inequalities(std::span<const double> states, std::span<const double> vel, Vec& g) const {
        const int count = nlp->node_count();
        const int per = nlp->inequalities_per_node();
        const int hc = nlp->constraint_dim();
        g.assign(static_cast<std::size_t>(nlp->total_inequalities()), 0.0);
        for (int k = 0; k < count; ++k) {
            double* gk = g.data() + static_cast<std::size_t>(k) * per;
            const double* xk = states.data() + static_cast<std::size_t>(k) * dim();
            if (hc > 0)
                nlp->constraints->values(std::span<const double>(xk, static_cast<std::size_t>(dim())),
                                         std::span<double>(gk, static_cast<std::size_t>(hc)));
            if (nlp->speed_cap > 0.0) {
                const int agents = dim() / nlp->block_dim;
                const double* vk = vel.data() + static_cast<std::size_t>(k) * dim();
                for (int a = 0; a < agents; ++a) {
                    double s = 0.0;
                    for (int c = 0; c < nlp->block_dim; ++c) {
                        const double v = vk[a * nlp->block_dim + c];
                        s += v * v;
                    }
                    gk[hc + a] = nlp->speed_cap * nlp->speed_cap - s;
                }
            }
        }
        Vec xm;
        for (int m = 0; m < nlp->check_count(); ++m) {
            check_state(states, static_cast<std::size_t>(m), xm);
            double* gm = g.data() + static_cast<std::size_t>(count) * per +
                         static_cast<std::size_t>(m) * hc;
            nlp->constraints->values(xm, std::span<double>(gm, static_cast<std::size_t>(hc)));
        }
    }

    // augmented-Lagrangian objective and gradient over the interior states
    double eval(std::span<const double> interior_flat, std::span<double> grad) {
        const int count = nlp->node_count();
        const int d = dim();
        Vec states(nlp->states);
        std::copy(interior_flat.begin(), interior_flat.end(),
                  states.begin() + static_cast<std::size_t>(d));
        Vec vel, g;
        velocities(states, vel);
        inequalities(states, vel, g);

        double value = 0.0;
        // U_k collects w_k v_k plus the speed-cap penalty pullback; the state
        // gradient is D^T U plus the per-node h-constraint pullbacks.
        Vec u(static_cast<std::size_t>(count) * d, 0.0);
        for (int k = 0; k < count; ++k) {
            const double wk = nlp->grid.weights[static_cast<std::size_t>(k)];
            const double* vk = vel.data() + static_cast<std::size_t>(k) * d;
            double* uk = u.data() + static_cast<std::size_t>(k) * d;
            double vsq = 0.0;
            for (int i = 0; i < d; ++i) {
                vsq += vk[i] * vk[i];
                uk[i] = wk * vk[i];
            }
            value += 0.5 * wk * vsq;
        }

        const int per = nlp->inequalities_per_node();
        const int hc = nlp->constraint_dim();
        Vec hmult(static_cast<std::size_t>(hc));
        Vec node_pull(static_cast<std::size_t>(d));
        std::fill(grad.begin(), grad.end(), 0.0);
        for (int k = 0; k < count; ++k) {
            const double* gk = g.data() + static_cast<std::size_t>(k) * per;
            const double* mk = mu.data() + static_cast<std::size_t>(k) * per;
            bool any_h = false;
            for (int c = 0; c < per; ++c) {
                const double m = std::max(0.0, mk[c] - rho * gk[c]);
                if (m == 0.0) {
                    if (c < hc) hmult[static_cast<std::size_t>(c)] = 0.0;
                    continue;
                }
                value += 0.5 / rho * m * m;
                if (c < hc) {
                    hmult[static_cast<std::size_t>(c)] = m;
                    any_h = true;
                } else {
                    // speed cap: grad g = -2 D_k. v_(k,agent); dF = -m grad g
                    const int a = c - hc;
                    const double* vk = vel.data() + static_cast<std::size_t>(k) * d;
                    double* uk = u.data() + static_cast<std::size_t>(k) * d;
                    for (int cc = 0; cc < nlp->block_dim; ++cc)
                        uk[a * nlp->block_dim + cc] += 2.0 * m * vk[a * nlp->block_dim + cc];
                }
            }
            if (any_h && k > 0 && k < count - 1) {
                std::fill(node_pull.begin(), node_pull.end(), 0.0);
                const double* xk = states.data() + static_cast<std::size_t>(k) * d;
                nlp->constraints->accumulate_jtv(
                    std::span<const double>(xk, static_cast<std::size_t>(d)), hmult, node_pull);
                double* gr = grad.data() + static_cast<std::size_t>(k - 1) * d;
                for (int i = 0; i < d; ++i) gr[i] -= node_pull[static_cast<std::size_t>(i)];
            }
        }
        // midpoint h blocks: pull at the interpolated state, spread to nodes
        Vec xm;
        for (int m = 0; m < nlp->check_count(); ++m) {
            const std::size_t base = static_cast<std::size_t>(count) * per +
                                     static_cast<std::size_t>(m) * hc;
            bool any = false;
            for (int c = 0; c < hc; ++c) {
                const double mult = std::max(0.0, mu[base + c] - rho * g[base + c]);
                hmult[static_cast<std::size_t>(c)] = mult;
                if (mult != 0.0) {
                    value += 0.5 / rho * mult * mult;
                    any = true;
                }
            }
            if (!any) continue;
            check_state(states, static_cast<std::size_t>(m), xm);
            std::fill(node_pull.begin(), node_pull.end(), 0.0);
            nlp->constraints->accumulate_jtv(xm, hmult, node_pull);
            const double* row = nlp->check_interp.data() + static_cast<std::size_t>(m) * count;
            for (int l = 1; l < count - 1; ++l) {
                const double w = row[l];
                if (w == 0.0) continue;
                double* gr = grad.data() + static_cast<std::size_t>(l - 1) * d;
                for (int i = 0; i < d; ++i) gr[i] -= w * node_pull[static_cast<std::size_t>(i)];
            }
        }
        // grad += D^T U restricted to interior rows
        for (int l = 1; l < count - 1; ++l) {
            double* gr = grad.data() + static_cast<std::size_t>(l - 1) * d;
            for (int k = 0; k < count; ++k) {
                const double dkl = nlp->grid.d(k, l);
                if (dkl == 0.0) continue;
                const double* uk = u.data() + static_cast<std::size_t>(k) * d;
                for (int i = 0; i < d; ++i) gr[i] += dkl * uk[i];
            }
        }
        return value;
    }
};

}  // namespace detail

inline double nlp_cost(const NlpProblem& nlp, std::span<const double> states) {
    detail::NlpWork w;
    w.nlp = &nlp;
    Vec vel;
    w.velocities(states, vel);
    double cost = 0.0;
    const int d = nlp.state_dim;
    for (int k = 0; k < nlp.node_count(); ++k)
        cost += 0.5 * nlp.grid.weights[static_cast<std::size_t>(k)] *
                norm2_sq(std::span<const double>(vel).subspan(static_cast<std::size_t>(k) * d,
                                                              static_cast<std::size_t>(d)));
    return cost;
}

inline double nlp_min_constraint(const NlpProblem& nlp, std::span<const double> states) {
    if (!nlp.constraints) return 0.0;
    double m = std::numeric_limits<double>::infinity();
    const int d = nlp.state_dim;
    Vec h(static_cast<std::size_t>(nlp.constraint_dim()));
    for (int k = 0; k < nlp.node_count(); ++k) {
        const double* xk = states.data() + static_cast<std::size_t>(k) * d;
        nlp.constraints->values(std::span<const double>(xk, static_cast<std::size_t>(d)), h);
        for (double v : h) m = std::min(m, v);
    }
    detail::NlpWork work;
    work.nlp = &nlp;
    Vec xm;
    for (int c = 0; c < nlp.check_count(); ++c) {
        work.check_state(states, static_cast<std::size_t>(c), xm);
        nlp.constraints->values(xm, h);
        for (double v : h) m = std::min(m, v);
    }
    return m;
}

// Augmented Lagrangian over the node-wise inequalities with L-BFGS inner
// solves. Non-convergence returns the best iterate with converged = false.
inline RefineOutcome solve_refine(const NlpProblem& nlp, RefineOptions opt = {}) {
    detail::NlpWork work;
    work.nlp = &nlp;
    work.rho = 1.0;
    const int d = nlp.state_dim;
    work.mu.assign(static_cast<std::size_t>(nlp.total_inequalities()), 0.0);

    Vec interior(nlp.states.begin() + d, nlp.states.end() - d);
    Vec states(nlp.states);

    auto current_states = [&](std::span<const double> inter) {
        std::copy(inter.begin(), inter.end(), states.begin() + static_cast<std::size_t>(d));
        return std::span<const double>(states);
    };

    auto max_violation_of = [&](std::span<const double> full) {
        Vec vel, g;
        work.velocities(full, vel);
        work.inequalities(full, vel, g);
        double v = 0.0;
        for (double c : g) v = std::max(v, -c);
        return v;
    };

    RefineOutcome out;
    double prev_viol = std::numeric_limits<double>::infinity();
    double best_viol = std::numeric_limits<double>::infinity();
    double prev_cost = std::numeric_limits<double>::infinity();
    int stall = 0;

    const Objective objective = [&](std::span<const double> x, std::span<double> g) {
        return work.eval(x, g);
    };

    Vec grad_buf(interior.size());
    for (int outer = 0; outer < opt.outer_max; ++outer) {
        const LbfgsResult res =
            lbfgs_minimize(objective, interior, opt.inner_max_iters, opt.inner_grad_tol);
        interior = res.x;
        // a failed line search at a near-stationary point still counts; the
        // inner tolerance is read relative to the objective scale
        work.eval(interior, grad_buf);
        const bool inner_ok =
            res.converged ||
            norm_inf(grad_buf) <= opt.inner_grad_tol * std::max(1.0, std::abs(res.f));
        out.stats.iterations += res.iterations;
        out.stats.outer_iterations = outer + 1;

        const auto full = current_states(interior);
        const double viol = max_violation_of(full);
        const double cost = nlp_cost(nlp, full);
        // feasibility alone is not the exit: the multipliers must settle too,
        // observable as a stationary cost
        if (viol < opt.violation_tol && inner_ok &&
            std::abs(cost - prev_cost) <= 1e-9 * std::max(1.0, std::abs(cost))) {
            out.stats.converged = true;
            break;
        }
        // multiplier update mu <- max(0, mu - rho g)
        Vec vel, g;
        work.velocities(full, vel);
        work.inequalities(full, vel, g);
        for (std::size_t c = 0; c < work.mu.size(); ++c)
            work.mu[c] = std::max(0.0, work.mu[c] - work.rho * g[c]);
        if (viol >= opt.violation_tol) {
            if (outer > 0 && viol > 0.25 * prev_viol)
                work.rho = std::min(opt.rho_cap, work.rho * 2.0);
            if (viol < best_viol * (1.0 - 1e-6)) {
                best_viol = viol;
                stall = 0;
            } else if (++stall >= opt.stall_limit) {
                break;
            }
        } else {
            stall = 0;
        }
        prev_viol = viol;
        prev_cost = cost;
    }

    const auto full = current_states(interior);
    out.node_states.assign(full.begin(), full.end());
    out.stats.cost = nlp_cost(nlp, full);
    out.stats.min_constraint = nlp_min_constraint(nlp, full);

    // densify by interpolating the state and node-derivative polynomials
    Vec node_vel;
    work.velocities(full, node_vel);
    out.trajectory.times = linspace(0.0, nlp.grid.horizon, opt.output_grid + 1);
    out.trajectory.states.reserve(out.trajectory.times.size());
    out.trajectory.velocities.reserve(out.trajectory.times.size());
    for (double t : out.trajectory.times) {
        out.trajectory.states.push_back(barycentric_eval(nlp.grid, full, d, t));
        out.trajectory.velocities.push_back(barycentric_eval(nlp.grid, node_vel, d, t));
    }
    return out;
}

}  // namespace sympoc
