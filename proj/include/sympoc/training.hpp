#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sympoc/losses.hpp"
#include "sympoc/optim.hpp"
#include "sympoc/scenario.hpp"
#include "sympoc/sympnet.hpp"
#include "sympoc/trajectory.hpp"

namespace sympoc {

struct TrainConfig {
    int iterations = 20000;
    int inner_steps = 500;  // optimizer steps between multiplier updates
    AdamConfig adam{};
    double grad_clip = 1e4;  // barrier gradients blow up near h = 0
    std::uint64_t seed = 1;
};

struct TrainResult {
    SympNetParams net;
    LatentLine line;
    std::vector<double> loss_history;
    MultiplierState multipliers;
};

namespace detail {

// Flat view over the trainable leaves, in a fixed order that survives graph
// rebuilds (net blocks first, then the latent lines).
struct TrainableView {
    std::vector<ad::NodeHandle> handles;
    std::vector<std::size_t> sizes;
    std::size_t total = 0;

    void add(ad::NodeHandle h, std::size_t size) {
        handles.push_back(h);
        sizes.push_back(size);
        total += size;
    }

    static TrainableView over(const LossGraph& g, bool include_net, bool include_lines) {
        TrainableView v;
        if (include_net)
            for (const auto& lh : g.net_handles.layers) {
                v.add(lh.K, g.tape.value(lh.K).size());
                v.add(lh.a, g.tape.value(lh.a).size());
                v.add(lh.b, g.tape.value(lh.b).size());
            }
        if (include_lines)
            for (const auto& lh : g.line_handles) {
                v.add(lh.y0, g.tape.value(lh.y0).size());
                v.add(lh.u, g.tape.value(lh.u).size());
                v.add(lh.q0, g.tape.value(lh.q0).size());
            }
        return v;
    }

    Vec pack(const ad::Tape& tape) const {
        Vec flat(total);
        std::size_t off = 0;
        for (std::size_t k = 0; k < handles.size(); ++k) {
            const auto v = tape.value(handles[k]);
            std::copy(v.begin(), v.end(), flat.begin() + static_cast<std::ptrdiff_t>(off));
            off += sizes[k];
        }
        return flat;
    }

    void unpack(ad::Tape& tape, std::span<const double> flat) const {
        std::size_t off = 0;
        for (std::size_t k = 0; k < handles.size(); ++k) {
            tape.set_value(handles[k], flat.subspan(off, sizes[k]));
            off += sizes[k];
        }
    }

    void read_gradients(const ad::Tape& tape, std::span<double> flat) const {
        std::size_t off = 0;
        for (std::size_t k = 0; k < handles.size(); ++k) {
            const auto a = tape.adjoint(handles[k]);
            std::copy(a.begin(), a.end(), flat.begin() + static_cast<std::ptrdiff_t>(off));
            off += sizes[k];
        }
    }
};

inline void clip_gradient(std::span<double> g, double max_norm) {
    const double n = norm2(g);
    if (n > max_norm) {
        const double s = max_norm / n;
        for (double& v : g) v *= s;
    }
}

[[noreturn]] inline void abort_non_finite(const LossGraph& g, int iteration) {
    std::ostringstream msg;
    msg << "training aborted: non-finite loss at iteration " << iteration;
    msg << " (residual=" << g.tape.scalar(g.residual_total)
        << ", boundary=" << g.tape.scalar(g.boundary_total);
    if (g.penalty_total.valid()) msg << ", penalty=" << g.tape.scalar(g.penalty_total);
    msg << ")";
    throw std::runtime_error(msg.str());
}

inline LatentLine initial_line(const Scenario& s) {
    const int n = s.net_half_dim();
    LatentLine line;
    line.y0 = full_state_target(s.x0, n);
    line.u.assign(static_cast<std::size_t>(n), 0.0);
    for (std::size_t i = 0; i < s.x0.size(); ++i)
        line.u[i] = (s.xT[i] - s.x0[i]) / s.horizon;
    line.q0.assign(static_cast<std::size_t>(n), 0.0);
    return line;
}

struct TrainCases {
    SympNetParams net;
    std::vector<LatentLine> lines;
    std::vector<LossConfig> cfgs;
    std::vector<MultiplierState> mults;
    HamiltonianSpec hamiltonian;
    std::shared_ptr<const ConstraintSet> constraints;
};

// Adam over net + lines, with the augmented-Lagrangian outer loop when the
// loss kind asks for it. Used by both the single-case and the offline paths.
inline std::vector<double> run_adam_training(TrainCases& tc, const TrainConfig& cfg) {
    const bool aug = !tc.mults.empty();
    std::vector<double> history;
    history.reserve(static_cast<std::size_t>(cfg.iterations));

    LossGraph graph = build_loss_graph(tc.net, tc.hamiltonian, tc.cfgs, tc.lines, tc.mults);
    TrainableView view = TrainableView::over(graph, true, true);
    AdamState adam(view.total, cfg.adam);
    Vec grads(view.total);

    Vec prev_viol;  // per case: constraint violation, boundary error
    const Vec times = sample_times(tc.cfgs.front().num_samples, tc.cfgs.front().horizon);

    int done = 0;
    while (done < cfg.iterations) {
        const int chunk = aug ? std::min(cfg.inner_steps, cfg.iterations - done) : cfg.iterations;
        for (int it = 0; it < chunk; ++it) {
            graph.tape.forward();
            const double loss = graph.tape.scalar(graph.loss);
            if (!std::isfinite(loss)) abort_non_finite(graph, done + it);
            history.push_back(loss);
            graph.tape.backward(graph.loss);
            view.read_gradients(graph.tape, grads);
            clip_gradient(grads, cfg.grad_clip);
            Vec params = view.pack(graph.tape);
            adam_step(adam, grads, params);
            view.unpack(graph.tape, params);
        }
        done += chunk;
        // sync latest values back into the structs
        read_net_params(graph.tape, graph.net_handles, tc.net);
        for (std::size_t k = 0; k < tc.lines.size(); ++k)
            read_line(graph.tape, graph.line_handles[k], tc.lines[k]);
        if (!aug || done >= cfg.iterations) {
            if (aug) {
                // final multiplier pass so returned state matches the last iterate
            }
            if (done >= cfg.iterations) break;
            continue;
        }
        Vec cur_viol(2 * tc.lines.size(), 0.0);
        for (std::size_t k = 0; k < tc.lines.size(); ++k) {
            const int n = tc.net.half_dim;
            const Vec x0f = full_state_target(tc.cfgs[k].x0, n);
            const Vec xTf = full_state_target(tc.cfgs[k].xT, n);
            MultiplierUpdate up = update_multipliers(
                tc.mults[k], tc.net, tc.lines[k], tc.constraints.get(), x0f, xTf,
                tc.cfgs[k].horizon, times, tc.hamiltonian.physical_dim(n));
            cur_viol[2 * k] = up.max_constraint_violation;
            cur_viol[2 * k + 1] = up.max_boundary_error;
            if (!prev_viol.empty())
                up.state = autotune_rho(prev_viol[2 * k], cur_viol[2 * k], prev_viol[2 * k + 1],
                                        cur_viol[2 * k + 1], std::move(up.state));
            tc.mults[k] = std::move(up.state);
        }
        prev_viol = cur_viol;
        graph = build_loss_graph(tc.net, tc.hamiltonian, tc.cfgs, tc.lines, tc.mults);
        view = TrainableView::over(graph, true, true);
    }
    return history;
}

inline TrainCases make_cases(const Scenario& s, std::span<const Vec> case_x0s) {
    s.validate();
    TrainCases tc;
    tc.constraints = s.build_constraints();
    tc.hamiltonian = s.hamiltonian(tc.constraints);
    Rng rng(s.seed);
    tc.net = make_sympnet(s.net_half_dim(), s.net_layers, s.net_width, s.activation, rng);
    const int dim_h = tc.constraints ? tc.constraints->output_dim() : 0;
    for (const Vec& x0 : case_x0s) {
        Scenario sk = s;
        sk.x0 = x0;
        tc.cfgs.push_back(sk.loss_config());
        tc.lines.push_back(initial_line(sk));
        if (s.loss_kind == LossKind::AugLagrangian)
            tc.mults.push_back(make_multiplier_state(s.num_samples, dim_h, s.net_half_dim()));
    }
    return tc;
}

}  // namespace detail

// Single-case training: base/log/quad kinds run a flat Adam loop, the
// augmented-Lagrangian kind alternates inner steps with multiplier updates.
inline TrainResult train_sympocnet(const Scenario& scenario, const TrainConfig& cfg) {
    Scenario s = scenario;
    s.seed = cfg.seed;
    detail::TrainCases tc = detail::make_cases(s, std::vector<Vec>{s.x0});
    TrainResult out;
    out.loss_history = detail::run_adam_training(tc, cfg);
    out.net = std::move(tc.net);
    out.line = std::move(tc.lines.front());
    out.multipliers = tc.mults.empty()
                          ? make_multiplier_state(s.num_samples, 0, s.net_half_dim())
                          : std::move(tc.mults.front());
    return out;
}

struct OfflineResult {
    SympNetParams net;
    std::vector<Vec> sample_x0s;
    std::vector<LatentLine> lines;
    std::vector<double> loss_history;
};

// One shared net trained jointly against K sampled initial states; the joint
// loss is the sum of the per-case losses.
inline OfflineResult offline_train(const Scenario& scenario, std::span<const Vec> sampled_x0s,
                                   const TrainConfig& cfg) {
    require(!sampled_x0s.empty(), "offline training needs at least one sampled case");
    Scenario s = scenario;
    s.seed = cfg.seed;
    detail::TrainCases tc = detail::make_cases(s, sampled_x0s);
    OfflineResult out;
    out.loss_history = detail::run_adam_training(tc, cfg);
    out.net = std::move(tc.net);
    out.lines = std::move(tc.lines);
    out.sample_x0s.assign(sampled_x0s.begin(), sampled_x0s.end());
    return out;
}

struct OnlineResult {
    std::vector<LatentLine> lines;
    double final_loss = 0.0;
    int iterations = 0;
    bool converged = false;
};

// L-BFGS over the latent lines only; the net parameters stay frozen. Each
// case starts from the offline line whose sampled start is nearest to its
// exact one. Multiple cases share one solve, their losses summed.
inline OnlineResult online_adapt_joint(const SympNetParams& net, const Scenario& scenario,
                                       std::span<const Vec> exact_x0s,
                                       const OfflineResult& offline, int lbfgs_iters,
                                       double grad_tol = 1e-9) {
    require(!exact_x0s.empty(), "online adaptation needs at least one case");
    Scenario s = scenario;
    std::vector<LossConfig> cfgs;
    std::vector<LatentLine> lines;
    std::vector<MultiplierState> mults;
    const auto cs = s.build_constraints();
    const HamiltonianSpec H = s.hamiltonian(cs);
    const int dim_h = cs ? cs->output_dim() : 0;
    for (const Vec& x0 : exact_x0s) {
        Scenario sk = s;
        sk.x0 = x0;
        cfgs.push_back(sk.loss_config());
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < offline.sample_x0s.size(); ++k) {
            const Vec diff = operator_sub(x0, offline.sample_x0s[k]);
            const double d = norm2(diff);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        lines.push_back(offline.lines[best]);
        if (s.loss_kind == LossKind::AugLagrangian)
            mults.push_back(make_multiplier_state(s.num_samples, dim_h, net.half_dim));
    }

    LossGraph graph = build_loss_graph(net, H, cfgs, lines, mults);
    const detail::TrainableView view = detail::TrainableView::over(graph, false, true);
    const Objective objective = [&](std::span<const double> x, std::span<double> g) {
        view.unpack(graph.tape, x);
        graph.tape.forward();
        graph.tape.backward(graph.loss);
        view.read_gradients(graph.tape, g);
        return graph.tape.scalar(graph.loss);
    };
    const Vec x0 = view.pack(graph.tape);
    const LbfgsResult res = lbfgs_minimize(objective, x0, lbfgs_iters, grad_tol);
    view.unpack(graph.tape, res.x);

    OnlineResult out;
    out.final_loss = res.f;
    out.iterations = res.iterations;
    out.converged = res.converged;
    out.lines.resize(exact_x0s.size());
    for (std::size_t k = 0; k < out.lines.size(); ++k)
        read_line(graph.tape, graph.line_handles[k], out.lines[k]);
    return out;
}

inline LatentLine online_adapt(const SympNetParams& net, const Scenario& scenario,
                               std::span<const double> exact_x0, const OfflineResult& offline,
                               int lbfgs_iters, double grad_tol = 1e-9) {
    const std::vector<Vec> cases{Vec(exact_x0.begin(), exact_x0.end())};
    return online_adapt_joint(net, scenario, cases, offline, lbfgs_iters, grad_tol)
        .lines.front();
}

// x(s) = phi1(y0 + s u, q0) on a uniform grid, exact velocities from the
// tangent pass, latent coordinates dropped.
inline Trajectory extract_trajectory(const SympNetParams& net, const LatentLine& line,
                                     int output_grid, double horizon, int physical_dim) {
    Trajectory traj;
    traj.times = linspace(0.0, horizon, output_grid + 1);
    traj.states.reserve(traj.times.size());
    traj.velocities.reserve(traj.times.size());
    const std::size_t n = line.y0.size();
    Vec y(n), tq(n, 0.0);
    for (double t : traj.times) {
        for (std::size_t i = 0; i < n; ++i) y[i] = line.y0[i] + t * line.u[i];
        const TangentResult r = sympnet_forward_tangent(net, y, line.q0, line.u, tq);
        traj.states.emplace_back(r.x.begin(), r.x.begin() + physical_dim);
        traj.velocities.emplace_back(r.tx.begin(), r.tx.begin() + physical_dim);
    }
    return traj;
}

}  // namespace sympoc
