#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "sympoc/dynamics.hpp"
#include "sympoc/sympnet.hpp"
#include "sympoc/tape.hpp"
#include "sympoc/vec.hpp"

namespace sympoc {

enum class LossKind : std::uint8_t { Base, LogPenalty, QuadPenalty, AugLagrangian };

struct LossConfig {
    LossKind kind = LossKind::Base;
    double lambda = 600.0;         // boundary weight
    double lambda_tilde = 200.0;   // penalty weight (log / quad kinds)
    BarrierConfig barrier;
    int num_samples = 40;          // N
    double horizon = 1.0;          // T
    Vec x0;                        // physical boundary states
    Vec xT;
};

// s_j = j T / N for j = 1..N; the initial time is covered by the boundary term.
inline Vec sample_times(int num_samples, double horizon) {
    require(num_samples >= 2, "loss: need at least two sample times");
    Vec s(static_cast<std::size_t>(num_samples));
    for (int j = 1; j <= num_samples; ++j)
        s[static_cast<std::size_t>(j - 1)] = horizon * static_cast<double>(j) / num_samples;
    return s;
}

struct MultiplierState {
    std::vector<Vec> mu;  // one vector per sample time, componentwise >= 0
    Vec lam1, lam2;       // boundary multipliers, full state dimension
    double rho1 = 1.0;
    double rho2 = 1.0;
};

inline MultiplierState make_multiplier_state(int num_samples, int constraint_dim, int state_dim) {
    MultiplierState m;
    m.mu.assign(static_cast<std::size_t>(num_samples), Vec(static_cast<std::size_t>(constraint_dim), 0.0));
    m.lam1.assign(static_cast<std::size_t>(state_dim), 0.0);
    m.lam2.assign(static_cast<std::size_t>(state_dim), 0.0);
    return m;
}

struct LineTapeHandles {
    ad::NodeHandle y0, u, q0;
};

inline LineTapeHandles bind_line(ad::Tape& tape, const LatentLine& line) {
    return {tape.parameter(line.y0), tape.parameter(line.u), tape.parameter(line.q0)};
}

inline void set_line(ad::Tape& tape, const LineTapeHandles& h, const LatentLine& line) {
    tape.set_value(h.y0, line.y0);
    tape.set_value(h.u, line.u);
    tape.set_value(h.q0, line.q0);
}

inline void read_line(const ad::Tape& tape, const LineTapeHandles& h, LatentLine& line) {
    const auto y0 = tape.value(h.y0);
    const auto u = tape.value(h.u);
    const auto q0 = tape.value(h.q0);
    line.y0.assign(y0.begin(), y0.end());
    line.u.assign(u.begin(), u.end());
    line.q0.assign(q0.begin(), q0.end());
}

// Pad a physical boundary state with zeros for the latent block.
inline Vec full_state_target(std::span<const double> physical, int state_dim) {
    Vec v(physical.begin(), physical.end());
    v.resize(static_cast<std::size_t>(state_dim), 0.0);
    return v;
}

namespace detail {

struct SampleNodes {
    ad::NodeHandle x, p, tx, tp;  // full-state forward + tangent
    ad::NodeHandle x_phys;        // physical slice of x
    ad::NodeHandle h;             // constraint values at x_phys (invalid if unconstrained)
};

inline SampleNodes emit_sample(ad::Tape& tape, const SympNetParams& net, const NetTapeHandles& hs,
                               const LineTapeHandles& line, const HamiltonianSpec& H, double s,
                               ad::NodeHandle zero_tangent) {
    const int n = net.half_dim;
    const int n1 = H.physical_dim(n);
    const auto y = tape.affine({line.y0, line.u}, {1.0, s});
    const auto fw = emit_forward_with_tangent(tape, net, hs, y, line.q0, line.u, zero_tangent);
    SampleNodes out;
    out.x = fw.x;
    out.p = fw.p;
    out.tx = fw.tx;
    out.tp = fw.tp;
    out.x_phys = n1 == n ? fw.x : tape.slice(fw.x, 0, n1);
    if (H.constraint) out.h = tape.constraint_values(out.x_phys, H.constraint);
    return out;
}

}  // namespace detail

// Everything the training loop needs to evaluate and differentiate one loss:
// the tape, the leaf handles, the scalar output, and the diagnostic pieces.
struct LossGraph {
    ad::Tape tape;
    NetTapeHandles net_handles;
    std::vector<LineTapeHandles> line_handles;     // one per case
    ad::NodeHandle loss;                           // total scalar
    ad::NodeHandle residual_total;                 // sum over cases
    ad::NodeHandle boundary_total;
    ad::NodeHandle penalty_total;                  // invalid for base kind
    std::vector<std::vector<ad::NodeHandle>> case_h_nodes;  // per case, per sample

    double eval() {
        tape.forward();
        return tape.scalar(loss);
    }
};

// Sum of squared Hamiltonian-flow mismatches over the sample times, built on
// the tape from the tangent pass so it is differentiable w.r.t. everything.
inline ad::NodeHandle residual_loss(ad::Tape& tape, const SympNetParams& net,
                                    const NetTapeHandles& hs, const LineTapeHandles& line,
                                    const HamiltonianSpec& H, std::span<const double> times,
                                    std::vector<detail::SampleNodes>* samples_out = nullptr) {
    const int n = net.half_dim;
    const int n1 = H.physical_dim(n);
    const auto zero_tangent = tape.zeros(static_cast<std::size_t>(n));
    std::vector<ad::NodeHandle> terms;
    terms.reserve(2 * times.size());
    for (double s : times) {
        const auto sn = detail::emit_sample(tape, net, hs, line, H, s, zero_tangent);
        // dx/ds must match grad_p H
        ad::NodeHandle gp;
        if (H.kind == HamiltonianKind::LatentAugmented) {
            const auto p1 = tape.slice(sn.p, 0, n1);
            const auto p2 = tape.slice(sn.p, n1, n - n1);
            gp = tape.concat({tape.kinetic_grad(p1, H.block_dim, H.speed_cap), p2});
        } else {
            gp = tape.kinetic_grad(sn.p, H.block_dim, H.speed_cap);
        }
        terms.push_back(tape.square_norm(tape.sub(sn.tx, gp)));
        // dp/ds must match -grad_x H; without constraints grad_x H is zero
        ad::NodeHandle r2;
        if (H.kind == HamiltonianKind::CappedKinetic || !H.constraint) {
            r2 = sn.tp;
        } else {
            const auto bg = tape.barrier_grad(sn.h, H.barrier->a);
            const auto jtv = tape.constraint_jtv(sn.x_phys, bg, H.constraint);
            auto gx = tape.scale(jtv, -H.barrier->eps);
            if (n1 != n) gx = tape.concat({gx, tape.zeros(static_cast<std::size_t>(n - n1))});
            r2 = tape.add(sn.tp, gx);
        }
        terms.push_back(tape.square_norm(r2));
        if (samples_out) samples_out->push_back(sn);
    }
    return tape.affine(std::move(terms), Vec(2 * times.size(), 1.0));
}

// |phi1(y0,q0) - x0|^2 + |phi1(y0+Tu,q0) - xT|^2 on the full state; returns
// the endpoint position nodes for reuse by the penalty terms.
inline ad::NodeHandle boundary_loss(ad::Tape& tape, const SympNetParams& net,
                                    const NetTapeHandles& hs, const LineTapeHandles& line,
                                    std::span<const double> x0_full, std::span<const double> xT_full,
                                    double horizon, ad::NodeHandle* x_start_out = nullptr,
                                    ad::NodeHandle* x_end_out = nullptr) {
    const auto fw0 = emit_forward(tape, net, hs, line.y0, line.q0);
    const auto yT = tape.affine({line.y0, line.u}, {1.0, horizon});
    const auto fwT = emit_forward(tape, net, hs, yT, line.q0);
    const auto c0 = tape.constant(Vec(x0_full.begin(), x0_full.end()));
    const auto cT = tape.constant(Vec(xT_full.begin(), xT_full.end()));
    if (x_start_out) *x_start_out = fw0.x;
    if (x_end_out) *x_end_out = fwT.x;
    return tape.add(tape.square_norm(tape.sub(fw0.x, c0)),
                    tape.square_norm(tape.sub(fwT.x, cT)));
}

// One case's total objective on an existing tape. `mult` is required for the
// augmented-Lagrangian kind and ignored otherwise.
inline ad::NodeHandle total_loss(ad::Tape& tape, const LossConfig& cfg, const SympNetParams& net,
                                 const NetTapeHandles& hs, const LineTapeHandles& line,
                                 const HamiltonianSpec& H, const MultiplierState* mult,
                                 ad::NodeHandle* res_out = nullptr, ad::NodeHandle* bd_out = nullptr,
                                 ad::NodeHandle* pen_out = nullptr,
                                 std::vector<ad::NodeHandle>* h_nodes_out = nullptr) {
    require(cfg.kind != LossKind::AugLagrangian || mult != nullptr,
            "loss: augmented Lagrangian kind requires multiplier state");
    const int n = net.half_dim;
    const int n1 = H.physical_dim(n);
    const Vec times = sample_times(cfg.num_samples, cfg.horizon);
    const Vec x0_full = full_state_target(cfg.x0, n);
    const Vec xT_full = full_state_target(cfg.xT, n);

    std::vector<detail::SampleNodes> samples;
    const auto res = residual_loss(tape, net, hs, line, H, times, &samples);
    ad::NodeHandle x_start, x_end;
    const auto bd = boundary_loss(tape, net, hs, line, x0_full, xT_full, cfg.horizon, &x_start, &x_end);

    if (h_nodes_out) {
        for (const auto& sn : samples)
            if (sn.h.valid()) h_nodes_out->push_back(sn.h);
    }

    std::vector<ad::NodeHandle> parts{res, bd};
    Vec coeffs{1.0, cfg.lambda};

    const bool constrained = H.constraint != nullptr;
    if (cfg.kind == LossKind::LogPenalty) {
        require(constrained, "log-penalty loss requires constraints");
        const double a = cfg.barrier.a;
        const double eps = cfg.barrier.eps;
        std::vector<ad::NodeHandle> bvals;
        bvals.reserve(samples.size());
        for (const auto& sn : samples) bvals.push_back(tape.barrier_value(sn.h, a));
        parts.push_back(tape.affine(std::move(bvals), Vec(samples.size(), 1.0)));
        coeffs.push_back(cfg.lambda_tilde * eps / cfg.num_samples);
        // both signed boundary gaps, weighted by eps alone
        const auto x_start_phys = n1 == n ? x_start : tape.slice(x_start, 0, n1);
        const auto x_end_phys = n1 == n ? x_end : tape.slice(x_end, 0, n1);
        const auto c0 = tape.constant(Vec(cfg.x0.begin(), cfg.x0.end()));
        const auto cT = tape.constant(Vec(cfg.xT.begin(), cfg.xT.end()));
        const std::vector<ad::NodeHandle> gaps{
            tape.sub(c0, x_start_phys), tape.sub(x_start_phys, c0),
            tape.sub(cT, x_end_phys), tape.sub(x_end_phys, cT)};
        std::vector<ad::NodeHandle> gap_terms;
        for (const auto& g : gaps) gap_terms.push_back(tape.barrier_value(g, a));
        parts.push_back(tape.affine(std::move(gap_terms), Vec(4, 1.0)));
        coeffs.push_back(eps);
    } else if (cfg.kind == LossKind::QuadPenalty) {
        require(constrained, "quadratic-penalty loss requires constraints");
        std::vector<ad::NodeHandle> terms;
        terms.reserve(samples.size());
        for (const auto& sn : samples) terms.push_back(tape.square_norm(tape.min_zero(sn.h)));
        parts.push_back(tape.affine(std::move(terms), Vec(samples.size(), 1.0)));
        coeffs.push_back(cfg.lambda_tilde / cfg.num_samples);
    } else if (cfg.kind == LossKind::AugLagrangian) {
        if (constrained) {
            std::vector<ad::NodeHandle> terms;
            terms.reserve(samples.size());
            for (std::size_t j = 0; j < samples.size(); ++j) {
                const auto mu_j = tape.constant(mult->mu[j]);
                const auto inner = tape.sub(mu_j, tape.scale(samples[j].h, mult->rho1));
                terms.push_back(tape.square_norm(tape.max_zero(inner)));
            }
            parts.push_back(tape.affine(std::move(terms), Vec(samples.size(), 1.0)));
            coeffs.push_back(0.5 / mult->rho1);
        }
        const auto l1 = tape.constant(mult->lam1);
        const auto l2 = tape.constant(mult->lam2);
        const auto c0 = tape.constant(x0_full);
        const auto cT = tape.constant(xT_full);
        const auto e1 = tape.sub(l1, tape.scale(tape.sub(c0, x_start), mult->rho2));
        const auto e2 = tape.sub(l2, tape.scale(tape.sub(cT, x_end), mult->rho2));
        parts.push_back(tape.add(tape.square_norm(e1), tape.square_norm(e2)));
        coeffs.push_back(0.5 / mult->rho2);
    }

    ad::NodeHandle pen;
    if (parts.size() > 2) {
        std::vector<ad::NodeHandle> pen_parts(parts.begin() + 2, parts.end());
        pen = tape.affine(std::move(pen_parts), Vec(coeffs.begin() + 2, coeffs.end()));
    }
    if (res_out) *res_out = res;
    if (bd_out) *bd_out = bd;
    if (pen_out) *pen_out = pen;
    return tape.affine(std::move(parts), std::move(coeffs));
}

// Build a complete loss graph over one or more cases sharing the net.
// cfgs/lines/mults are parallel, one entry per case (mults may be empty for
// non-Lagrangian kinds).
inline LossGraph build_loss_graph(const SympNetParams& net, const HamiltonianSpec& H,
                                  std::span<const LossConfig> cfgs,
                                  std::span<const LatentLine> lines,
                                  std::span<const MultiplierState> mults) {
    require(cfgs.size() == lines.size(), "loss graph: one config per latent line");
    require(mults.empty() || mults.size() == cfgs.size(),
            "loss graph: one multiplier state per case");
    LossGraph g;
    g.net_handles = bind_net_params(g.tape, net);
    std::vector<ad::NodeHandle> case_losses, case_res, case_bd;
    for (std::size_t k = 0; k < cfgs.size(); ++k) {
        const auto lh = bind_line(g.tape, lines[k]);
        g.line_handles.push_back(lh);
        ad::NodeHandle res, bd, pen;
        std::vector<ad::NodeHandle> h_nodes;
        const auto l = total_loss(g.tape, cfgs[k], net, g.net_handles, lh, H,
                                  mults.empty() ? nullptr : &mults[k], &res, &bd, &pen, &h_nodes);
        case_losses.push_back(l);
        case_res.push_back(res);
        case_bd.push_back(bd);
        g.case_h_nodes.push_back(std::move(h_nodes));
        if (pen.valid()) {
            if (!g.penalty_total.valid())
                g.penalty_total = pen;
            else
                g.penalty_total = g.tape.add(g.penalty_total, pen);
        }
    }
    g.residual_total = case_res.size() == 1
                           ? case_res[0]
                           : g.tape.affine(std::move(case_res), Vec(cfgs.size(), 1.0));
    g.boundary_total = case_bd.size() == 1
                           ? case_bd[0]
                           : g.tape.affine(std::move(case_bd), Vec(cfgs.size(), 1.0));
    g.loss = case_losses.size() == 1
                 ? case_losses[0]
                 : g.tape.affine(std::move(case_losses), Vec(cfgs.size(), 1.0));
    return g;
}

// --- multiplier updates (plain evaluation, no tape) ---------------------------

inline double max_violation(std::span<const double> h) {
    double v = 0.0;
    for (double c : h) v = std::max(v, -c);
    return v;
}

// mu(s_j) <- max{0, mu(s_j) - rho1 h(phi1(y0+s_j u, q0))}
// lam1    <- lam1 - rho2 (x0 - phi1(y0, q0))
// lam2    <- lam2 - rho2 (xT - phi1(y0 + T u, q0))
// Also reports the worst constraint violation and boundary error seen.
struct MultiplierUpdate {
    MultiplierState state;
    double max_constraint_violation = 0.0;
    double max_boundary_error = 0.0;
};

inline MultiplierUpdate update_multipliers(const MultiplierState& mult, const SympNetParams& net,
                                           const LatentLine& line, const ConstraintSet* constraint,
                                           std::span<const double> x0_full,
                                           std::span<const double> xT_full, double horizon,
                                           std::span<const double> times, int physical_dim) {
    MultiplierUpdate out;
    out.state = mult;
    const int n = net.half_dim;
    Vec y(line.y0.size());
    for (std::size_t j = 0; j < times.size(); ++j) {
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = line.y0[i] + times[j] * line.u[i];
        const auto [x, p] = sympnet_forward(net, y, line.q0);
        if (constraint) {
            const Vec h = constraint->values(
                std::span<const double>(x).first(static_cast<std::size_t>(physical_dim)));
            out.max_constraint_violation = std::max(out.max_constraint_violation, max_violation(h));
            Vec& mu = out.state.mu[j];
            for (std::size_t c = 0; c < h.size(); ++c)
                mu[c] = std::max(0.0, mu[c] - mult.rho1 * h[c]);
        }
    }
    const auto [xs, ps] = sympnet_forward(net, line.y0, line.q0);
    Vec yT(line.y0.size());
    for (std::size_t i = 0; i < yT.size(); ++i) yT[i] = line.y0[i] + horizon * line.u[i];
    const auto [xe, pe] = sympnet_forward(net, yT, line.q0);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
        const double g1 = x0_full[i] - xs[i];
        const double g2 = xT_full[i] - xe[i];
        out.state.lam1[i] -= mult.rho2 * g1;
        out.state.lam2[i] -= mult.rho2 * g2;
        out.max_boundary_error = std::max({out.max_boundary_error, std::abs(g1), std::abs(g2)});
    }
    return out;
}

// Double the penalty weight whose violation failed to shrink by the factor
// theta = 0.25 since the previous outer iteration; cap at 1e6.
inline MultiplierState autotune_rho(double prev_constraint_violation, double cur_constraint_violation,
                                    double prev_boundary_error, double cur_boundary_error,
                                    MultiplierState mult) {
    constexpr double theta = 0.25;
    constexpr double cap = 1e6;
    if (cur_constraint_violation > theta * prev_constraint_violation)
        mult.rho1 = std::min(cap, mult.rho1 * 2.0);
    if (cur_boundary_error > theta * prev_boundary_error)
        mult.rho2 = std::min(cap, mult.rho2 * 2.0);
    return mult;
}

}  // namespace sympoc
