#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <variant>
#include <vector>

#include "sympoc/vec.hpp"

namespace sympoc {

// Obstacle geometry. `radius` on Capsule/Ball is the obstacle's own radius;
// the agent radius is added when the constraint is evaluated.
struct Capsule {
    Vec a;  // segment endpoint
    Vec b;  // segment endpoint (a == b degenerates to a ball)
    double radius = 0.0;
};

struct Ball {
    Vec center;
    double radius = 0.0;
};

struct Box3d {
    std::array<double, 3> lo{};
    std::array<double, 3> hi{};
};

struct Room2d {
    double half_width = 0.0;  // room is [-half_width, half_width]^2
};

using Obstacle = std::variant<Capsule, Ball, Box3d, Room2d>;

inline int obstacle_components(const Obstacle& o) {
    return std::holds_alternative<Room2d>(o) ? 4 : 1;
}

// --- single-obstacle margins -------------------------------------------------

// min_{y in [A,B]} |x-y|^2 - (C_o + C_d)^2, projection clamped to the segment.
inline double capsule_constraint(std::span<const double> a, std::span<const double> b,
                                 double c_o, double c_d, std::span<const double> x) {
    const std::size_t m = x.size();
    double ww = 0.0, wx = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double w = b[i] - a[i];
        ww += w * w;
        wx += w * (x[i] - a[i]);
    }
    double t = ww > 0.0 ? wx / ww : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    double d2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double diff = x[i] - (a[i] + t * (b[i] - a[i]));
        d2 += diff * diff;
    }
    const double r = c_o + c_d;
    return d2 - r * r;
}

// |z-x|^2 - (C_o + C_d)^2
inline double ball_constraint(std::span<const double> z, double c_o, double c_d,
                              std::span<const double> x) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = z[i] - x[i];
        d2 += diff * diff;
    }
    const double r = c_o + c_d;
    return d2 - r * r;
}

// signed margins to the four walls of [-C_r, C_r]^2
inline std::array<double, 4> room_walls2d(double c_r, std::span<const double> x) {
    return {x[0] + c_r, c_r - x[0], x[1] + c_r, c_r - x[1]};
}

// max over the six inflated face margins; <= 0 iff the C_d-ball at x hits the box.
// Ties broken by the first attaining face (fixed scan order).
inline double box3d_constraint(const Box3d& box, double c_d, std::span<const double> x) {
    double best = box.lo[0] - c_d - x[0];
    for (int i = 0; i < 3; ++i) {
        best = std::max(best, box.lo[static_cast<std::size_t>(i)] - c_d - x[static_cast<std::size_t>(i)]);
        best = std::max(best, x[static_cast<std::size_t>(i)] - box.hi[static_cast<std::size_t>(i)] - c_d);
    }
    return best;
}

// one component per unordered pair (i,j), i<j, at index k-1 with
// k = i + (j-1)(j-2)/2 (1-based agent labels)
inline Vec pairwise_collision(std::span<const double> xs, int agent_count, int space_dim,
                              double c_d) {
    const int pairs = agent_count * (agent_count - 1) / 2;
    Vec out(static_cast<std::size_t>(pairs));
    const double sep = 2.0 * c_d;
    for (int j = 2; j <= agent_count; ++j) {
        for (int i = 1; i < j; ++i) {
            const int k = i + (j - 1) * (j - 2) / 2;
            const double* xi = xs.data() + static_cast<std::size_t>(i - 1) * space_dim;
            const double* xj = xs.data() + static_cast<std::size_t>(j - 1) * space_dim;
            double d2 = 0.0;
            for (int c = 0; c < space_dim; ++c) {
                const double diff = xi[c] - xj[c];
                d2 += diff * diff;
            }
            out[static_cast<std::size_t>(k - 1)] = d2 - sep * sep;
        }
    }
    return out;
}

// --- assembled constraint function h = (h1, h2) ------------------------------
//
// h1 stacks the per-agent obstacle margins (agents outer, obstacles inner),
// h2 the pairwise collision margins. Besides values, the set provides the
// Jacobian products needed by gradient assembly and by second-order
// differentiation of products with the Jacobian:
//   jtv:  out += (grad h)^T v
//   jvp:  out += (grad h) w
//   hvp:  out += sum_c v_c * hess(h_c) w
class ConstraintSet {
  public:
    ConstraintSet() = default;
    ConstraintSet(std::vector<Obstacle> obstacles, double agent_radius, int agent_count,
                  int space_dim)
        : obstacles_(std::move(obstacles)),
          agent_radius_(agent_radius),
          agent_count_(agent_count),
          space_dim_(space_dim) {
        require(agent_count_ >= 1, "constraint set: agent count must be >= 1");
        require(space_dim_ >= 1, "constraint set: space dim must be >= 1");
        for (const auto& o : obstacles_) {
            if (const auto* c = std::get_if<Capsule>(&o)) {
                require(static_cast<int>(c->a.size()) == space_dim_ &&
                            static_cast<int>(c->b.size()) == space_dim_,
                        "capsule endpoints must match space dim");
                require(c->radius > 0.0, "capsule radius must be positive");
            } else if (const auto* bl = std::get_if<Ball>(&o)) {
                require(static_cast<int>(bl->center.size()) == space_dim_,
                        "ball center must match space dim");
                require(bl->radius > 0.0, "ball radius must be positive");
            } else if (const auto* bx = std::get_if<Box3d>(&o)) {
                require(space_dim_ == 3, "box obstacle requires space dim 3");
                for (int i = 0; i < 3; ++i)
                    require(bx->lo[static_cast<std::size_t>(i)] < bx->hi[static_cast<std::size_t>(i)],
                            "box corners must be ordered lo < hi");
            } else if (const auto* rm = std::get_if<Room2d>(&o)) {
                require(space_dim_ == 2, "room walls require space dim 2");
                require(rm->half_width > 0.0, "room half width must be positive");
            }
        }
    }

    int agent_count() const { return agent_count_; }
    int space_dim() const { return space_dim_; }
    double agent_radius() const { return agent_radius_; }
    const std::vector<Obstacle>& obstacles() const { return obstacles_; }

    int components_per_agent() const {
        int n = 0;
        for (const auto& o : obstacles_) n += obstacle_components(o);
        return n;
    }

    int pair_count() const { return agent_count_ * (agent_count_ - 1) / 2; }

    int output_dim() const { return agent_count_ * components_per_agent() + pair_count(); }

    int input_dim() const { return agent_count_ * space_dim_; }

    void values(std::span<const double> x, std::span<double> out) const {
        check_dims(x, out);
        std::size_t idx = 0;
        for (int a = 0; a < agent_count_; ++a) {
            const auto xa = agent_block(x, a);
            for (const auto& o : obstacles_) idx = emit_obstacle(o, xa, out, idx);
        }
        for (int j = 2; j <= agent_count_; ++j) {
            for (int i = 1; i < j; ++i) {
                const auto xi = agent_block(x, i - 1);
                const auto xj = agent_block(x, j - 1);
                double d2 = 0.0;
                for (int c = 0; c < space_dim_; ++c) {
                    const double diff = xi[c] - xj[c];
                    d2 += diff * diff;
                }
                out[idx + pair_index(i, j)] = d2 - 4.0 * agent_radius_ * agent_radius_;
            }
        }
    }

    Vec values(std::span<const double> x) const {
        Vec out(static_cast<std::size_t>(output_dim()));
        values(x, out);
        return out;
    }

    // out += (grad h(x))^T v
    void accumulate_jtv(std::span<const double> x, std::span<const double> v,
                        std::span<double> out) const {
        for_each_gradient(x, [&](int comp, int agent, std::span<const double> g) {
            const double vc = v[static_cast<std::size_t>(comp)];
            double* dst = out.data() + static_cast<std::size_t>(agent) * space_dim_;
            for (int c = 0; c < space_dim_; ++c) dst[c] += vc * g[static_cast<std::size_t>(c)];
        });
    }

    // out += (grad h(x)) w
    void accumulate_jvp(std::span<const double> x, std::span<const double> w,
                        std::span<double> out) const {
        for_each_gradient(x, [&](int comp, int agent, std::span<const double> g) {
            const double* src = w.data() + static_cast<std::size_t>(agent) * space_dim_;
            double acc = 0.0;
            for (int c = 0; c < space_dim_; ++c) acc += g[static_cast<std::size_t>(c)] * src[c];
            out[static_cast<std::size_t>(comp)] += acc;
        });
    }

    // out += sum_c v_c * hess(h_c)(x) w  (constraints are piecewise quadratic,
    // so each Hessian is constant on the active branch)
    void accumulate_hvp(std::span<const double> x, std::span<const double> v,
                        std::span<const double> w, std::span<double> out) const {
        std::size_t idx = 0;
        for (int a = 0; a < agent_count_; ++a) {
            const auto xa = agent_block(x, a);
            const double* wa = w.data() + static_cast<std::size_t>(a) * space_dim_;
            double* oa = out.data() + static_cast<std::size_t>(a) * space_dim_;
            for (const auto& o : obstacles_) {
                if (const auto* cp = std::get_if<Capsule>(&o)) {
                    const double vc = v[idx++];
                    if (vc != 0.0) {
                        double ww = 0.0, wx = 0.0;
                        Vec dir(static_cast<std::size_t>(space_dim_));
                        for (int c = 0; c < space_dim_; ++c) {
                            dir[static_cast<std::size_t>(c)] = cp->b[static_cast<std::size_t>(c)] -
                                                               cp->a[static_cast<std::size_t>(c)];
                            ww += dir[static_cast<std::size_t>(c)] * dir[static_cast<std::size_t>(c)];
                            wx += dir[static_cast<std::size_t>(c)] *
                                  (xa[static_cast<std::size_t>(c)] - cp->a[static_cast<std::size_t>(c)]);
                        }
                        const double t = ww > 0.0 ? wx / ww : 0.0;
                        if (t > 0.0 && t < 1.0) {
                            // hess = 2 (I - unit unit^T)
                            double wu = 0.0;
                            for (int c = 0; c < space_dim_; ++c) wu += dir[static_cast<std::size_t>(c)] * wa[c];
                            wu /= ww;
                            for (int c = 0; c < space_dim_; ++c)
                                oa[c] += vc * 2.0 * (wa[c] - wu * dir[static_cast<std::size_t>(c)]);
                        } else {
                            for (int c = 0; c < space_dim_; ++c) oa[c] += vc * 2.0 * wa[c];
                        }
                    }
                } else if (std::holds_alternative<Ball>(o)) {
                    const double vc = v[idx++];
                    for (int c = 0; c < space_dim_; ++c) oa[c] += vc * 2.0 * wa[c];
                } else if (std::holds_alternative<Box3d>(o)) {
                    idx++;  // piecewise linear: zero Hessian
                } else {
                    idx += 4;  // walls are linear
                }
            }
        }
        for (int j = 2; j <= agent_count_; ++j) {
            for (int i = 1; i < j; ++i) {
                const double vc = v[idx + pair_index(i, j)];
                if (vc == 0.0) continue;
                const double* wi = w.data() + static_cast<std::size_t>(i - 1) * space_dim_;
                const double* wj = w.data() + static_cast<std::size_t>(j - 1) * space_dim_;
                double* oi = out.data() + static_cast<std::size_t>(i - 1) * space_dim_;
                double* oj = out.data() + static_cast<std::size_t>(j - 1) * space_dim_;
                for (int c = 0; c < space_dim_; ++c) {
                    const double d = 2.0 * (wi[c] - wj[c]);
                    oi[c] += vc * d;
                    oj[c] -= vc * d;
                }
            }
        }
    }

  private:
    std::span<const double> agent_block(std::span<const double> x, int agent) const {
        return x.subspan(static_cast<std::size_t>(agent) * space_dim_,
                         static_cast<std::size_t>(space_dim_));
    }

    std::size_t pair_index(int i, int j) const {
        return static_cast<std::size_t>(i + (j - 1) * (j - 2) / 2 - 1);
    }

    void check_dims(std::span<const double> x, std::span<const double> out) const {
        require(static_cast<int>(x.size()) == input_dim(), "constraint input has wrong dimension");
        require(static_cast<int>(out.size()) == output_dim(),
                "constraint output has wrong dimension");
    }

    std::size_t emit_obstacle(const Obstacle& o, std::span<const double> xa,
                              std::span<double> out, std::size_t idx) const {
        if (const auto* cp = std::get_if<Capsule>(&o)) {
            out[idx++] = capsule_constraint(cp->a, cp->b, cp->radius, agent_radius_, xa);
        } else if (const auto* bl = std::get_if<Ball>(&o)) {
            out[idx++] = ball_constraint(bl->center, bl->radius, agent_radius_, xa);
        } else if (const auto* bx = std::get_if<Box3d>(&o)) {
            out[idx++] = box3d_constraint(*bx, agent_radius_, xa);
        } else {
            const auto walls = room_walls2d(std::get<Room2d>(o).half_width, xa);
            for (double wv : walls) out[idx++] = wv;
        }
        return idx;
    }

    // Visit the gradient of every component; gradients are supported on a
    // single agent block, except pairs which are handled via two calls with
    // opposite signs folded into g. Callback: (component index, agent, grad).
    template <typename F>
    void for_each_gradient(std::span<const double> x, F&& fn) const {
        Vec g(static_cast<std::size_t>(space_dim_));
        int comp = 0;
        for (int a = 0; a < agent_count_; ++a) {
            const auto xa = agent_block(x, a);
            for (const auto& o : obstacles_) {
                if (const auto* cp = std::get_if<Capsule>(&o)) {
                    double ww = 0.0, wx = 0.0;
                    for (int c = 0; c < space_dim_; ++c) {
                        const double wv = cp->b[static_cast<std::size_t>(c)] - cp->a[static_cast<std::size_t>(c)];
                        ww += wv * wv;
                        wx += wv * (xa[static_cast<std::size_t>(c)] - cp->a[static_cast<std::size_t>(c)]);
                    }
                    double t = ww > 0.0 ? wx / ww : 0.0;
                    t = std::clamp(t, 0.0, 1.0);
                    for (int c = 0; c < space_dim_; ++c) {
                        const double proj = cp->a[static_cast<std::size_t>(c)] +
                                            t * (cp->b[static_cast<std::size_t>(c)] -
                                                 cp->a[static_cast<std::size_t>(c)]);
                        g[static_cast<std::size_t>(c)] = 2.0 * (xa[static_cast<std::size_t>(c)] - proj);
                    }
                    fn(comp++, a, std::span<const double>(g));
                } else if (const auto* bl = std::get_if<Ball>(&o)) {
                    for (int c = 0; c < space_dim_; ++c)
                        g[static_cast<std::size_t>(c)] =
                            2.0 * (xa[static_cast<std::size_t>(c)] - bl->center[static_cast<std::size_t>(c)]);
                    fn(comp++, a, std::span<const double>(g));
                } else if (const auto* bx = std::get_if<Box3d>(&o)) {
                    // gradient of the first attaining face
                    int best_axis = 0;
                    bool best_upper = false;
                    double best = bx->lo[0] - agent_radius_ - xa[0];
                    for (int i = 0; i < 3; ++i) {
                        const double lo_m = bx->lo[static_cast<std::size_t>(i)] - agent_radius_ -
                                            xa[static_cast<std::size_t>(i)];
                        if (lo_m > best) {
                            best = lo_m;
                            best_axis = i;
                            best_upper = false;
                        }
                        const double hi_m = xa[static_cast<std::size_t>(i)] -
                                            bx->hi[static_cast<std::size_t>(i)] - agent_radius_;
                        if (hi_m > best) {
                            best = hi_m;
                            best_axis = i;
                            best_upper = true;
                        }
                    }
                    std::fill(g.begin(), g.end(), 0.0);
                    g[static_cast<std::size_t>(best_axis)] = best_upper ? 1.0 : -1.0;
                    fn(comp++, a, std::span<const double>(g));
                } else {
                    std::fill(g.begin(), g.end(), 0.0);
                    for (int axis = 0; axis < 2; ++axis) {
                        g[static_cast<std::size_t>(axis)] = 1.0;
                        fn(comp++, a, std::span<const double>(g));
                        g[static_cast<std::size_t>(axis)] = -1.0;
                        fn(comp++, a, std::span<const double>(g));
                        g[static_cast<std::size_t>(axis)] = 0.0;
                    }
                }
            }
        }
        const int pair_base = comp;
        for (int j = 2; j <= agent_count_; ++j) {
            for (int i = 1; i < j; ++i) {
                const int k = pair_base + static_cast<int>(pair_index(i, j));
                const auto xi = agent_block(x, i - 1);
                const auto xj = agent_block(x, j - 1);
                for (int c = 0; c < space_dim_; ++c)
                    g[static_cast<std::size_t>(c)] =
                        2.0 * (xi[static_cast<std::size_t>(c)] - xj[static_cast<std::size_t>(c)]);
                fn(k, i - 1, std::span<const double>(g));
                for (int c = 0; c < space_dim_; ++c) g[static_cast<std::size_t>(c)] = -g[static_cast<std::size_t>(c)];
                fn(k, j - 1, std::span<const double>(g));
            }
        }
    }

    std::vector<Obstacle> obstacles_;
    double agent_radius_ = 0.0;
    int agent_count_ = 1;
    int space_dim_ = 1;
};

// Spec-shaped convenience: values plus a (grad h)^T v callback.
struct AssembledConstraints {
    Vec values;
    const ConstraintSet* set = nullptr;
    Vec x;

    Vec jacobian_transpose_vec(std::span<const double> v) const {
        Vec out(x.size(), 0.0);
        set->accumulate_jtv(x, v, out);
        return out;
    }
};

inline AssembledConstraints assemble_h(const ConstraintSet& set, std::span<const double> x) {
    AssembledConstraints res;
    res.values = set.values(x);
    res.set = &set;
    res.x.assign(x.begin(), x.end());
    return res;
}

}  // namespace sympoc
