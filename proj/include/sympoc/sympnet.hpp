#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sympoc/tape.hpp"
#include "sympoc/vec.hpp"

namespace sympoc {

enum class LayerKind : std::uint8_t { Up, Low };
enum class Activation : std::uint8_t { Relu, Sigmoid };

inline double activate(Activation act, double z) {
    if (act == Activation::Relu) return z > 0.0 ? z : 0.0;
    return 1.0 / (1.0 + std::exp(-z));
}

inline double activate_deriv(Activation act, double z) {
    if (act == Activation::Relu) return z > 0.0 ? 1.0 : 0.0;
    const double s = 1.0 / (1.0 + std::exp(-z));
    return s * (1.0 - s);
}

// One shear module of the alternating composition. The map is symplectic for
// any parameter values; `up` shifts the momentum half, `low` the position half.
struct GLayer {
    LayerKind kind = LayerKind::Up;
    Activation activation = Activation::Relu;
    int width = 0;     // l
    int half_dim = 0;  // n
    Vec K;             // l x n, row-major
    Vec a;             // length l
    Vec b;             // length l
};

struct SympNetParams {
    int half_dim = 0;
    std::vector<GLayer> layers;
};

// Trainable latent triple: the transformed trajectory is the straight line
// s -> (y0 + s u, q0).
struct LatentLine {
    Vec y0;
    Vec u;
    Vec q0;
};

// sigma_hat(x) = K^T (a ⊙ act(K x + b))
inline Vec sigma_hat(const GLayer& layer, std::span<const double> x) {
    require(static_cast<int>(x.size()) == layer.half_dim, "sigma_hat: input dimension mismatch");
    const int l = layer.width, n = layer.half_dim;
    Vec out(static_cast<std::size_t>(n), 0.0);
    for (int r = 0; r < l; ++r) {
        const double* row = layer.K.data() + static_cast<std::size_t>(r) * n;
        double z = layer.b[static_cast<std::size_t>(r)];
        for (int c = 0; c < n; ++c) z += row[c] * x[static_cast<std::size_t>(c)];
        const double s = layer.a[static_cast<std::size_t>(r)] * activate(layer.activation, z);
        for (int c = 0; c < n; ++c) out[static_cast<std::size_t>(c)] += row[c] * s;
    }
    return out;
}

inline std::pair<Vec, Vec> layer_forward(const GLayer& layer, std::span<const double> x,
                                         std::span<const double> p) {
    require(x.size() == p.size() && static_cast<int>(x.size()) == layer.half_dim,
            "layer_forward: dimension mismatch");
    Vec xo(x.begin(), x.end());
    Vec po(p.begin(), p.end());
    if (layer.kind == LayerKind::Up) {
        const Vec sh = sigma_hat(layer, x);
        for (std::size_t i = 0; i < po.size(); ++i) po[i] += sh[i];
    } else {
        const Vec sh = sigma_hat(layer, p);
        for (std::size_t i = 0; i < xo.size(); ++i) xo[i] += sh[i];
    }
    return {std::move(xo), std::move(po)};
}

inline std::pair<Vec, Vec> sympnet_forward(const SympNetParams& net, std::span<const double> y,
                                           std::span<const double> q) {
    Vec x(y.begin(), y.end());
    Vec p(q.begin(), q.end());
    for (const GLayer& layer : net.layers) {
        auto [xo, po] = layer_forward(layer, x, p);
        x = std::move(xo);
        p = std::move(po);
    }
    return {std::move(x), std::move(p)};
}

// Layer inverses applied in reverse order; exact by construction.
inline std::pair<Vec, Vec> sympnet_inverse(const SympNetParams& net, std::span<const double> x,
                                           std::span<const double> p) {
    Vec y(x.begin(), x.end());
    Vec q(p.begin(), p.end());
    for (auto it = net.layers.rbegin(); it != net.layers.rend(); ++it) {
        const GLayer& layer = *it;
        if (layer.kind == LayerKind::Up) {
            const Vec sh = sigma_hat(layer, y);
            for (std::size_t i = 0; i < q.size(); ++i) q[i] -= sh[i];
        } else {
            const Vec sh = sigma_hat(layer, q);
            for (std::size_t i = 0; i < y.size(); ++i) y[i] -= sh[i];
        }
    }
    return {std::move(y), std::move(q)};
}

struct TangentResult {
    Vec x, p;    // value
    Vec tx, tp;  // directional derivative along the input tangent
};

// Exact directional derivative of the composition, evaluated alongside the
// values. d sigma_hat(x)[t] = K^T (a ⊙ act'(Kx+b) ⊙ K t).
inline TangentResult sympnet_forward_tangent(const SympNetParams& net, std::span<const double> y,
                                             std::span<const double> q, std::span<const double> ty,
                                             std::span<const double> tq) {
    TangentResult r{Vec(y.begin(), y.end()), Vec(q.begin(), q.end()), Vec(ty.begin(), ty.end()),
                    Vec(tq.begin(), tq.end())};
    for (const GLayer& layer : net.layers) {
        const bool up = layer.kind == LayerKind::Up;
        const Vec& src = up ? r.x : r.p;
        const Vec& tsrc = up ? r.tx : r.tp;
        Vec& dst = up ? r.p : r.x;
        Vec& tdst = up ? r.tp : r.tx;
        const int l = layer.width, n = layer.half_dim;
        for (int row_i = 0; row_i < l; ++row_i) {
            const double* row = layer.K.data() + static_cast<std::size_t>(row_i) * n;
            double z = layer.b[static_cast<std::size_t>(row_i)];
            double tz = 0.0;
            for (int c = 0; c < n; ++c) {
                z += row[c] * src[static_cast<std::size_t>(c)];
                tz += row[c] * tsrc[static_cast<std::size_t>(c)];
            }
            const double av = layer.a[static_cast<std::size_t>(row_i)];
            const double s = av * activate(layer.activation, z);
            const double ts = av * activate_deriv(layer.activation, z) * tz;
            for (int c = 0; c < n; ++c) {
                dst[static_cast<std::size_t>(c)] += row[c] * s;
                tdst[static_cast<std::size_t>(c)] += row[c] * ts;
            }
        }
    }
    return r;
}

// Full Jacobian, one tangent pass per basis direction (both halves; the
// q-directions are allowed here because this is a test-side probe).
// Row-major (2n)x(2n), input z = (y, q), output rows ordered (x, p).
inline Vec dense_jacobian(const SympNetParams& net, std::span<const double> z) {
    const int n = net.half_dim;
    const int dim = 2 * n;
    require(static_cast<int>(z.size()) == dim, "dense_jacobian: point dimension mismatch");
    Vec jac(static_cast<std::size_t>(dim) * dim, 0.0);
    const auto y = z.first(static_cast<std::size_t>(n));
    const auto q = z.subspan(static_cast<std::size_t>(n));
    Vec ty(static_cast<std::size_t>(n), 0.0), tq(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < dim; ++k) {
        if (k < n)
            ty[static_cast<std::size_t>(k)] = 1.0;
        else
            tq[static_cast<std::size_t>(k - n)] = 1.0;
        const TangentResult r = sympnet_forward_tangent(net, y, q, ty, tq);
        for (int i = 0; i < n; ++i) {
            jac[static_cast<std::size_t>(i) * dim + static_cast<std::size_t>(k)] = r.tx[static_cast<std::size_t>(i)];
            jac[static_cast<std::size_t>(i + n) * dim + static_cast<std::size_t>(k)] = r.tp[static_cast<std::size_t>(i)];
        }
        if (k < n)
            ty[static_cast<std::size_t>(k)] = 0.0;
        else
            tq[static_cast<std::size_t>(k - n)] = 0.0;
    }
    return jac;
}

// --- tape emission -----------------------------------------------------------

struct LayerTapeHandles {
    ad::NodeHandle K, a, b;
};

struct NetTapeHandles {
    std::vector<LayerTapeHandles> layers;
};

// Register K, a, b of every layer as parameter leaves.
inline NetTapeHandles bind_net_params(ad::Tape& tape, const SympNetParams& net) {
    NetTapeHandles h;
    h.layers.reserve(net.layers.size());
    for (const GLayer& layer : net.layers)
        h.layers.push_back({tape.parameter(layer.K), tape.parameter(layer.a), tape.parameter(layer.b)});
    return h;
}

inline void set_net_params(ad::Tape& tape, const NetTapeHandles& handles, const SympNetParams& net) {
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        tape.set_value(handles.layers[i].K, net.layers[i].K);
        tape.set_value(handles.layers[i].a, net.layers[i].a);
        tape.set_value(handles.layers[i].b, net.layers[i].b);
    }
}

inline void read_net_params(const ad::Tape& tape, const NetTapeHandles& handles, SympNetParams& net) {
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const auto K = tape.value(handles.layers[i].K);
        const auto a = tape.value(handles.layers[i].a);
        const auto b = tape.value(handles.layers[i].b);
        net.layers[i].K.assign(K.begin(), K.end());
        net.layers[i].a.assign(a.begin(), a.end());
        net.layers[i].b.assign(b.begin(), b.end());
    }
}

struct TapePair {
    ad::NodeHandle x, p;
};

struct TapeTangentPair {
    ad::NodeHandle x, p, tx, tp;
};

inline ad::NodeHandle emit_sigma_hat(ad::Tape& tape, const GLayer& layer,
                                     const LayerTapeHandles& h, ad::NodeHandle x) {
    const int l = layer.width, n = layer.half_dim;
    const auto z = tape.add(tape.matvec(h.K, x, l, n), h.b);
    const auto s = layer.activation == Activation::Relu ? tape.relu(z) : tape.sigmoid(z);
    return tape.matvec_t(h.K, tape.hadamard(h.a, s), l, n);
}

inline TapePair emit_forward(ad::Tape& tape, const SympNetParams& net, const NetTapeHandles& hs,
                             ad::NodeHandle y, ad::NodeHandle q) {
    TapePair cur{y, q};
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const GLayer& layer = net.layers[i];
        if (layer.kind == LayerKind::Up)
            cur.p = tape.add(cur.p, emit_sigma_hat(tape, layer, hs.layers[i], cur.x));
        else
            cur.x = tape.add(cur.x, emit_sigma_hat(tape, layer, hs.layers[i], cur.p));
    }
    return cur;
}

// Value and tangent emitted together; the whole pass is made of tape records,
// so reverse mode through it yields exact parameter gradients of any function
// of the tangent.
inline TapeTangentPair emit_forward_with_tangent(ad::Tape& tape, const SympNetParams& net,
                                                 const NetTapeHandles& hs, ad::NodeHandle y,
                                                 ad::NodeHandle q, ad::NodeHandle ty,
                                                 ad::NodeHandle tq) {
    TapeTangentPair cur{y, q, ty, tq};
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const GLayer& layer = net.layers[i];
        const LayerTapeHandles& h = hs.layers[i];
        const int l = layer.width, n = layer.half_dim;
        const bool up = layer.kind == LayerKind::Up;
        const auto src = up ? cur.x : cur.p;
        const auto tsrc = up ? cur.tx : cur.tp;

        const auto z = tape.add(tape.matvec(h.K, src, l, n), h.b);
        const auto s = layer.activation == Activation::Relu ? tape.relu(z) : tape.sigmoid(z);
        const auto sh = tape.matvec_t(h.K, tape.hadamard(h.a, s), l, n);

        const auto tz = tape.matvec(h.K, tsrc, l, n);
        ad::NodeHandle sprime;
        if (layer.activation == Activation::Relu) {
            sprime = tape.step(z);
        } else {
            sprime = tape.sub(s, tape.hadamard(s, s));
        }
        const auto tsh = tape.matvec_t(h.K, tape.hadamard(h.a, tape.hadamard(sprime, tz)), l, n);

        if (up) {
            cur.p = tape.add(cur.p, sh);
            cur.tp = tape.add(cur.tp, tsh);
        } else {
            cur.x = tape.add(cur.x, sh);
            cur.tx = tape.add(cur.tx, tsh);
        }
    }
    return cur;
}

// --- construction ------------------------------------------------------------

// Alternating up/low stack starting with `up`; a = 0 and b = 0 make the whole
// map the identity, K is drawn uniform in [-1/sqrt(n), 1/sqrt(n)].
inline SympNetParams make_sympnet(int half_dim, int layer_count, int width, Activation act,
                                  Rng& rng) {
    require(half_dim >= 1 && layer_count >= 1 && width >= 1, "sympnet: bad architecture");
    SympNetParams net;
    net.half_dim = half_dim;
    net.layers.reserve(static_cast<std::size_t>(layer_count));
    const double bound = 1.0 / std::sqrt(static_cast<double>(half_dim));
    for (int i = 0; i < layer_count; ++i) {
        GLayer layer;
        layer.kind = i % 2 == 0 ? LayerKind::Up : LayerKind::Low;
        layer.activation = act;
        layer.width = width;
        layer.half_dim = half_dim;
        layer.K.resize(static_cast<std::size_t>(width) * half_dim);
        for (double& v : layer.K) v = rng.uniform(-bound, bound);
        layer.a.assign(static_cast<std::size_t>(width), 0.0);
        layer.b.assign(static_cast<std::size_t>(width), 0.0);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

inline std::size_t parameter_count(const SympNetParams& net) {
    std::size_t n = 0;
    for (const GLayer& l : net.layers) n += l.K.size() + l.a.size() + l.b.size();
    return n;
}

}  // namespace sympoc
