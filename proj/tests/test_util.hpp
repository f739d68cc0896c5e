#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "sympoc/sympnet.hpp"
#include "sympoc/vec.hpp"

namespace testutil {

using sympoc::Vec;

// Net with non-trivial a/b (the library initializer keeps them zero so the
// map starts as the identity; tests usually want a generic map instead).
inline sympoc::SympNetParams random_net(int half_dim, int layers, int width,
                                        sympoc::Activation act, sympoc::Rng& rng,
                                        double scale = 0.5) {
    auto net = sympoc::make_sympnet(half_dim, layers, width, act, rng);
    for (auto& layer : net.layers) {
        for (double& v : layer.a) v = rng.uniform(-scale, scale);
        for (double& v : layer.b) v = rng.uniform(-scale, scale);
    }
    return net;
}

inline Vec random_vec(std::size_t n, sympoc::Rng& rng, double lo = -1.0, double hi = 1.0) {
    Vec v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

inline double max_rel_err(std::span<const double> got, std::span<const double> want) {
    double m = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i)
        m = std::max(m, std::abs(got[i] - want[i]) /
                            std::max(1.0, std::abs(want[i])));
    return m;
}

// |grad phi^T J grad phi - J|_max for a row-major (2n)^2 Jacobian.
inline double symplectic_residual(std::span<const double> jac, int n) {
    const int dim = 2 * n;
    auto j_entry = [&](int r, int c) {
        if (r < n && c == r + n) return 1.0;
        if (r >= n && c == r - n) return -1.0;
        return 0.0;
    };
    double worst = 0.0;
    for (int r = 0; r < dim; ++r) {
        for (int c = 0; c < dim; ++c) {
            // (J^T J2 J)_rc with J2 = jac: sum_k sum_l jac[k][r] J[k][l] jac[l][c]
            double acc = 0.0;
            for (int k = 0; k < dim; ++k) {
                const double jkr = jac[static_cast<std::size_t>(k) * dim + r];
                if (jkr == 0.0) continue;
                // J row k has one nonzero
                const int l = k < n ? k + n : k - n;
                const double sign = k < n ? 1.0 : -1.0;
                acc += jkr * sign * jac[static_cast<std::size_t>(l) * dim + c];
            }
            worst = std::max(worst, std::abs(acc - j_entry(r, c)));
        }
    }
    return worst;
}

// Determinant by LU with partial pivoting (test-side oracle).
inline double determinant(Vec a, int dim) {
    double det = 1.0;
    for (int col = 0; col < dim; ++col) {
        int piv = col;
        for (int r = col + 1; r < dim; ++r)
            if (std::abs(a[static_cast<std::size_t>(r) * dim + col]) >
                std::abs(a[static_cast<std::size_t>(piv) * dim + col]))
                piv = r;
        if (a[static_cast<std::size_t>(piv) * dim + col] == 0.0) return 0.0;
        if (piv != col) {
            for (int c = 0; c < dim; ++c)
                std::swap(a[static_cast<std::size_t>(piv) * dim + c],
                          a[static_cast<std::size_t>(col) * dim + c]);
            det = -det;
        }
        const double d = a[static_cast<std::size_t>(col) * dim + col];
        det *= d;
        for (int r = col + 1; r < dim; ++r) {
            const double f = a[static_cast<std::size_t>(r) * dim + col] / d;
            for (int c = col; c < dim; ++c)
                a[static_cast<std::size_t>(r) * dim + c] -=
                    f * a[static_cast<std::size_t>(col) * dim + c];
        }
    }
    return det;
}

}  // namespace testutil
