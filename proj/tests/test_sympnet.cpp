#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "sympoc/checkpoint.hpp"
#include "sympoc/losses.hpp"
#include "sympoc/sympnet.hpp"
#include "test_util.hpp"

using namespace sympoc;

namespace {

GLayer single_layer(LayerKind kind, Vec K, Vec a, Vec b, int half_dim,
                    Activation act = Activation::Relu) {
    GLayer l;
    l.kind = kind;
    l.activation = act;
    l.width = static_cast<int>(a.size());
    l.half_dim = half_dim;
    l.K = std::move(K);
    l.a = std::move(a);
    l.b = std::move(b);
    return l;
}

}  // namespace

TEST_CASE("sigma_hat worked examples") {
    SECTION("1x1 relu") {
        const auto l = single_layer(LayerKind::Up, {1.0}, {2.0}, {0.0}, 1);
        const Vec out = sigma_hat(l, Vec{3.0});
        CHECK(out[0] == Catch::Approx(6.0));
    }
    SECTION("zero a gives zero") {
        Rng rng(5);
        auto net = make_sympnet(3, 2, 7, Activation::Relu, rng);
        const Vec out = sigma_hat(net.layers[0], Vec{0.3, -0.7, 1.1});
        for (double v : out) CHECK(v == 0.0);
    }
    SECTION("two rows with opposite signs") {
        const auto l = single_layer(LayerKind::Up, {1.0, -1.0}, {1.0, 1.0}, {0.0, 0.0}, 1);
        const Vec out = sigma_hat(l, Vec{3.0});
        CHECK(out[0] == Catch::Approx(3.0));  // relu(3)*1 + relu(-3)*(-1)
    }
    SECTION("dimension mismatch rejected") {
        const auto l = single_layer(LayerKind::Up, {1.0}, {2.0}, {0.0}, 1);
        CHECK_THROWS_AS(sigma_hat(l, Vec{1.0, 2.0}), std::invalid_argument);
    }
}

TEST_CASE("layer_forward worked examples") {
    const auto up = single_layer(LayerKind::Up, {1.0}, {2.0}, {0.0}, 1);
    const auto [x1, p1] = layer_forward(up, Vec{3.0}, Vec{1.0});
    CHECK(x1[0] == 3.0);
    CHECK(p1[0] == Catch::Approx(7.0));

    const auto low = single_layer(LayerKind::Low, {1.0}, {2.0}, {0.0}, 1);
    const auto [x2, p2] = layer_forward(low, Vec{1.0}, Vec{3.0});
    CHECK(x2[0] == Catch::Approx(7.0));
    CHECK(p2[0] == 3.0);

    SECTION("zero a is the identity") {
        const auto id = single_layer(LayerKind::Up, {0.5}, {0.0}, {0.3}, 1);
        const auto [x, p] = layer_forward(id, Vec{0.4}, Vec{-0.2});
        CHECK(x[0] == 0.4);
        CHECK(p[0] == -0.2);
    }
}

TEST_CASE("identity initialization maps exactly") {
    Rng rng(3);
    const auto net = make_sympnet(4, 6, 10, Activation::Relu, rng);
    const Vec y = testutil::random_vec(4, rng);
    const Vec q = testutil::random_vec(4, rng);
    const auto [x, p] = sympnet_forward(net, y, q);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(x[i] == y[i]);
        CHECK(p[i] == q[i]);
    }
}

TEST_CASE("inverse round trips exactly") {
    Rng rng(17);
    const auto net = testutil::random_net(5, 6, 12, Activation::Relu, rng);
    for (int rep = 0; rep < 1000; ++rep) {
        const Vec y = testutil::random_vec(5, rng, -2.0, 2.0);
        const Vec q = testutil::random_vec(5, rng, -2.0, 2.0);
        const auto [x, p] = sympnet_forward(net, y, q);
        const auto [yb, qb] = sympnet_inverse(net, x, p);
        REQUIRE(testutil::max_abs_diff(y, yb) < 1e-10);
        REQUIRE(testutil::max_abs_diff(q, qb) < 1e-10);
        // and the other composition order
        const auto [xf, pf] = sympnet_forward(net, yb, qb);
        REQUIRE(testutil::max_abs_diff(x, xf) < 1e-10);
        REQUIRE(testutil::max_abs_diff(p, pf) < 1e-10);
    }
}

TEST_CASE("tangent pass matches central differences at smooth points") {
    Rng rng(23);
    const auto net = testutil::random_net(3, 4, 8, Activation::Sigmoid, rng);
    const double eps = 1e-5;
    for (int rep = 0; rep < 50; ++rep) {
        const Vec y = testutil::random_vec(3, rng);
        const Vec q = testutil::random_vec(3, rng);
        const Vec ty = testutil::random_vec(3, rng);
        const Vec tq(3, 0.0);
        const auto r = sympnet_forward_tangent(net, y, q, ty, tq);
        Vec yp(3), ym(3);
        for (std::size_t i = 0; i < 3; ++i) {
            yp[i] = y[i] + eps * ty[i];
            ym[i] = y[i] - eps * ty[i];
        }
        const auto [xp, pp] = sympnet_forward(net, yp, q);
        const auto [xm, pm] = sympnet_forward(net, ym, q);
        for (std::size_t i = 0; i < 3; ++i) {
            const double fdx = (xp[i] - xm[i]) / (2 * eps);
            const double fdp = (pp[i] - pm[i]) / (2 * eps);
            REQUIRE(testutil::rel_err(r.tx[i], fdx) < 1e-5);
            REQUIRE(testutil::rel_err(r.tp[i], fdp) < 1e-5);
        }
    }
    SECTION("identity net passes the tangent through") {
        Rng rng2(9);
        const auto id_net = make_sympnet(3, 4, 8, Activation::Relu, rng2);
        const Vec y = testutil::random_vec(3, rng2);
        const Vec q = testutil::random_vec(3, rng2);
        const Vec ty{1.0, -2.0, 0.5};
        const auto r = sympnet_forward_tangent(id_net, y, q, ty, Vec(3, 0.0));
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(r.tx[i] == ty[i]);
            CHECK(r.tp[i] == 0.0);
        }
    }
    SECTION("zero tangent in, zero tangent out") {
        const Vec y = testutil::random_vec(3, rng);
        const auto r = sympnet_forward_tangent(net, y, y, Vec(3, 0.0), Vec(3, 0.0));
        for (double v : r.tx) CHECK(v == 0.0);
        for (double v : r.tp) CHECK(v == 0.0);
    }
}

TEST_CASE("tape emission agrees with the plain forward paths") {
    Rng rng(31);
    const auto net = testutil::random_net(4, 6, 9, Activation::Relu, rng);
    const Vec y = testutil::random_vec(4, rng);
    const Vec q = testutil::random_vec(4, rng);
    const Vec ty = testutil::random_vec(4, rng);

    ad::Tape tape;
    const auto hs = bind_net_params(tape, net);
    const auto yh = tape.parameter(y);
    const auto qh = tape.parameter(q);
    const auto tyh = tape.parameter(ty);
    const auto tqh = tape.zeros(4);
    const auto fw = emit_forward_with_tangent(tape, net, hs, yh, qh, tyh, tqh);

    const auto plain = sympnet_forward_tangent(net, y, q, ty, Vec(4, 0.0));
    CHECK(testutil::max_abs_diff(tape.value(fw.x), plain.x) < 1e-14);
    CHECK(testutil::max_abs_diff(tape.value(fw.p), plain.p) < 1e-14);
    CHECK(testutil::max_abs_diff(tape.value(fw.tx), plain.tx) < 1e-14);
    CHECK(testutil::max_abs_diff(tape.value(fw.tp), plain.tp) < 1e-14);

    const auto fw2 = emit_forward(tape, net, hs, yh, qh);
    CHECK(testutil::max_abs_diff(tape.value(fw2.x), plain.x) < 1e-14);
    CHECK(testutil::max_abs_diff(tape.value(fw2.p), plain.p) < 1e-14);
}

TEST_CASE("symplecticity of the dense Jacobian") {
    Rng rng(47);
    for (int net_rep = 0; net_rep < 3; ++net_rep) {
        const auto net = testutil::random_net(4, 6, 20, Activation::Relu, rng);
        for (int rep = 0; rep < 20; ++rep) {
            const Vec z = testutil::random_vec(8, rng, -1.5, 1.5);
            const Vec jac = dense_jacobian(net, z);
            REQUIRE(testutil::symplectic_residual(jac, 4) < 1e-8);
        }
    }
    SECTION("identity net gives the identity matrix") {
        Rng rng2(1);
        const auto net = make_sympnet(3, 4, 6, Activation::Relu, rng2);
        const Vec z = testutil::random_vec(6, rng2);
        const Vec jac = dense_jacobian(net, z);
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c)
                CHECK(jac[static_cast<std::size_t>(r) * 6 + static_cast<std::size_t>(c)] ==
                      (r == c ? 1.0 : 0.0));
    }
    SECTION("determinant is one") {
        const auto net = testutil::random_net(3, 6, 15, Activation::Sigmoid, rng);
        for (int rep = 0; rep < 10; ++rep) {
            const Vec z = testutil::random_vec(6, rng);
            const Vec jac = dense_jacobian(net, z);
            REQUIRE(std::abs(testutil::determinant(jac, 6) - 1.0) < 1e-6);
        }
    }
}

TEST_CASE("parameter gradients through the tangent pass match finite differences") {
    Rng rng(53);
    auto net = testutil::random_net(2, 4, 6, Activation::Sigmoid, rng);
    const Vec y = testutil::random_vec(2, rng);
    const Vec q = testutil::random_vec(2, rng);
    const Vec ty = testutil::random_vec(2, rng);

    ad::Tape tape;
    const auto hs = bind_net_params(tape, net);
    const auto fw = emit_forward_with_tangent(tape, net, hs, tape.parameter(y), tape.parameter(q),
                                              tape.parameter(ty), tape.zeros(2));
    // scalar function mixing values and tangents
    const auto out = tape.add(tape.square_norm(fw.tx), tape.add(tape.square_norm(fw.tp),
                                                                tape.dot(fw.x, fw.p)));
    tape.backward(out);

    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        for (int block = 0; block < 3; ++block) {
            const auto handle = block == 0   ? hs.layers[li].K
                                : block == 1 ? hs.layers[li].a
                                             : hs.layers[li].b;
            const Vec grad(tape.adjoint(handle).begin(), tape.adjoint(handle).end());
            const Vec base(tape.value(handle).begin(), tape.value(handle).end());
            const auto fd = ad::finite_difference_gradient(
                [&](std::span<const double> v) {
                    tape.set_value(handle, v);
                    tape.forward();
                    return tape.scalar(out);
                },
                base, 1e-5);
            tape.set_value(handle, base);
            tape.forward();
            REQUIRE(testutil::max_rel_err(grad, fd) < 1e-4);
        }
    }
}

TEST_CASE("checkpoint round trip is value exact") {
    Rng rng(61);
    const auto net = testutil::random_net(3, 5, 8, Activation::Relu, rng);
    const std::string path =
        (std::filesystem::temp_directory_path() / "sympoc_ckpt_test.json").string();
    save_checkpoint(net, path);
    const auto back = load_checkpoint(path);
    REQUIRE(back.half_dim == net.half_dim);
    REQUIRE(back.layers.size() == net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        CHECK(back.layers[i].kind == net.layers[i].kind);
        CHECK(back.layers[i].activation == net.layers[i].activation);
        CHECK(back.layers[i].width == net.layers[i].width);
        REQUIRE(back.layers[i].K == net.layers[i].K);  // bitwise equality
        REQUIRE(back.layers[i].a == net.layers[i].a);
        REQUIRE(back.layers[i].b == net.layers[i].b);
    }
    std::remove(path.c_str());
}
