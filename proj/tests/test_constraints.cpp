#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "sympoc/constraints.hpp"
#include "sympoc/tape.hpp"
#include "test_util.hpp"

using namespace sympoc;

TEST_CASE("capsule margin worked examples") {
    const Vec a{-1.0, 0.0}, b{1.0, 0.0};
    CHECK(capsule_constraint(a, b, 0.5, 0.3, Vec{0.0, 2.0}) == Catch::Approx(3.36));
    CHECK(capsule_constraint(a, b, 0.5, 0.3, Vec{3.0, 0.0}) == Catch::Approx(3.36));
    CHECK(capsule_constraint(a, b, 0.5, 0.3, Vec{0.25, 0.0}) == Catch::Approx(-0.64));
    // degenerate segment behaves like a ball
    CHECK(capsule_constraint(a, a, 0.5, 0.3, Vec{-1.0, 2.0}) ==
          Catch::Approx(ball_constraint(a, 0.5, 0.3, Vec{-1.0, 2.0})));
}

TEST_CASE("ball margin worked examples") {
    const Vec z{0.0, 0.0};
    CHECK(ball_constraint(z, 1.0, 0.1, Vec{2.0, 0.0}) == Catch::Approx(2.79));
    CHECK(ball_constraint(z, 1.0, 0.1, Vec{0.0, 0.0}) == Catch::Approx(-1.21));
    CHECK(ball_constraint(z, 1.0, 0.1, Vec{1.1, 0.0}) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("room wall margins") {
    const auto center = room_walls2d(5.0, Vec{0.0, 0.0});
    for (double v : center) CHECK(v == 5.0);
    const auto off = room_walls2d(5.0, Vec{4.0, -3.0});
    CHECK(off[0] == 9.0);
    CHECK(off[1] == 1.0);
    CHECK(off[2] == 2.0);
    CHECK(off[3] == 8.0);
    const auto wall = room_walls2d(5.0, Vec{5.0, 0.0});
    CHECK(wall[1] == 0.0);
}

TEST_CASE("box margin worked examples") {
    const Box3d box{{-1, -1, -1}, {1, 1, 1}};
    CHECK(box3d_constraint(box, 0.2, Vec{3.0, 0.0, 0.0}) == Catch::Approx(1.8));
    CHECK(box3d_constraint(box, 0.2, Vec{0.0, 0.0, 0.0}) == Catch::Approx(-1.2));
    CHECK(box3d_constraint(box, 0.2, Vec{1.2, 0.0, 0.0}) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("pairwise collision margins and index formula") {
    SECTION("two agents") {
        const Vec xs{0.0, 0.0, 1.0, 0.0};
        const Vec h = pairwise_collision(xs, 2, 2, 0.3);
        REQUIRE(h.size() == 1);
        CHECK(h[0] == Catch::Approx(0.64));
    }
    SECTION("pair (1,3) lands at slot 2") {
        // three agents; distances chosen so each pair is distinguishable
        const Vec xs{0.0, 0.0, 1.0, 0.0, 0.0, 2.0};
        const Vec h = pairwise_collision(xs, 3, 2, 0.0);
        REQUIRE(h.size() == 3);
        CHECK(h[0] == Catch::Approx(1.0));  // (1,2)
        CHECK(h[1] == Catch::Approx(4.0));  // (1,3): k = 1 + 2*1/2 = 2 -> index 1
        CHECK(h[2] == Catch::Approx(5.0));  // (2,3)
    }
    SECTION("coincident agents") {
        const Vec xs{1.0, 1.0, 1.0, 1.0};
        const Vec h = pairwise_collision(xs, 2, 2, 0.3);
        CHECK(h[0] == Catch::Approx(-0.36));
    }
}

namespace {

ConstraintSet two_agents_one_ball() {
    return ConstraintSet({Ball{{0.0, 0.0}, 1.0}}, 0.3, 2, 2);
}

}  // namespace

TEST_CASE("assembled constraint vector layout") {
    SECTION("two agents, one ball: length 3") {
        const auto cs = two_agents_one_ball();
        REQUIRE(cs.output_dim() == 3);
        const Vec x{2.0, 0.0, 0.0, 3.0};
        const Vec h = cs.values(x);
        CHECK(h[0] == Catch::Approx(4.0 - 1.69));   // agent 1 vs ball
        CHECK(h[1] == Catch::Approx(9.0 - 1.69));   // agent 2 vs ball
        CHECK(h[2] == Catch::Approx(13.0 - 0.36));  // pair
    }
    SECTION("room walls contribute four components per agent") {
        const ConstraintSet cs({Room2d{5.0}}, 0.3, 3, 2);
        CHECK(cs.output_dim() == 3 * 4 + 3);
    }
    SECTION("input dimension is validated") {
        const auto cs = two_agents_one_ball();
        CHECK_THROWS_AS(cs.values(Vec{1.0, 2.0}), std::invalid_argument);
    }
}

TEST_CASE("ordering is deterministic and permutation equivariant") {
    const ConstraintSet cs({Ball{{0.5, 0.5}, 1.0}, Ball{{-2.0, 1.0}, 0.5}}, 0.2, 3, 2);
    Rng rng(19);
    const Vec x = testutil::random_vec(6, rng, -3.0, 3.0);
    const Vec h1 = cs.values(x);
    const Vec h2 = cs.values(x);
    REQUIRE(h1 == h2);  // stable across calls

    // swap agents 1 and 2 (0-based 0 and 1)
    Vec xp(x);
    std::swap_ranges(xp.begin(), xp.begin() + 2, xp.begin() + 2);
    const Vec hp = cs.values(xp);
    // h1 blocks permute: agent blocks are 2 entries each (two obstacles)
    CHECK(hp[0] == h1[2]);
    CHECK(hp[1] == h1[3]);
    CHECK(hp[2] == h1[0]);
    CHECK(hp[3] == h1[1]);
    // pairs: (1,2) unchanged as a set, (1,3) <-> (2,3)
    const std::size_t base = 6;
    CHECK(hp[base + 0] == Catch::Approx(h1[base + 0]));
    CHECK(hp[base + 1] == Catch::Approx(h1[base + 2]));
    CHECK(hp[base + 2] == Catch::Approx(h1[base + 1]));
}

TEST_CASE("sign semantics match geometric membership") {
    const ConstraintSet cs({Ball{{0.0, 0.0}, 1.0}}, 0.25, 2, 2);
    Rng rng(23);
    for (int rep = 0; rep < 200; ++rep) {
        const Vec x = testutil::random_vec(4, rng, -2.5, 2.5);
        const Vec h = cs.values(x);
        // agent-obstacle overlap iff distance < radii sum
        for (int agent = 0; agent < 2; ++agent) {
            const double dist =
                std::hypot(x[static_cast<std::size_t>(2 * agent)], x[static_cast<std::size_t>(2 * agent + 1)]);
            REQUIRE((h[static_cast<std::size_t>(agent)] < 0.0) == (dist < 1.25));
        }
        const double sep = std::hypot(x[0] - x[2], x[1] - x[3]);
        REQUIRE((h[2] < 0.0) == (sep < 0.5));
    }
}

namespace {

// Distance of the (unclamped) capsule projection parameter from its clamping
// thresholds; finite-difference stencils straddling a switch are excluded.
bool near_projection_switch(const Capsule& cap, std::span<const double> xa, double margin) {
    double ww = 0.0, wx = 0.0;
    for (std::size_t i = 0; i < xa.size(); ++i) {
        const double w = cap.b[i] - cap.a[i];
        ww += w * w;
        wx += w * (xa[i] - cap.a[i]);
    }
    const double t = wx / ww;
    return std::abs(t) < margin || std::abs(t - 1.0) < margin;
}

}  // namespace

TEST_CASE("jacobian products match finite differences") {
    const Capsule cap{{-1.0, -0.9}, {1.0, -0.9}, 0.7};
    const ConstraintSet cs({Ball{{0.5, 0.5}, 1.0}, cap, Room2d{5.0}}, 0.3, 3, 2);
    Rng rng(29);
    int tested = 0;
    for (int rep = 0; rep < 80; ++rep) {
        const Vec x = testutil::random_vec(6, rng, -4.0, 4.0);
        bool smooth = true;
        for (int agent = 0; agent < 3; ++agent)
            if (near_projection_switch(cap, std::span<const double>(x).subspan(2 * agent, 2), 1e-3))
                smooth = false;
        if (!smooth) continue;
        ++tested;
        const Vec v = testutil::random_vec(static_cast<std::size_t>(cs.output_dim()), rng);
        Vec jtv(6, 0.0);
        cs.accumulate_jtv(x, v, jtv);
        const auto fd = ad::finite_difference_gradient(
            [&](std::span<const double> xx) { return dot(cs.values(Vec(xx.begin(), xx.end())), v); },
            x, 1e-6);
        REQUIRE(testutil::max_rel_err(jtv, fd) < 1e-5);

        // jvp consistency with jtv: <J w, v> == <w, J^T v>
        const Vec w = testutil::random_vec(6, rng);
        Vec jvp(static_cast<std::size_t>(cs.output_dim()), 0.0);
        cs.accumulate_jvp(x, w, jvp);
        CHECK(testutil::rel_err(dot(jvp, v), dot(w, jtv)) < 1e-10);
    }
    REQUIRE(tested >= 40);
}

TEST_CASE("hessian-vector product matches differentiated jacobian product") {
    const Capsule cap{{-1.0, 0.0}, {1.0, 0.0}, 0.5};
    const ConstraintSet cs({Ball{{0.5, 0.5}, 1.0}, cap}, 0.3, 2, 2);
    Rng rng(31);
    int tested = 0;
    for (int rep = 0; rep < 80; ++rep) {
        const Vec x = testutil::random_vec(4, rng, -3.0, 3.0);
        bool smooth = true;
        for (int agent = 0; agent < 2; ++agent)
            if (near_projection_switch(cap, std::span<const double>(x).subspan(2 * agent, 2), 1e-3))
                smooth = false;
        if (!smooth) continue;
        ++tested;
        const Vec v = testutil::random_vec(static_cast<std::size_t>(cs.output_dim()), rng);
        const Vec w = testutil::random_vec(4, rng);
        Vec hvp(4, 0.0);
        cs.accumulate_hvp(x, v, w, hvp);
        // directional finite difference of x -> (grad h(x))^T v
        const double eps = 1e-6;
        Vec xp(x), xm(x);
        axpy(eps, w, xp);
        axpy(-eps, w, xm);
        Vec jp(4, 0.0), jm(4, 0.0);
        cs.accumulate_jtv(xp, v, jp);
        cs.accumulate_jtv(xm, v, jm);
        Vec fd(4);
        for (std::size_t i = 0; i < 4; ++i) fd[i] = (jp[i] - jm[i]) / (2 * eps);
        REQUIRE(testutil::max_rel_err(hvp, fd) < 1e-4);
    }
    REQUIRE(tested >= 40);
}

TEST_CASE("assemble_h exposes values and a jacobian-transpose callback") {
    const auto cs = two_agents_one_ball();
    const Vec x{2.0, 0.0, 0.0, 3.0};
    const auto assembled = assemble_h(cs, x);
    REQUIRE(assembled.values.size() == 3);
    const Vec v{1.0, 0.5, -2.0};
    const Vec jtv = assembled.jacobian_transpose_vec(v);
    const auto fd = ad::finite_difference_gradient(
        [&](std::span<const double> xx) { return dot(cs.values(Vec(xx.begin(), xx.end())), v); },
        x, 1e-6);
    REQUIRE(testutil::max_rel_err(jtv, fd) < 1e-5);
}
