#include <doctest.h>

#include <cmath>
#include <random>

#include "flowmap/error.hpp"
#include "flowmap/synthetic.hpp"
#include "test_util.hpp"

using namespace flowmap;

TEST_SUITE("synthetic") {

TEST_CASE("rotation advection lands on the quarter turn") {
    auto set = advect(rigid_rotation_flow(1.0), {{1.0, 0.0}}, 0.0,
                      1.5707963267948966, 1e-3);
    const Vec2 last = set.position(0, set.frame_count() - 1);
    CHECK(std::abs(last.x - 0.0) < 1e-8);
    CHECK(std::abs(last.y - 1.0) < 1e-8);
}

TEST_CASE("zero flow keeps trajectories constant") {
    AnalyticFlow still{"still", [](const Vec2&, double) { return Vec2{0, 0}; },
                       [](const Vec2&, double) { return Mat2::zero(); }};
    auto set = advect(still, {{0.3, 0.7}, {-1, 2}}, 0.0, 1.0, 0.1);
    for (int f = 0; f < set.frame_count(); ++f) {
        CHECK(set.position(0, f).x == 0.3);
        CHECK(set.position(1, f).y == 2.0);
    }
}

TEST_CASE("saddle advection reaches (e, 1/e)") {
    auto set = advect(saddle_flow(1.0), {{1.0, 1.0}}, 0.0, 1.0, 1e-3);
    const Vec2 last = set.position(0, set.frame_count() - 1);
    CHECK(std::abs(last.x - 2.71828182845904524) < 1e-6);
    CHECK(std::abs(last.y - 0.367879441171442322) < 1e-6);
}

TEST_CASE("advection error reporting and preconditions") {
    CHECK_THROWS_AS(advect(saddle_flow(), {{0, 0}}, 0.0, 1.0, 0.0), Error);
    CHECK_THROWS_AS(advect(saddle_flow(), {{0, 0}}, 1.0, 0.5, 0.1), Error);

    AnalyticFlow bad{"bad", [](const Vec2&, double) {
                         return Vec2{std::nan(""), 0.0};
                     },
                     [](const Vec2&, double) { return Mat2::zero(); }};
    CHECK_THROWS_WITH_AS(advect(bad, {{0, 0}, {1, 1}}, 0.0, 1.0, 0.5),
                         "non-finite state for seed 0 at t = 0.500000", Error);
}

TEST_CASE("property: the integrator is fourth order") {
    // Halving the step shrinks the final-position error by about 16x.
    const double T = 2.0;
    const Vec2 exact{std::cos(T), std::sin(T)};
    auto flow = rigid_rotation_flow(1.0);
    auto err_at = [&](double dt) {
        auto set = advect(flow, {{1.0, 0.0}}, 0.0, T, dt);
        return (set.position(0, set.frame_count() - 1) - exact).norm();
    };
    const double e1 = err_at(0.02);
    const double e2 = err_at(0.01);
    CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.25));
}

TEST_CASE("property: analytic gradients match finite differences") {
    std::mt19937_64 rng(3);
    const double h = 1e-5;
    for (const auto& flow :
         {rigid_rotation_flow(0.7), saddle_flow(1.3), shear_flow(0.9), double_gyre_flow()}) {
        for (int probe = 0; probe < 100; ++probe) {
            const Vec2 p{testutil::uniform(rng, 0.05, 0.95), testutil::uniform(rng, 0.05, 0.95)};
            const double t = testutil::uniform(rng, 0, 10);
            const Vec2 vxp = flow.velocity({p.x + h, p.y}, t);
            const Vec2 vxm = flow.velocity({p.x - h, p.y}, t);
            const Vec2 vyp = flow.velocity({p.x, p.y + h}, t);
            const Vec2 vym = flow.velocity({p.x, p.y - h}, t);
            const Mat2 fd{(vxp.x - vxm.x) / (2 * h), (vyp.x - vym.x) / (2 * h),
                          (vxp.y - vxm.y) / (2 * h), (vyp.y - vym.y) / (2 * h)};
            CHECK(testutil::frob_diff(fd, flow.gradient(p, t)) < 1e-6);
        }
    }
}

TEST_CASE("double gyre is incompressible and confined") {
    std::mt19937_64 rng(9);
    auto flow = double_gyre_flow();
    for (int probe = 0; probe < 100; ++probe) {
        const Vec2 p{testutil::uniform(rng, 0, 2), testutil::uniform(rng, 0, 1)};
        const double t = testutil::uniform(rng, 0, 10);
        CHECK(std::abs(flow.gradient(p, t).trace()) < 1e-12);
    }
    // No flux through the domain boundary.
    CHECK(flow.velocity({0.0, 0.5}, 1.0).x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(flow.velocity({2.0, 0.5}, 1.0).x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(flow.velocity({1.0, 0.0}, 1.0).y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(flow.velocity({1.0, 1.0}, 1.0).y == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("dense FTLE oracle on flows with known exponents") {
    GridSpec spec{48, 48, {-1, 1, -1, 1}};
    auto saddle_grid = dense_ftle_oracle(saddle_flow(1.0), spec, 0.0, 1.0, 0.01);
    for (int iy = 0; iy < spec.ny; iy += 7) {
        for (int ix = 0; ix < spec.nx; ix += 7) {
            CHECK(std::abs(saddle_grid.value_at(ix, iy) - 1.0) < 1e-3);
        }
    }
    CHECK(std::abs(saddle_grid.sample({0.21, -0.37}) - 1.0) < 1e-3);

    auto rot_grid = dense_ftle_oracle(rigid_rotation_flow(1.0), spec, 0.0, 1.0, 0.01);
    for (int iy = 0; iy < spec.ny; iy += 5) {
        for (int ix = 0; ix < spec.nx; ix += 5) {
            CHECK(std::abs(rot_grid.value_at(ix, iy)) < 1e-6);
        }
    }

    CHECK_THROWS_AS(saddle_grid.sample({5.0, 0.0}), Error);
}

TEST_CASE("euclidean motion preserves structure") {
    std::mt19937_64 rng(21);
    auto set = advect(double_gyre_flow(), random_seeds(40, {0.2, 1.8, 0.2, 0.8}, 4),
                      0.0, 0.5, 0.05);

    SUBCASE("identity motion changes nothing") {
        auto same = apply_euclidean_motion(set, [](double) { return 0.0; },
                                           [](double) { return Vec2{0, 0}; });
        for (const auto& rec : set.all_records()) {
            const Vec2 moved = same.position(rec.id, rec.frame);
            CHECK(moved.x == rec.pos.x);
            CHECK(moved.y == rec.pos.y);
        }
    }

    SUBCASE("drift shifts every tracer equally") {
        auto drifted = apply_euclidean_motion(set, [](double) { return 0.0; },
                                              [](double t) { return Vec2{t, 0.0}; });
        for (int f = 0; f < set.frame_count(); ++f) {
            const double t = set.time_at(f);
            for (const auto& e : set.frame_view(f).entries) {
                const Vec2 moved = drifted.position(e.id, f);
                CHECK(moved.x == doctest::Approx(e.pos.x + t).epsilon(1e-15));
                CHECK(moved.y == e.pos.y);
            }
        }
    }

    SUBCASE("pairwise distances survive arbitrary rigid motion") {
        auto moved = apply_euclidean_motion(
            set, [&](double t) { return 0.3 * t + 0.7 * std::sin(t); },
            [&](double t) { return Vec2{2.0 * t, -0.5 * t * t}; });
        for (int f = 0; f < set.frame_count(); ++f) {
            const auto before = set.frame_view(f).entries;
            const auto after = moved.frame_view(f).entries;
            REQUIRE(before.size() == after.size());
            for (std::size_t i = 0; i + 1 < before.size(); i += 3) {
                const double d0 = (before[i].pos - before[i + 1].pos).norm();
                const double d1 = (after[i].pos - after[i + 1].pos).norm();
                CHECK(std::abs(d0 - d1) < 1e-12);
            }
        }
    }
}

TEST_CASE("catalog lookup") {
    CHECK(catalog_flow("rotation", {2.0}).name == "rotation");
    CHECK(catalog_flow("double-gyre", {}).name == "double-gyre");
    CHECK_THROWS_AS(catalog_flow("vortex-street", {}), Error);
    // Seeds are deterministic in the seed value.
    auto a = random_seeds(10, {0, 1, 0, 1}, 42);
    auto b = random_seeds(10, {0, 1, 0, 1}, 42);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x == b[i].x);
        CHECK(a[i].y == b[i].y);
    }
}

} // TEST_SUITE
