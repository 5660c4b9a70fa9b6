#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "flowmap/error.hpp"
#include "flowmap/reference.hpp"
#include "flowmap/regression.hpp"
#include "test_util.hpp"

using namespace flowmap;
using testutil::frob_diff;

namespace {

// Exact solid-body rotation samples: x(t) = R(omega t) x0.
TrajectorySet rotation_set(std::mt19937_64& rng, int n, double omega, double dt,
                           int frames) {
    return testutil::make_set(n, frames, dt, [&, seeds = [&] {
        std::vector<Vec2> s;
        for (int i = 0; i < n; ++i) {
            s.push_back({testutil::uniform(rng, -1, 1), testutil::uniform(rng, -1, 1)});
        }
        return s;
    }()](TracerId id, int f) {
        return Mat2::rotation(omega * dt * f) * seeds[static_cast<std::size_t>(id)];
    });
}

} // namespace

TEST_SUITE("regression") {

TEST_CASE("gaussian kernel weights") {
    const double s = 0.03;
    auto w = gaussian_kernel_weights(std::vector<Vec2>{{0, 0}, {s, 0}, {0, 2 * s}}, s);
    REQUIRE(w.size() == 3);
    CHECK(w[0] == 1.0);                                        // at the origin
    CHECK(w[1] == doctest::Approx(0.60653065971263342).epsilon(1e-14)); // |dx| = s
    CHECK(w[2] == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(gaussian_kernel_weights(std::vector<Vec2>{}, 0.0), Error);
}

TEST_CASE("exact shear data is interpolated") {
    // Neighbors deformed exactly by A = [[1, 0.1], [0, 1]].
    const Mat2 shear{1.0, 0.1, 0.0, 1.0};
    std::vector<TrajectoryRecord> records;
    const std::vector<Vec2> pts{{0, 0}, {0.3, 0.1}, {-0.2, 0.25}, {0.1, -0.3}, {0.25, 0.2}};
    for (TracerId id = 0; id < static_cast<TracerId>(pts.size()); ++id) {
        records.push_back({id, 0, pts[static_cast<std::size_t>(id)]});
        records.push_back({id, 1, shear * pts[static_cast<std::size_t>(id)]});
    }
    auto set = TrajectorySet::build(records, {0.0, 1.0});
    KernelConfig cfg{4, 0.5, 0.0};
    const std::vector<TracerId> neighbors{1, 2, 3, 4};
    auto jac = regress_jacobian(set, 0, neighbors, 0, 1, cfg);
    CHECK(frob_diff(jac.m, shear) < 1e-12);
    CHECK(jac.n_used == 4);
    CHECK_FALSE(jac.shortfall);
}

TEST_CASE("rotation flow, 15 scattered neighbors") {
    std::mt19937_64 rng(5);
    auto set = rotation_set(rng, 16, 1.0, 0.01, 2);
    KernelConfig cfg{15, 0.5, 1e-12};
    std::vector<TracerId> neighbors;
    for (TracerId id = 1; id <= 15; ++id) neighbors.push_back(id);
    auto jac = regress_jacobian(set, 0, neighbors, 0, 1, cfg);

    // Oracle: the flow map of v = (-y, x) over dt is the rotation matrix,
    // i.e. the exponential of dt * [[0, -1], [1, 0]].
    const Mat2 expected{0.99995000041666528, -0.0099998333341666647,
                        0.0099998333341666647, 0.99995000041666528};
    CHECK(frob_diff(jac.m, expected) < 1e-4);

    auto grad = velocity_gradient(jac, 0.01);
    CHECK(frob_diff(grad.m, Mat2{0, -1, 1, 0}) < 1e-2);
}

TEST_CASE("degenerate geometry raises a rank error naming the center") {
    std::vector<TrajectoryRecord> records;
    for (TracerId id = 0; id < 3; ++id) {
        const Vec2 p{static_cast<double>(id), 0.0};
        records.push_back({id, 0, p});
        records.push_back({id, 1, p});
    }
    auto set = TrajectorySet::build(records, {0.0, 1.0});
    KernelConfig cfg{3, 1.0, 0.0};
    const std::vector<TracerId> neighbors{1, 2};
    CHECK_THROWS_WITH_AS(regress_jacobian(set, 0, neighbors, 0, 1, cfg),
                         "rank-deficient regression for tracer 0: 2 neighbors with gamma = 0",
                         Error);
    // Regularization permits the few-neighbor case, flagged.
    cfg.gamma = 1e-8;
    auto jac = regress_jacobian(set, 0, neighbors, 0, 1, cfg);
    CHECK(jac.shortfall);
    CHECK(jac.n_used == 2);
}

TEST_CASE("identity interval and velocity gradient arithmetic") {
    auto set = testutil::make_set(4, 2, 0.01, [](TracerId id, int) {
        return Vec2{static_cast<double>(id), 0.5};
    });
    KernelConfig cfg{3, 1.0, 0.0};
    const std::vector<TracerId> neighbors{1, 2, 3};
    auto jac = regress_jacobian(set, 0, neighbors, 0, 0, cfg);
    CHECK(frob_diff(jac.m, Mat2::identity()) == 0.0);

    FlowMapJacobian one_step{{1.0, -0.01, 0.01, 1.0}, 0, 0, 1, false, 3};
    auto grad = velocity_gradient(one_step, 0.01);
    CHECK(frob_diff(grad.m, Mat2{0, -1, 1, 0}) < 1e-12);

    FlowMapJacobian ident{Mat2::identity(), 0, 0, 1, false, 3};
    CHECK(velocity_gradient(ident, 0.5).m.frobenius() == 0.0);
    CHECK_THROWS_AS(velocity_gradient(ident, 0.0), Error);
    FlowMapJacobian wide{Mat2::identity(), 0, 0, 2, false, 3};
    CHECK_THROWS_AS(velocity_gradient(wide, 0.1), Error);
}

TEST_CASE("composition arithmetic and errors") {
    FlowMapJacobian a{{1.0, 0.1, 0.0, 1.0}, 7, 0, 1, false, 9};
    FlowMapJacobian b{{1.0, 0.0, 0.1, 1.0}, 7, 1, 2, false, 5};
    auto ab = compose_jacobians(std::vector<FlowMapJacobian>{a, b});
    CHECK(frob_diff(ab.m, Mat2{1.0, 0.1, 0.1, 1.01}) < 1e-15);
    CHECK(ab.frame_start == 0);
    CHECK(ab.frame_end == 2);
    CHECK(ab.n_used == 5);

    FlowMapJacobian i0{Mat2::identity(), 1, 0, 1, false, 9};
    FlowMapJacobian i1{Mat2::identity(), 1, 1, 2, false, 9};
    CHECK(frob_diff(compose_jacobians(std::vector<FlowMapJacobian>{i0, i1}).m,
                    Mat2::identity()) == 0.0);

    CHECK_THROWS_AS(compose_jacobians(std::vector<FlowMapJacobian>{}), Error);
    FlowMapJacobian gap{Mat2::identity(), 7, 3, 4, false, 9};
    CHECK_THROWS_AS(compose_jacobians(std::vector<FlowMapJacobian>{a, gap}), Error);
    FlowMapJacobian other{Mat2::identity(), 8, 1, 2, false, 9};
    CHECK_THROWS_AS(compose_jacobians(std::vector<FlowMapJacobian>{a, other}), Error);
}

TEST_CASE("100 composed saddle steps approximate diag(e, 1/e)") {
    // Exact saddle trajectories x(t) = (x0 e^t, y0 e^-t) sampled 100 times.
    std::mt19937_64 rng(17);
    const int n = 30;
    std::vector<Vec2> seeds;
    for (int i = 0; i < n; ++i) {
        seeds.push_back({testutil::uniform(rng, 0.5, 1.5), testutil::uniform(rng, 0.5, 1.5)});
    }
    const int steps = 100;
    const double dt = 1.0 / steps;
    auto set = testutil::make_set(n, steps + 1, dt, [&](TracerId id, int f) {
        const double t = dt * f;
        const Vec2 s = seeds[static_cast<std::size_t>(id)];
        return Vec2{s.x * std::exp(t), s.y * std::exp(-t)};
    });

    KernelConfig cfg{8, 2.0, 1e-12};
    std::vector<FlowMapJacobian> chain;
    for (int f = 0; f < steps; ++f) {
        auto nq = reference::k_nearest_linear_scan(set, 0, cfg.k, f, f + 1);
        chain.push_back(regress_jacobian(set, 0, nq.ids, f, f + 1, cfg));
    }
    auto total = compose_jacobians(chain);
    const Mat2 expected{2.71828182845904524, 0.0, 0.0, 0.367879441171442322};
    CHECK(frob_diff(total.m, expected) / expected.frobenius() < 0.01);
}

TEST_CASE("property: affine exactness for any weights and neighbor set") {
    std::mt19937_64 rng(100);
    for (int iter = 0; iter < 100; ++iter) {
        const int n = 3 + static_cast<int>(rng() % 28);
        auto scene = testutil::make_affine_scene(rng, n);
        KernelConfig cfg{3, testutil::uniform(rng, 0.05, 2.0), 0.0};
        auto jac = regress_jacobian(scene.set, scene.center, scene.neighbors, 0, 1, cfg);
        CHECK(frob_diff(jac.m, scene.map) < 1e-10);
    }
}

TEST_CASE("property: rotation equivariance and translation invariance") {
    std::mt19937_64 rng(101);
    for (int iter = 0; iter < 100; ++iter) {
        auto scene = testutil::make_affine_scene(rng, 10);
        KernelConfig cfg{10, 0.7, 1e-10};
        auto base = regress_jacobian(scene.set, scene.center, scene.neighbors, 0, 1, cfg);

        const Mat2 q = Mat2::rotation(testutil::uniform(rng, -3.1, 3.1));
        const Vec2 shift{testutil::uniform(rng, -5, 5), testutil::uniform(rng, -5, 5)};

        std::vector<TrajectoryRecord> rotated, shifted;
        for (const auto& rec : scene.set.all_records()) {
            rotated.push_back({rec.id, rec.frame, q * rec.pos});
            shifted.push_back({rec.id, rec.frame, rec.pos + shift});
        }
        auto rot_set = TrajectorySet::build(rotated, {0.0, 1.0});
        auto shift_set = TrajectorySet::build(shifted, {0.0, 1.0});

        auto rot = regress_jacobian(rot_set, scene.center, scene.neighbors, 0, 1, cfg);
        CHECK(frob_diff(rot.m, q * base.m * q.transpose()) < 1e-10);

        auto shf = regress_jacobian(shift_set, scene.center, scene.neighbors, 0, 1, cfg);
        CHECK(frob_diff(shf.m, base.m) < 1e-9);
    }
}

TEST_CASE("property: composition equals single-span regression on affine data") {
    std::mt19937_64 rng(102);
    for (int iter = 0; iter < 100; ++iter) {
        // Three frames under two random affine maps.
        const Mat2 m1{testutil::uniform(rng, 0.5, 1.5), testutil::uniform(rng, -0.3, 0.3),
                      testutil::uniform(rng, -0.3, 0.3), testutil::uniform(rng, 0.5, 1.5)};
        const Mat2 m2{testutil::uniform(rng, 0.5, 1.5), testutil::uniform(rng, -0.3, 0.3),
                      testutil::uniform(rng, -0.3, 0.3), testutil::uniform(rng, 0.5, 1.5)};
        std::vector<TrajectoryRecord> records;
        std::vector<TracerId> neighbors;
        for (TracerId id = 0; id < 9; ++id) {
            const Vec2 p0{testutil::uniform(rng, -1, 1), testutil::uniform(rng, -1, 1)};
            records.push_back({id, 0, p0});
            records.push_back({id, 1, m1 * p0});
            records.push_back({id, 2, m2 * (m1 * p0)});
            if (id > 0) neighbors.push_back(id);
        }
        auto set = TrajectorySet::build(records, {0.0, 0.5, 1.0});
        KernelConfig cfg{8, 1.0, 0.0};
        auto j01 = regress_jacobian(set, 0, neighbors, 0, 1, cfg);
        auto j12 = regress_jacobian(set, 0, neighbors, 1, 2, cfg);
        auto composed = compose_jacobians(std::vector<FlowMapJacobian>{j01, j12});
        auto direct = regress_jacobian(set, 0, neighbors, 0, 2, cfg);
        CHECK(frob_diff(composed.m, direct.m) < 1e-9);
        CHECK(frob_diff(direct.m, m2 * m1) < 1e-9);
    }
}

TEST_CASE("property: gamma -> 0 converges to the unregularized solution") {
    std::mt19937_64 rng(103);
    for (int iter = 0; iter < 100; ++iter) {
        auto scene = testutil::make_affine_scene(rng, 12);
        const std::vector<double> gammas{1e-2, 1e-6, 1e-12};
        KernelConfig cfg{12, 0.7, 0.0};
        auto exact = regress_jacobian(scene.set, scene.center, scene.neighbors, 0, 1, cfg);
        double prev = 1e300;
        for (double gamma : gammas) {
            cfg.gamma = gamma;
            auto jac = regress_jacobian(scene.set, scene.center, scene.neighbors, 0, 1, cfg);
            const double err = frob_diff(jac.m, exact.m);
            CHECK(err < prev + 1e-12);
            prev = err;
        }
        CHECK(prev < 1e-8); // gamma = 1e-12 is numerically the exact solution
    }
}

TEST_CASE("property: velocity gradient error is first order in dt") {
    // On the rotation flow the leading error term is omega^2 dt / sqrt(2),
    // so halving dt halves the error.
    std::mt19937_64 rng(104);
    std::vector<double> errors;
    for (double dt : {0.04, 0.02, 0.01}) {
        auto set = rotation_set(rng, 40, 1.0, dt, 2);
        KernelConfig cfg{15, 1.0, 1e-12};
        auto nq = reference::k_nearest_linear_scan(set, 0, cfg.k, 0, 1);
        auto jac = regress_jacobian(set, 0, nq.ids, 0, 1, cfg);
        auto grad = velocity_gradient(jac, dt);
        errors.push_back(frob_diff(grad.m, Mat2{0, -1, 1, 0}));
    }
    CHECK(errors[0] / errors[1] == doctest::Approx(2.0).epsilon(0.2));
    CHECK(errors[1] / errors[2] == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("config presets and validation") {
    CHECK(lab_preset().k == 15);
    CHECK(lab_preset().s == 0.03);
    CHECK(field_preset().k == 25);
    CHECK(field_preset().s == 0.6);
    CHECK_THROWS_AS((KernelConfig{2, 1.0, 0.0}).validate(), Error);
    CHECK_THROWS_AS((KernelConfig{15, 0.0, 0.0}).validate(), Error);
    CHECK_THROWS_AS((KernelConfig{15, 1.0, -1.0}).validate(), Error);
}

} // TEST_SUITE
