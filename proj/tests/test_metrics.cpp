#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "flowmap/error.hpp"
#include "flowmap/metrics.hpp"
#include "flowmap/synthetic.hpp"
#include "test_util.hpp"

using namespace flowmap;
using testutil::frob_diff;

namespace {

double max_abs_value(const std::vector<MetricSample>& samples) {
    double m = 0.0;
    for (const auto& s : samples) m = std::max(m, std::abs(s.value));
    return m;
}

// Pairs samples of two runs by tracer id; the runs must cover the same ids.
template <class Fn>
void for_matched(const std::vector<MetricSample>& a, const std::vector<MetricSample>& b,
                 Fn&& fn) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].id == b[i].id);
        fn(a[i], b[i]);
    }
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("spin/stretch decomposition") {
    const Mat2 rot{0, -1, 1, 0};
    auto ss = spin_stretch_decompose(rot);
    CHECK(frob_diff(ss.spin, rot) == 0.0);
    CHECK(ss.stretch.frobenius() == 0.0);

    const double rate = 0.8;
    auto shear = spin_stretch_decompose(Mat2{0, rate, 0, 0});
    CHECK(frob_diff(shear.spin, Mat2{0, rate / 2, -rate / 2, 0}) == 0.0);
    CHECK(frob_diff(shear.stretch, Mat2{0, rate / 2, rate / 2, 0}) == 0.0);

    auto sym = spin_stretch_decompose(Mat2{1, 0.3, 0.3, -2});
    CHECK(sym.spin.frobenius() == 0.0);
}

TEST_CASE("property: W + D reconstructs the gradient, W skew, D symmetric") {
    std::mt19937_64 rng(42);
    for (int iter = 0; iter < 100; ++iter) {
        const Mat2 g{testutil::uniform(rng, -2, 2), testutil::uniform(rng, -2, 2),
                     testutil::uniform(rng, -2, 2), testutil::uniform(rng, -2, 2)};
        auto ss = spin_stretch_decompose(g);
        // One rounding step in the +/- halves: machine precision, not zero.
        CHECK(frob_diff(ss.spin + ss.stretch, g) <= 1e-15 * (1.0 + g.frobenius()));
        CHECK(frob_diff(ss.spin.transpose(), ss.spin * -1.0) == 0.0);
        CHECK(frob_diff(ss.stretch.transpose(), ss.stretch) == 0.0);
    }
}

TEST_CASE("planar vorticity") {
    CHECK(vorticity_2d(Mat2{0, -0.7, 0.7, 0}) == doctest::Approx(1.4)); // 2 * omega
    CHECK(vorticity_2d(Mat2{0, 0.8, 0, 0}) == doctest::Approx(-0.8));  // shear
    CHECK(vorticity_2d(Mat2{0.5, 0, 0, -0.5}) == 0.0);                 // pure strain
}

TEST_CASE("mean vorticity and deviation") {
    CHECK(mean_vorticity(std::vector<double>{1, 2, 3}) == doctest::Approx(2.0));
    CHECK(mean_vorticity(std::vector<double>{5}) == 5.0);
    CHECK_THROWS_AS(mean_vorticity(std::vector<double>{}), Error);
    CHECK(vorticity_deviation(2.0, 2.0) == 0.0);
    CHECK(vorticity_deviation(-1.0, 2.0) == 3.0);
}

TEST_CASE("principal strain rate") {
    CHECK(principal_strain_rate(Mat2{0.4, 0, 0, -0.4}) == doctest::Approx(0.4));
    CHECK(principal_strain_rate(Mat2{0, 0.45, 0.45, 0}) == doctest::Approx(0.45));
    CHECK(principal_strain_rate(Mat2::zero()) == 0.0);
    CHECK_THROWS_AS(principal_strain_rate(Mat2{0, 1e-6, 0, 0}), Error);
}

TEST_CASE("FTLE values and errors") {
    FlowMapJacobian jac{{std::exp(2.0), 0, 0, std::exp(-2.0)}, 0, 0, 10, false, 5};
    CHECK(ftle(jac, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
    FlowMapJacobian ident{Mat2::identity(), 0, 0, 1, false, 5};
    CHECK(ftle(ident, 3.0) == 0.0);
    FlowMapJacobian zero{Mat2::zero(), 0, 0, 1, false, 5};
    CHECK_THROWS_AS(ftle(zero, 1.0), Error);
    CHECK_THROWS_AS(ftle(ident, 0.0), Error);
}

TEST_CASE("LAVD quadrature") {
    // Constant 2 rad/s over 8 seconds: 16 rad total, 8 rad of rotation.
    std::vector<std::pair<double, double>> samples;
    for (int i = 0; i <= 16; ++i) samples.push_back({0.5 * i, 2.0});
    auto result = lavd(samples);
    CHECK(result.lavd == 16.0);
    CHECK(result.rotation_angle == 8.0);

    std::vector<std::pair<double, double>> zeros{{0, 0}, {1, 0}, {2, 0}};
    CHECK(lavd(zeros).lavd == 0.0);

    CHECK_THROWS_AS(lavd(std::vector<std::pair<double, double>>{{0, 1}}), Error);
    CHECK_THROWS_AS(lavd(std::vector<std::pair<double, double>>{{0, 1}, {0, 1}}), Error);
    CHECK_THROWS_AS(lavd(std::vector<std::pair<double, double>>{{0, 1}, {1, -0.5}}), Error);
}

TEST_CASE("property: LAVD is additive over concatenated subintervals") {
    std::mt19937_64 rng(55);
    for (int iter = 0; iter < 100; ++iter) {
        std::vector<std::pair<double, double>> samples;
        double t = 0.0;
        const int n = 5 + static_cast<int>(rng() % 20);
        for (int i = 0; i < n; ++i) {
            samples.push_back({t, testutil::uniform(rng, 0, 3)});
            t += testutil::uniform(rng, 0.05, 0.4);
        }
        const std::size_t cut = 1 + rng() % (samples.size() - 2);
        std::vector<std::pair<double, double>> head(samples.begin(),
                                                    samples.begin() + cut + 1);
        std::vector<std::pair<double, double>> tail(samples.begin() + cut, samples.end());
        const double whole = lavd(samples).lavd;
        const double parts = lavd(head).lavd + lavd(tail).lavd;
        CHECK(whole == doctest::Approx(parts).epsilon(1e-12));
        CHECK(whole >= 0.0);
    }
}

TEST_CASE("metric kind names round-trip") {
    for (MetricKind kind : {MetricKind::Vorticity, MetricKind::VorticityDeviation,
                            MetricKind::PrincipalStrain, MetricKind::Ftle, MetricKind::Lavd}) {
        CHECK(parse_metric_kind(metric_kind_name(kind)) == kind);
    }
    CHECK_THROWS_AS(parse_metric_kind("nope"), Error);
    CHECK(metric_is_instantaneous(MetricKind::Vorticity));
    CHECK_FALSE(metric_is_instantaneous(MetricKind::Lavd));
}

TEST_CASE("rotation flow: instantaneous pipeline recovers 2*omega") {
    std::mt19937_64 rng(7);
    const int n = 2000;
    std::vector<Vec2> seeds;
    for (int i = 0; i < n; ++i) {
        seeds.push_back({testutil::uniform(rng, -1, 1), testutil::uniform(rng, -1, 1)});
    }
    const double dt = 0.01;
    auto set = testutil::make_set(n, 2, dt, [&](TracerId id, int f) {
        return Mat2::rotation(dt * f) * seeds[static_cast<std::size_t>(id)];
    });
    KernelConfig cfg{15, 0.2, 1e-10};

    auto vort = field_pipeline(set, cfg, 0, 1, MetricKind::Vorticity);
    CHECK(vort.samples.size() == static_cast<std::size_t>(n));
    for (const auto& s : vort.samples) CHECK(std::abs(s.value - 2.0) < 1e-2);

    // Uniform vorticity: deviations vanish after mean subtraction, up to
    // the conditioning of the per-tracer normal matrices.
    auto dev = field_pipeline(set, cfg, 0, 1, MetricKind::VorticityDeviation);
    for (const auto& s : dev.samples) {
        CHECK(s.value >= 0.0);
        CHECK(s.value < 1e-6);
    }

    CHECK_THROWS_AS(field_pipeline(set, cfg, 0, 0, MetricKind::Vorticity), Error);
}

TEST_CASE("saddle flow: composed FTLE approximates 1") {
    std::mt19937_64 rng(17);
    const int n = 40;
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
    auto result = field_pipeline(set, KernelConfig{10, 2.0, 1e-12}, 0, steps,
                                 MetricKind::Ftle);
    CHECK(result.samples.size() == static_cast<std::size_t>(n));
    for (const auto& s : result.samples) CHECK(std::abs(s.value - 1.0) < 0.02);
}

TEST_CASE("pipeline with no eligible tracers reports diagnostics") {
    // Two tracers cannot supply d+1 = 3 neighbors each.
    auto set = testutil::make_set(2, 2, 0.1, [](TracerId id, int f) {
        return Vec2{static_cast<double>(id), 0.1 * f};
    });
    CHECK_THROWS_WITH_AS(field_pipeline(set, KernelConfig{3, 1.0, 1e-10}, 0, 1,
                                        MetricKind::Vorticity),
                         "no eligible tracers (candidates 2, skipped: persistence 0, "
                         "neighbors 2, rank 0)",
                         Error);
}

TEST_CASE("objectivity under a time-dependent Euclidean change of frame") {
    // Trajectories of an unsteady flow, observed twice: once directly and
    // once from a rotating, translating frame. The step width is kept tiny
    // so the one-step gradient approximation does not mask the algebra.
    const double dt = 1e-6;
    const double t0 = 0.3;
    const double spin_rate = 0.3;
    auto flow = double_gyre_flow();
    auto seeds = random_seeds(400, Domain{0.1, 1.9, 0.1, 0.9}, 2026);
    auto base = advect(flow, seeds, t0, t0 + 3 * dt, dt);
    auto moved = apply_euclidean_motion(
        base, [&](double t) { return spin_rate * t + 0.2; },
        [&](double t) { return Vec2{0.5 * t + 1.0, -0.2 * t - 0.5}; });

    KernelConfig cfg{15, 0.1, 1e-10};

    // FTLE and LAVD over the same interval in both frames.
    auto ftle_a = field_pipeline(base, cfg, 0, 3, MetricKind::Ftle);
    auto ftle_b = field_pipeline(moved, cfg, 0, 3, MetricKind::Ftle);
    const double ftle_scale = max_abs_value(ftle_a.samples);
    for_matched(ftle_a.samples, ftle_b.samples, [&](const auto& a, const auto& b) {
        CHECK(std::abs(a.value - b.value) < 1e-6 * ftle_scale);
    });

    auto lavd_a = field_pipeline(base, cfg, 0, 3, MetricKind::Lavd);
    auto lavd_b = field_pipeline(moved, cfg, 0, 3, MetricKind::Lavd);
    const double lavd_scale = max_abs_value(lavd_a.samples);
    for_matched(lavd_a.samples, lavd_b.samples, [&](const auto& a, const auto& b) {
        CHECK(a.value >= 0.0);
        CHECK(std::abs(a.value - b.value) < 1e-6 * lavd_scale);
    });

    auto dev_a = field_pipeline(base, cfg, 0, 1, MetricKind::VorticityDeviation);
    auto dev_b = field_pipeline(moved, cfg, 0, 1, MetricKind::VorticityDeviation);
    const double dev_scale = max_abs_value(dev_a.samples);
    for_matched(dev_a.samples, dev_b.samples, [&](const auto& a, const auto& b) {
        CHECK(std::abs(a.value - b.value) < 1e-6 * dev_scale);
    });

    auto eps_a = field_pipeline(base, cfg, 0, 1, MetricKind::PrincipalStrain);
    auto eps_b = field_pipeline(moved, cfg, 0, 1, MetricKind::PrincipalStrain);
    const double eps_scale = max_abs_value(eps_a.samples);
    for_matched(eps_a.samples, eps_b.samples, [&](const auto& a, const auto& b) {
        CHECK(std::abs(a.value - b.value) < 1e-6 * eps_scale);
    });

    // Raw vorticity is NOT objective: a constant-rate observer rotation
    // shifts every sample by 2 * spin_rate, which the deviation removes.
    auto vort_a = field_pipeline(base, cfg, 0, 1, MetricKind::Vorticity);
    auto vort_b = field_pipeline(moved, cfg, 0, 1, MetricKind::Vorticity);
    for_matched(vort_a.samples, vort_b.samples, [&](const auto& a, const auto& b) {
        CHECK(std::abs(b.value - a.value - 2.0 * spin_rate) < 1e-6);
    });
}

} // TEST_SUITE
