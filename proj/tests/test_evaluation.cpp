#include <doctest.h>

#include <cmath>

#include "mocf/errors.hpp"
#include "mocf/evaluation.hpp"
#include "mocf/rng.hpp"

using namespace mocf;

TEST_CASE("point metrics on hand-computed values") {
    std::vector<double> f{10, 20, 30}, a{12, 18, 30}, n{14, 26, 30};
    PointMetrics m = point_metrics(f, a, n);
    CHECK(m.mae == doctest::Approx((2 + 2 + 0) / 3.0));
    CHECK(m.rmse == doctest::Approx(std::sqrt((4 + 4 + 0) / 3.0)));
    CHECK(m.rmae == doctest::Approx((4.0 / 3.0) / (10.0 / 3.0)));
}

TEST_CASE("rMAE of the naive benchmark against itself is one") {
    std::vector<double> a{5, 7, 9, 4}, n{6, 9, 7, 2};
    PointMetrics m = point_metrics(n, a, n);
    CHECK(m.rmae == doctest::Approx(1.0));
}

TEST_CASE("perfect naive benchmark makes rMAE undefined") {
    std::vector<double> f{1, 2}, a{3, 4};
    CHECK_THROWS_AS(point_metrics(f, a, a), NumericError);
}

TEST_CASE("empty naive marks rMAE as NaN") {
    PointMetrics m = point_metrics({1, 2}, {2, 2}, {});
    CHECK(m.mae == doctest::Approx(0.5));
    CHECK(std::isnan(m.rmae));
}

TEST_CASE("pinball loss basics") {
    CHECK(pinball_loss(10.0, 12.0, 0.5) == doctest::Approx(1.0));
    CHECK(pinball_loss(10.0, 8.0, 0.5) == doctest::Approx(1.0));
    CHECK(pinball_loss(10.0, 12.0, 0.9) == doctest::Approx(1.8));
    CHECK(pinball_loss(10.0, 8.0, 0.9) == doctest::Approx(0.2));
    CHECK(pinball_loss(10.0, 10.0, 0.3) == doctest::Approx(0.0));
}

TEST_CASE("CRPS of a near point mass approaches the absolute error") {
    EmpiricalPriceDistribution d;
    d.quantiles.fill(40.0);
    // point mass at 40, actual 47: CRPS should equal |47-40| up to the
    // 99-level discretization of the pinball average
    const double got = crps(d, 47.0);
    CHECK(got == doctest::Approx(7.0).epsilon(0.02));
}

TEST_CASE("CRPS is minimized near the distribution median") {
    Rng rng(3);
    std::vector<double> sample;
    for (int i = 0; i < 5000; ++i) sample.push_back(20.0 + 5.0 * rng.gaussian());
    EmpiricalPriceDistribution d = empirical_percentiles(sample);

    // average CRPS over fresh draws, scanning candidate point masses: the
    // predictive distribution itself must beat clearly misplaced ones
    double best_shift = -1;
    double best = std::numeric_limits<double>::infinity();
    for (double shift : {-8.0, -4.0, 0.0, 4.0, 8.0}) {
        EmpiricalPriceDistribution shifted = d;
        for (auto& q : shifted.quantiles) q += shift;
        double total = 0.0;
        Rng fresh(4);
        for (int i = 0; i < 2000; ++i) total += crps(shifted, 20.0 + 5.0 * fresh.gaussian());
        if (total < best) {
            best = total;
            best_shift = shift;
        }
    }
    CHECK(best_shift == 0.0);
}

TEST_CASE("R^2 accumulator closed-form cases") {
    RSquaredAccumulator acc;
    for (double v : {1.0, 2.0, 3.0, 4.0}) acc.add(v, v);
    CHECK(acc.value() == doctest::Approx(1.0));

    RSquaredAccumulator mean_pred;
    const double mean = 2.5;
    for (double v : {1.0, 2.0, 3.0, 4.0}) mean_pred.add(mean, v);
    CHECK(mean_pred.value() == doctest::Approx(0.0));

    RSquaredAccumulator constant;
    constant.add(1.0, 7.0);
    constant.add(2.0, 7.0);
    CHECK(std::isnan(constant.value()));
}

TEST_CASE("average R^2 weights the grid and skips NaN points") {
    EvaluationGrid grid = EvaluationGrid::uniform(0, 10, 51);
    std::vector<RSquaredAccumulator> pts(51);
    for (int j = 0; j < 51; ++j) {
        for (double v : {1.0, 2.0, 5.0}) pts[j].add(j == 25 ? v : v + 1.0, v);
    }
    // point 2 is perfect (R^2 = 1), the others share a fixed bias
    const double r2_biased = pts[0].value();
    const double avg = average_r_squared(grid, pts);
    CHECK(avg > r2_biased);
    CHECK(avg < 1.0);

    // a constant-actual point must not poison the average
    std::vector<RSquaredAccumulator> with_nan = pts;
    with_nan.push_back(RSquaredAccumulator{});
    with_nan.back().add(3.0, 7.0);
    with_nan.back().add(4.0, 7.0);
    EvaluationGrid grid52 = EvaluationGrid::uniform(0, 10, 52);
    const double avg52 = average_r_squared(grid52, with_nan);
    CHECK(std::isfinite(avg52));
}

TEST_CASE("DM test symmetry and references") {
    Rng rng(10);
    std::vector<double> a(200), b(200);
    for (int i = 0; i < 200; ++i) {
        a[i] = std::abs(rng.gaussian());
        b[i] = std::abs(rng.gaussian()) + 0.5;  // b clearly worse
    }
    DmResult ab = dm_test(a, b);
    DmResult ba = dm_test(b, a);
    CHECK(ab.statistic == doctest::Approx(-ba.statistic));
    CHECK(ab.p_value + ba.p_value == doctest::Approx(1.0));
    CHECK(ab.p_value < 0.01);   // a more accurate: small p
    CHECK(ba.p_value > 0.99);

    // equal losses with some noise: p near 0.5
    std::vector<double> c(400), d(400);
    for (int i = 0; i < 400; ++i) {
        c[i] = std::abs(rng.gaussian());
        d[i] = std::abs(rng.gaussian());
    }
    DmResult cd = dm_test(c, d);
    CHECK(cd.p_value > 0.05);
    CHECK(cd.p_value < 0.95);
}

TEST_CASE("DM test rejects a constant loss differential") {
    std::vector<double> a{1, 2, 3, 4}, b{2, 3, 4, 5};
    CHECK_THROWS_AS(dm_test(a, b), NumericError);
    CHECK_THROWS_AS(dm_test(a, a), NumericError);
}

TEST_CASE("PIT interpolation and clamping") {
    EmpiricalPriceDistribution d;
    for (int i = 0; i < 99; ++i) d.quantiles[i] = static_cast<double>(i + 1);  // q_tau = 100 tau
    CHECK(pit_value(d, 50.0) == doctest::Approx(0.5));
    CHECK(pit_value(d, 25.5) == doctest::Approx(0.255));
    CHECK(pit_value(d, -100.0) == doctest::Approx(0.005));
    CHECK(pit_value(d, 500.0) == doctest::Approx(0.995));
}

TEST_CASE("normal cdf reference values") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(normal_cdf(1.959963985) == doctest::Approx(0.975).epsilon(1e-8));
    CHECK(normal_cdf(-1.0) == doctest::Approx(1.0 - normal_cdf(1.0)).epsilon(1e-12));
    // inverse consistency with the quantile function
    for (double p : {0.05, 0.3, 0.7, 0.99})
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-9));
}

TEST_CASE("DM detects a small persistent accuracy gap") {
    Rng rng(21);
    int detected = 0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a(365), b(365);
        for (int i = 0; i < 365; ++i) {
            const double shared = std::abs(rng.gaussian());
            a[i] = shared + 0.05 * rng.gaussian();
            b[i] = shared + 0.15 + 0.05 * rng.gaussian();
        }
        if (dm_test(a, b).p_value < 0.05) ++detected;
    }
    CHECK(detected >= 19);  // near-certain detection at this effect size
}
