#pragma once

// Forecast evaluation: point metrics, pinball-based CRPS, curve R^2 across
// the price grid, the Diebold-Mariano test and PIT values.

#include <Eigen/Dense>
#include <vector>

#include "mocf/probabilistic.hpp"
#include "mocf/smoothing.hpp"

namespace mocf {

struct PointMetrics {
    double mae = 0.0;
    double rmse = 0.0;
    double rmae = 0.0;  // MAE relative to the naive benchmark's MAE
};

// naive_errors may be empty, in which case rmae is NaN.
PointMetrics point_metrics(const std::vector<double>& forecasts,
                           const std::vector<double>& actuals,
                           const std::vector<double>& naive_forecasts);

// CRPS approximated by the average pinball loss over the 99 percentiles:
// (2/99) sum_i pinball_{i/100}(q_i, y).
double crps(const EmpiricalPriceDistribution& dist, double actual);

double pinball_loss(double quantile_value, double actual, double tau);

// R^2 between forecast and actual values at one grid point, computed from
// accumulated sums; callers aggregate sums over the test set per grid point.
struct RSquaredAccumulator {
    long count = 0;
    double sum_sq_err = 0.0;
    double sum_actual = 0.0;
    double sum_actual_sq = 0.0;

    void add(double forecast, double actual) {
        ++count;
        const double e = actual - forecast;
        sum_sq_err += e * e;
        sum_actual += actual;
        sum_actual_sq += actual * actual;
    }
    // 1 - SSE / SST; NaN when the actuals are constant.
    double value() const;
};

// Average R^2 across the grid via trapezoidal quadrature (normalized weights).
double average_r_squared(const EvaluationGrid& grid,
                         const std::vector<RSquaredAccumulator>& per_point);

// Diebold-Mariano: loss differential d_t = loss_a(t) - loss_b(t); returns the
// one-sided p-value of H1 "a is more accurate than b" under the normal
// approximation of mean(d) / sqrt(var(d)/T).
struct DmResult {
    double statistic = 0.0;
    double p_value = 1.0;
};
DmResult dm_test(const std::vector<double>& loss_a, const std::vector<double>& loss_b);

// Probability integral transform of `actual` under the 99-quantile
// distribution, linearly interpolated and clamped to [0.005, 0.995].
double pit_value(const EmpiricalPriceDistribution& dist, double actual);

// Standard normal cdf.
double normal_cdf(double x);

}  // namespace mocf
