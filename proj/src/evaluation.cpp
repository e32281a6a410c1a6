#include "mocf/evaluation.hpp"

#include <cmath>
#include <limits>

#include "mocf/errors.hpp"

namespace mocf {

PointMetrics point_metrics(const std::vector<double>& forecasts,
                           const std::vector<double>& actuals,
                           const std::vector<double>& naive_forecasts) {
    const size_t n = forecasts.size();
    if (n == 0 || actuals.size() != n) throw ConfigError("metrics: size mismatch");
    if (!naive_forecasts.empty() && naive_forecasts.size() != n)
        throw ConfigError("metrics: naive benchmark size mismatch");
    PointMetrics m;
    double naive_mae = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double e = actuals[i] - forecasts[i];
        m.mae += std::abs(e);
        m.rmse += e * e;
        if (!naive_forecasts.empty()) naive_mae += std::abs(actuals[i] - naive_forecasts[i]);
    }
    m.mae /= static_cast<double>(n);
    m.rmse = std::sqrt(m.rmse / static_cast<double>(n));
    naive_mae /= static_cast<double>(n);
    if (naive_forecasts.empty()) {
        m.rmae = std::numeric_limits<double>::quiet_NaN();
    } else {
        if (naive_mae == 0.0) throw NumericError("rMAE undefined: naive MAE is zero");
        m.rmae = m.mae / naive_mae;
    }
    return m;
}

double pinball_loss(double quantile_value, double actual, double tau) {
    const double d = actual - quantile_value;
    return d >= 0.0 ? tau * d : (tau - 1.0) * d;
}

double crps(const EmpiricalPriceDistribution& dist, double actual) {
    double sum = 0.0;
    for (int i = 1; i <= 99; ++i) sum += pinball_loss(dist.quantile(i), actual, i / 100.0);
    return 2.0 * sum / 99.0;
}

double RSquaredAccumulator::value() const {
    if (count < 2) return std::numeric_limits<double>::quiet_NaN();
    const double mean = sum_actual / static_cast<double>(count);
    const double sst = sum_actual_sq - static_cast<double>(count) * mean * mean;
    if (sst <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return 1.0 - sum_sq_err / sst;
}

double average_r_squared(const EvaluationGrid& grid,
                         const std::vector<RSquaredAccumulator>& per_point) {
    if (static_cast<int>(per_point.size()) != grid.size())
        throw ConfigError("R^2 accumulator/grid size mismatch");
    const Eigen::VectorXd w = grid.trapezoid_weights();
    double num = 0.0, den = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
        const double r2 = per_point[i].value();
        if (std::isnan(r2)) continue;  // constant actuals at this price
        num += w(i) * r2;
        den += w(i);
    }
    if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return num / den;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

DmResult dm_test(const std::vector<double>& loss_a, const std::vector<double>& loss_b) {
    const size_t n = loss_a.size();
    if (n < 2 || loss_b.size() != n) throw ConfigError("DM test: need matched loss series");
    double mean = 0.0;
    for (size_t i = 0; i < n; ++i) mean += loss_a[i] - loss_b[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = loss_a[i] - loss_b[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(n - 1);
    if (var == 0.0) throw NumericError("DM test degenerate: zero variance of loss differentials");
    DmResult r;
    r.statistic = mean / std::sqrt(var / static_cast<double>(n));
    r.p_value = normal_cdf(r.statistic);  // H1: a has lower loss
    return r;
}

double pit_value(const EmpiricalPriceDistribution& dist, double actual) {
    const auto& q = dist.quantiles;
    double u;
    if (actual < q[0]) {
        u = 0.005;  // half-percentile resolution below the lowest quantile
    } else if (actual > q[98]) {
        u = 0.995;
    } else if (actual == q[0]) {
        u = 0.01;
    } else {
        int i = 0;
        while (i + 1 < 99 && q[i + 1] < actual) ++i;
        const double span = q[i + 1] - q[i];
        const double frac = span > 0.0 ? (actual - q[i]) / span : 0.0;
        u = (i + 1 + frac) / 100.0;
    }
    return std::min(0.995, std::max(0.005, u));
}

}  // namespace mocf
