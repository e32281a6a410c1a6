#pragma once

// Probabilistic forecasting: residual bootstrap in coefficient space for the
// curve models, empirical price distributions (99 percentiles), vertical cdf
// averaging across calibration windows, and distributional postprocessing of
// point price forecasts (normal, conformal, isotonic distributional
// regression, quantile regression).

#include <Eigen/Dense>
#include <vector>

#include "mocf/representation.hpp"
#include "mocf/rng.hpp"
#include "mocf/smoothing.hpp"

namespace mocf {

// 99 percentile values (1%..99%) of a price distribution.
struct EmpiricalPriceDistribution {
    std::array<double, 99> quantiles{};

    double quantile(int percent) const { return quantiles[percent - 1]; }
};

// Per-hour mean/variance of the coefficient residuals plus the pooled
// standardized residual sample shared by all 24 hours.
struct ErrorModel {
    int dim = 0;
    // When dim is smaller than the codec's score dimension (dynamic K shrank
    // the residual window), dim_supply says how many leading entries perturb
    // the supply scores; the remainder perturbs the leading demand scores.
    // -1 means dim matches the codec exactly.
    int dim_supply = -1;
    Eigen::MatrixXd mean;      // 24 x K
    Eigen::MatrixXd variance;  // 24 x K (per-component, diagonal scaling)
    std::vector<Eigen::VectorXd> standardized_pool;  // W*24 draws of length K
};

// residuals: one 24 x K matrix per window day (actual minus forecast scores).
ErrorModel estimate_error_model(const std::vector<Eigen::MatrixXd>& residuals);

struct SimulationStats {
    int discarded = 0;  // draws rejected because the simulated curves did not cross
};

// Draws N coefficient errors for hour `hour`, perturbs the point forecast,
// reconstructs both curves and clears each simulated market; returns the 99
// empirical percentiles of the clearing price. Non-crossing draws are
// discarded and redrawn (hard cap, then NumericError).
EmpiricalPriceDistribution simulate_price_distribution(
    const Eigen::VectorXd& point_scores, int hour, const ErrorModel& model,
    const CurvePairCodec& codec, int num_simulations, Rng& rng,
    SimulationStats* stats = nullptr);

// Vertical average of the members' empirical step cdfs: percentiles are
// re-extracted from the pooled quantile multiset via cdf inversion.
EmpiricalPriceDistribution ensemble_vertical_average(
    const std::vector<EmpiricalPriceDistribution>& members);

// Order-statistic percentiles (linear interpolation) of a raw sample.
EmpiricalPriceDistribution empirical_percentiles(std::vector<double> sample);

// --- Point-forecast postprocessing ------------------------------------------

enum class PostprocessMethod { Normal, Conformal, Idr, QuantileRegression };

const char* postprocess_name(PostprocessMethod m);

// Builds a predictive distribution around `new_forecast` from calibration
// pairs (point forecast, realized price).
//  - Normal: Gaussian with the residual mean/sd.
//  - Conformal: new_forecast + empirical residual quantiles.
//  - Idr: isotonic distributional regression of actuals on forecasts.
//  - QuantileRegression: per-percentile pinball regression on (1, forecast),
//    fitted by subgradient descent.
EmpiricalPriceDistribution postprocess_point_forecast(
    PostprocessMethod method, const std::vector<double>& calib_forecasts,
    const std::vector<double>& calib_actuals, double new_forecast);

// Standard normal quantile function (Acklam's rational approximation with a
// Halley refinement step).
double normal_quantile(double p);

}  // namespace mocf
