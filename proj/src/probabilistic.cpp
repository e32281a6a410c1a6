#include "mocf/probabilistic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mocf/errors.hpp"

namespace mocf {

ErrorModel estimate_error_model(const std::vector<Eigen::MatrixXd>& residuals) {
    if (residuals.size() < 2) throw ConfigError("error model needs at least 2 window days");
    const int k = static_cast<int>(residuals.front().cols());
    const int w = static_cast<int>(residuals.size());
    for (const auto& r : residuals)
        if (r.rows() != 24 || r.cols() != k)
            throw ConfigError("inconsistent residual matrix shapes");

    ErrorModel model;
    model.dim = k;
    model.mean = Eigen::MatrixXd::Zero(24, k);
    model.variance = Eigen::MatrixXd::Zero(24, k);
    for (int h = 0; h < 24; ++h) {
        for (const auto& r : residuals) model.mean.row(h) += r.row(h);
        model.mean.row(h) /= w;
        for (const auto& r : residuals) {
            Eigen::RowVectorXd c = r.row(h) - model.mean.row(h);
            model.variance.row(h) += c.cwiseProduct(c);
        }
        model.variance.row(h) /= (w - 1);
        for (int j = 0; j < k; ++j)
            if (model.variance(h, j) <= 0.0)
                throw NumericError("zero residual variance: hour " + std::to_string(h) +
                                   ", component " + std::to_string(j));
    }
    // Pool the standardized residuals of all hours so the simulation sample
    // is 24x larger than the window alone.
    model.standardized_pool.reserve(static_cast<size_t>(w) * 24);
    for (const auto& r : residuals)
        for (int h = 0; h < 24; ++h) {
            Eigen::VectorXd eta =
                (r.row(h) - model.mean.row(h)).transpose().cwiseQuotient(
                    model.variance.row(h).transpose().cwiseSqrt());
            model.standardized_pool.push_back(std::move(eta));
        }
    return model;
}

EmpiricalPriceDistribution empirical_percentiles(std::vector<double> sample) {
    if (sample.size() < 2) throw ConfigError("percentiles need at least 2 values");
    std::sort(sample.begin(), sample.end());
    EmpiricalPriceDistribution out;
    const double n1 = static_cast<double>(sample.size()) - 1.0;
    for (int i = 1; i <= 99; ++i) {
        const double pos = n1 * (i / 100.0);
        const size_t lo = static_cast<size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        const double hi_val = (lo + 1 < sample.size()) ? sample[lo + 1] : sample[lo];
        out.quantiles[i - 1] = sample[lo] + frac * (hi_val - sample[lo]);
    }
    return out;
}

EmpiricalPriceDistribution simulate_price_distribution(
    const Eigen::VectorXd& point_scores, int hour, const ErrorModel& model,
    const CurvePairCodec& codec, int num_simulations, Rng& rng, SimulationStats* stats) {
    if (num_simulations < 100) throw ConfigError("need at least 100 simulations");
    if (point_scores.size() != codec.dim())
        throw ConfigError("score/codec dimension mismatch");
    if (model.dim != codec.dim() &&
        (model.dim_supply < 0 || model.dim_supply > codec.k_supply ||
         model.dim - model.dim_supply > codec.k_demand))
        throw ConfigError("error-model/codec dimension mismatch");
    const Eigen::VectorXd mu = model.mean.row(hour).transpose();
    const Eigen::VectorXd sd = model.variance.row(hour).transpose().cwiseSqrt();
    const size_t pool = model.standardized_pool.size();

    std::vector<double> prices;
    prices.reserve(num_simulations);
    int discarded = 0;
    const long max_attempts = 20L * num_simulations;
    long attempts = 0;
    while (static_cast<int>(prices.size()) < num_simulations) {
        if (++attempts > max_attempts)
            throw NumericError("price simulation: too many non-crossing curve draws");
        const Eigen::VectorXd& eta = model.standardized_pool[rng.uniform_index(pool)];
        const Eigen::VectorXd eps = mu + sd.cwiseProduct(eta);
        Eigen::VectorXd scores = point_scores;
        if (model.dim == codec.dim()) {
            scores += eps;
        } else {
            // Perturb the leading components of each side only.
            scores.head(model.dim_supply) += eps.head(model.dim_supply);
            scores.segment(codec.k_supply, model.dim - model.dim_supply) +=
                eps.tail(model.dim - model.dim_supply);
        }
        auto [supply, demand] = codec.reconstruct(scores);
        try {
            prices.push_back(clear_on_grid(codec.grid(), supply, demand).price);
        } catch (const NumericError&) {
            ++discarded;
        }
    }
    if (stats) stats->discarded = discarded;
    if (discarded > num_simulations / 10)
        std::fprintf(stderr, "warning: %d of %ld simulated curve pairs did not cross\n",
                     discarded, attempts);
    return empirical_percentiles(std::move(prices));
}

EmpiricalPriceDistribution ensemble_vertical_average(
    const std::vector<EmpiricalPriceDistribution>& members) {
    if (members.empty()) throw ConfigError("ensemble of zero members");
    const double m = static_cast<double>(members.size());
    // Pooled knots of the member step cdfs; the average cdf at knot x is
    // (#pooled quantiles <= x) / (99 m). Percentile tau is recovered as the
    // smallest knot where the average cdf reaches tau.
    std::vector<double> knots;
    knots.reserve(members.size() * 99);
    for (const auto& d : members) knots.insert(knots.end(), d.quantiles.begin(), d.quantiles.end());
    std::sort(knots.begin(), knots.end());
    EmpiricalPriceDistribution out;
    for (int i = 1; i <= 99; ++i) {
        const double tau = i / 100.0;
        // cdf just after knot index j (0-based) is (j + 1) / (99 m).
        const size_t j = static_cast<size_t>(std::ceil(tau * 99.0 * m)) - 1;
        out.quantiles[i - 1] = knots[std::min(j, knots.size() - 1)];
    }
    return out;
}

// --- Postprocessing ----------------------------------------------------------

const char* postprocess_name(PostprocessMethod m) {
    switch (m) {
        case PostprocessMethod::Normal: return "normal";
        case PostprocessMethod::Conformal: return "conformal";
        case PostprocessMethod::Idr: return "idr";
        case PostprocessMethod::QuantileRegression: return "qrm";
    }
    return "?";
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("normal_quantile needs p in (0,1)");
    // Acklam's rational approximation.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    } else if (p <= phigh) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    } else {
        const double q = std::sqrt(-2 * std::log(1 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    // One Halley step against erfc for ~1e-15 accuracy.
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    return x - u / (1 + x * u / 2);
}

namespace {

EmpiricalPriceDistribution postprocess_normal(const std::vector<double>& err,
                                              double new_forecast) {
    const double n = static_cast<double>(err.size());
    double mean = 0.0;
    for (double e : err) mean += e;
    mean /= n;
    double var = 0.0;
    for (double e : err) var += (e - mean) * (e - mean);
    var /= (n - 1);
    const double sd = std::sqrt(var);
    if (sd <= 0.0) throw NumericError("normal postprocessing: zero residual spread");
    EmpiricalPriceDistribution out;
    for (int i = 1; i <= 99; ++i)
        out.quantiles[i - 1] = new_forecast + mean + sd * normal_quantile(i / 100.0);
    return out;
}

EmpiricalPriceDistribution postprocess_conformal(const std::vector<double>& err,
                                                 double new_forecast) {
    EmpiricalPriceDistribution out = empirical_percentiles(err);
    for (double& q : out.quantiles) q += new_forecast;
    return out;
}

EmpiricalPriceDistribution postprocess_idr(std::vector<double> f, std::vector<double> y,
                                           double new_forecast) {
    // Isotonic distributional regression: for each threshold y_(t), the
    // conditional cdf P(Y <= y_(t) | forecast) must be non-increasing in the
    // forecast; the fit is an antitonic L2 regression of the indicator.
    const size_t n = f.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return f[a] < f[b] || (f[a] == f[b] && y[a] < y[b]);
    });
    std::vector<double> fs(n), ys(n);
    for (size_t i = 0; i < n; ++i) {
        fs[i] = f[order[i]];
        ys[i] = y[order[i]];
    }
    std::vector<double> thresholds = ys;
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    // Interpolation weight of new_forecast between the sorted training
    // forecasts (clamped outside the range).
    size_t lo = 0;
    double w = 0.0;
    if (new_forecast <= fs.front()) {
        lo = 0;
        w = 0.0;
    } else if (new_forecast >= fs.back()) {
        lo = n - 1;
        w = 0.0;
    } else {
        while (lo + 1 < n && fs[lo + 1] <= new_forecast) ++lo;
        w = (fs[lo + 1] > fs[lo]) ? (new_forecast - fs[lo]) / (fs[lo + 1] - fs[lo]) : 0.0;
    }

    // cdf at new_forecast per threshold; antitonic fit via PAVA on the
    // reversed indicator sequence.
    std::vector<double> cdf(thresholds.size());
    std::vector<double> indicator(n);
    for (size_t t = 0; t < thresholds.size(); ++t) {
        for (size_t i = 0; i < n; ++i) indicator[n - 1 - i] = (ys[i] <= thresholds[t]) ? 1.0 : 0.0;
        std::vector<double> fit = pava_non_decreasing(indicator);
        const double at_lo = fit[n - 1 - lo];
        const double at_hi = (lo + 1 < n) ? fit[n - 2 - lo] : at_lo;
        cdf[t] = (1.0 - w) * at_lo + w * at_hi;
    }
    EmpiricalPriceDistribution out;
    for (int i = 1; i <= 99; ++i) {
        const double tau = i / 100.0;
        size_t t = 0;
        while (t + 1 < thresholds.size() && cdf[t] < tau) ++t;
        out.quantiles[i - 1] = thresholds[t];
    }
    return out;
}

EmpiricalPriceDistribution postprocess_qrm(const std::vector<double>& f,
                                           const std::vector<double>& y, double new_forecast) {
    const size_t n = f.size();
    double fm = 0.0;
    for (double v : f) fm += v;
    fm /= static_cast<double>(n);
    double fsd = 0.0;
    for (double v : f) fsd += (v - fm) * (v - fm);
    fsd = std::sqrt(fsd / static_cast<double>(n));
    if (fsd == 0.0) fsd = 1.0;
    EmpiricalPriceDistribution out;
    std::vector<double> err(n);
    for (size_t i = 0; i < n; ++i) err[i] = y[i] - f[i];
    std::sort(err.begin(), err.end());
    for (int p = 1; p <= 99; ++p) {
        const double tau = p / 100.0;
        // Subgradient descent on the pinball loss of y on (1, standardized f).
        // Warm start: unit slope, intercept at the residual quantile.
        double b0 = fm + err[std::min(n - 1, static_cast<size_t>(tau * n))];
        double b1 = fsd;
        double prev0 = b0, prev1 = b1;
        const int max_iter = 10000;
        for (int it = 1; it <= max_iter; ++it) {
            double g0 = 0.0, g1 = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const double z = (f[i] - fm) / fsd;
                const double r = y[i] - b0 - b1 * z;
                const double s = (r > 0.0) ? -tau : (r < 0.0 ? 1.0 - tau : 0.0);
                g0 += s;
                g1 += s * z;
            }
            g0 /= static_cast<double>(n);
            g1 /= static_cast<double>(n);
            const double step = 1.0 / std::sqrt(static_cast<double>(it));
            b0 -= step * g0;
            b1 -= step * g1;
            if (it % 50 == 0) {
                if (std::abs(b0 - prev0) < 1e-6 && std::abs(b1 - prev1) < 1e-6) break;
                prev0 = b0;
                prev1 = b1;
            }
        }
        out.quantiles[p - 1] = b0 + b1 * (new_forecast - fm) / fsd;
    }
    // Quantile crossings from independent per-level fits are repaired by
    // sorting, which is the standard rearrangement fix.
    std::sort(out.quantiles.begin(), out.quantiles.end());
    return out;
}

}  // namespace

EmpiricalPriceDistribution postprocess_point_forecast(PostprocessMethod method,
                                                      const std::vector<double>& calib_forecasts,
                                                      const std::vector<double>& calib_actuals,
                                                      double new_forecast) {
    if (calib_forecasts.size() != calib_actuals.size() || calib_forecasts.size() < 10)
        throw ConfigError("postprocessing needs >= 10 calibration pairs");
    switch (method) {
        case PostprocessMethod::Normal:
        case PostprocessMethod::Conformal: {
            std::vector<double> err(calib_forecasts.size());
            for (size_t i = 0; i < err.size(); ++i) err[i] = calib_actuals[i] - calib_forecasts[i];
            return method == PostprocessMethod::Normal
                       ? postprocess_normal(err, new_forecast)
                       : postprocess_conformal(err, new_forecast);
        }
        case PostprocessMethod::Idr:
            return postprocess_idr(calib_forecasts, calib_actuals, new_forecast);
        case PostprocessMethod::QuantileRegression:
            return postprocess_qrm(calib_forecasts, calib_actuals, new_forecast);
    }
    throw ConfigError("unknown postprocessing method");
}

}  // namespace mocf
