#include "mocf/smoothing.hpp"

#include <cmath>
#include <limits>

#include "mocf/errors.hpp"

namespace mocf {

EvaluationGrid EvaluationGrid::uniform(double p_min, double p_max, int points) {
    if (points < 50) throw ConfigError("evaluation grid needs at least 50 points");
    if (!(p_min < p_max)) throw ConfigError("grid requires p_min < p_max");
    EvaluationGrid g;
    g.prices.resize(points);
    const double step = (p_max - p_min) / (points - 1);
    for (int i = 0; i < points; ++i) g.prices[i] = p_min + step * i;
    g.prices.back() = p_max;
    return g;
}

Eigen::VectorXd EvaluationGrid::trapezoid_weights() const {
    const int n = size();
    Eigen::VectorXd w(n);
    const double h = spacing();
    w.setConstant(h);
    w(0) = w(n - 1) = h / 2.0;
    return w;
}

std::vector<double> evaluate_on_grid(const StepCurve& curve, const EvaluationGrid& grid) {
    std::vector<double> out(grid.prices.size());
    for (size_t i = 0; i < grid.prices.size(); ++i) out[i] = curve.value_at(grid.prices[i]);
    return out;
}

Eigen::MatrixXd smoother_matrix(const EvaluationGrid& grid, double bandwidth) {
    if (bandwidth <= 0.0) throw ConfigError("bandwidth must be > 0");
    const int n = grid.size();
    Eigen::MatrixXd L(n, n);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            const double u = (grid.prices[i] - grid.prices[j]) / bandwidth;
            const double k = std::exp(-0.5 * u * u);
            L(i, j) = k;
            sum += k;
        }
        L.row(i) /= sum;
    }
    return L;
}

SmoothCurve apply_smoother(const Eigen::MatrixXd& smoother, const std::vector<double>& raw,
                           Side side) {
    Eigen::Map<const Eigen::VectorXd> x(raw.data(), static_cast<Eigen::Index>(raw.size()));
    Eigen::VectorXd y = smoother * x;
    SmoothCurve out;
    out.side = side;
    out.values.assign(y.data(), y.data() + y.size());
    return out;
}

SmoothCurve nadaraya_watson(const std::vector<double>& raw, Side side,
                            const EvaluationGrid& grid, double bandwidth) {
    return apply_smoother(smoother_matrix(grid, bandwidth), raw, side);
}

double select_bandwidth_gcv(const std::vector<double>& raw, const EvaluationGrid& grid,
                            const std::vector<double>& candidates) {
    if (candidates.size() < 2) throw ConfigError("GCV needs at least 2 bandwidth candidates");
    const int n = grid.size();
    Eigen::Map<const Eigen::VectorXd> x(raw.data(), static_cast<Eigen::Index>(raw.size()));

    double best_h = 0.0;
    double best_score = std::numeric_limits<double>::infinity();
    bool any_valid = false;
    for (double h : candidates) {
        if (h <= 0.0) throw ConfigError("bandwidth candidates must be > 0");
        const Eigen::MatrixXd L = smoother_matrix(grid, h);
        const double tr = L.trace();
        if (tr >= static_cast<double>(n)) continue;  // degenerate smoother
        const double rss = (x - L * x).squaredNorm();
        const double denom = static_cast<double>(n) - tr;
        const double score = static_cast<double>(n) * rss / (denom * denom);
        any_valid = true;
        if (score < best_score || (score == best_score && h < best_h)) {
            best_score = score;
            best_h = h;
        }
    }
    if (!any_valid)
        throw NumericError("GCV: every candidate bandwidth yields a degenerate smoother");
    return best_h;
}

ClearingPoint clear_on_grid(const EvaluationGrid& grid, const Eigen::VectorXd& supply,
                            const Eigen::VectorXd& demand) {
    const int n = grid.size();
    if (supply.size() != n || demand.size() != n)
        throw ConfigError("curve/grid size mismatch in clearing");
    double fa = demand(0) - supply(0);
    if (fa == 0.0) return {grid.prices[0], supply(0)};
    if (fa < 0.0) throw NumericError("curves do not cross: excess supply at the domain start");
    for (int i = 1; i < n; ++i) {
        const double fb = demand(i) - supply(i);
        if (fb > 0.0) {
            fa = fb;
            continue;
        }
        // Sign change (or exact zero) inside [i-1, i]: linear interpolation.
        const double t = (fa == fb) ? 0.0 : fa / (fa - fb);
        const double price = grid.prices[i - 1] + t * (grid.prices[i] - grid.prices[i - 1]);
        const double qty = supply(i - 1) + t * (supply(i) - supply(i - 1));
        return {price, qty};
    }
    throw NumericError("curves do not cross: excess demand over the whole domain");
}

std::vector<double> default_bandwidth_candidates(int count) {
    std::vector<double> out(count);
    const double lo = std::log(0.5), hi = std::log(50.0);
    for (int i = 0; i < count; ++i)
        out[i] = std::exp(lo + (hi - lo) * i / (count - 1));
    return out;
}

}  // namespace mocf
