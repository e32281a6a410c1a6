#pragma once

// Kernel pre-smoothing of step curves on a fixed price grid:
// Nadaraya-Watson with a Gaussian kernel, bandwidth chosen by generalized
// cross-validation.

#include <Eigen/Dense>
#include <vector>

#include "mocf/curves.hpp"

namespace mocf {

struct EvaluationGrid {
    std::vector<double> prices;  // uniform, sorted, endpoints = domain bounds

    static EvaluationGrid uniform(double p_min, double p_max, int points);

    int size() const { return static_cast<int>(prices.size()); }
    double spacing() const { return prices[1] - prices[0]; }
    // Trapezoidal quadrature weights for the grid inner product.
    Eigen::VectorXd trapezoid_weights() const;
};

struct SmoothCurve {
    Side side = Side::Supply;
    std::vector<double> values;  // length = grid size

    Eigen::Map<const Eigen::VectorXd> vec() const {
        return {values.data(), static_cast<Eigen::Index>(values.size())};
    }
};

// Evaluates the step curve at every grid point.
std::vector<double> evaluate_on_grid(const StepCurve& curve, const EvaluationGrid& grid);

// Gaussian smoother matrix L_h: row i holds the normalized kernel weights of
// grid point i. The same matrix applies to every curve sharing the grid.
Eigen::MatrixXd smoother_matrix(const EvaluationGrid& grid, double bandwidth);

SmoothCurve nadaraya_watson(const std::vector<double>& raw, Side side,
                            const EvaluationGrid& grid, double bandwidth);

// Applies a precomputed smoother matrix (fast path for many curves).
SmoothCurve apply_smoother(const Eigen::MatrixXd& smoother, const std::vector<double>& raw,
                           Side side);

// GCV(h) = G * RSS(h) / (G - tr(L_h))^2. Returns the argmin candidate;
// ties resolve to the smallest bandwidth.
double select_bandwidth_gcv(const std::vector<double>& raw, const EvaluationGrid& grid,
                            const std::vector<double>& candidates);

// Default candidate ladder: log-spaced values in [0.5, 50] EUR/MWh.
std::vector<double> default_bandwidth_candidates(int count = 10);

// Clearing of a grid-sampled (piecewise linear) curve pair: the price where
// demand minus supply first changes sign, linearly interpolated inside the
// bracketing cell. Throws NumericError when the curves do not cross.
ClearingPoint clear_on_grid(const EvaluationGrid& grid, const Eigen::VectorXd& supply,
                            const Eigen::VectorXd& demand);

}  // namespace mocf
