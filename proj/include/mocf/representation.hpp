#pragma once

// Finite-dimensional curve representations: FPCA (mean + orthonormal
// components under the grid-weighted inner product, Karhunen-Loeve
// truncation), the Ziel-Steinert first-difference benchmark, and isotonic
// post-processing of reconstructed curves.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mocf/smoothing.hpp"

namespace mocf {

struct FpcaBasis {
    Side side = Side::Supply;
    EvaluationGrid grid;
    Eigen::VectorXd mean;          // G
    Eigen::MatrixXd components;    // G x K, orthonormal under the grid inner product
    Eigen::VectorXd eigenvalues;   // K, non-negative, non-increasing
    std::vector<double> explained_ratio;
    double total_variance = 0.0;   // trace of the covariance (all modes)

    int num_components() const { return static_cast<int>(components.cols()); }
};

// curves: T x G matrix (one smoothed curve per row). Components/eigenvalues
// come from the eigen-decomposition of the sample covariance under the
// trapezoid-weighted inner product; all modes up to max_components are kept
// (truncation to K happens at projection).
FpcaBasis fit_fpca(const Eigen::MatrixXd& curves, Side side, const EvaluationGrid& grid,
                   int max_components);

// K = max(K_knee, K_99): smallest K reaching 99% cumulative explained
// variance combined with the Kneedle elbow of the scree curve (sensitivity 1,
// decreasing-convex configuration).
int select_num_components(const std::vector<double>& eigenvalues, double threshold = 0.99);

// Scores of a curve on the first k components (grid inner products after
// mean subtraction).
Eigen::VectorXd fpca_project(const FpcaBasis& basis, const Eigen::VectorXd& curve, int k);
Eigen::VectorXd fpca_reconstruct(const FpcaBasis& basis, const Eigen::VectorXd& scores);

// --- Ziel-Steinert transformation ------------------------------------------

struct ZstBasis {
    Side side = Side::Supply;
    EvaluationGrid grid;
    std::vector<double> price_grid;  // K non-uniform prices from the mean price curve
    Eigen::VectorXd mean_curve;      // mean quantity curve on the evaluation grid
    double anchor = 0.0;             // mean-curve value at the domain start
};

// Builds the K-point price grid by mapping an equispaced volume grid through
// the mean price curve (the inverse of the mean quantity curve).
ZstBasis fit_zst(const Eigen::MatrixXd& curves, Side side, const EvaluationGrid& grid, int k);

// First differences of the curve at the grid prices, anchored at the
// training-mean value at p_min; exact inverse at grid prices.
Eigen::VectorXd zst_project(const ZstBasis& basis, const Eigen::VectorXd& curve);
// Cumulative sum at the grid prices, interpolated in between following the
// mean quantity curve's shape.
Eigen::VectorXd zst_reconstruct(const ZstBasis& basis, const Eigen::VectorXd& diffs);

// --- Pool-adjacent-violators -----------------------------------------------

// L2 projection onto non-decreasing vectors, equal weights, O(n).
std::vector<double> pava_non_decreasing(const std::vector<double>& y);

// Monotone per curve side: non-decreasing for supply, non-increasing for demand.
SmoothCurve enforce_monotonicity(const SmoothCurve& curve);
void enforce_monotonicity_inplace(Eigen::VectorXd& values, Side side);

// --- Paired supply/demand representation ------------------------------------

// Joint representation of one hour's (supply, demand) pair: K_s supply scores
// followed by K_d demand scores.
struct CurvePairCodec {
    enum class Kind { Fpca, Zst } kind = Kind::Fpca;
    FpcaBasis fpca_supply, fpca_demand;
    ZstBasis zst_supply, zst_demand;
    int k_supply = 0;
    int k_demand = 0;

    int dim() const { return k_supply + k_demand; }
    const EvaluationGrid& grid() const {
        return kind == Kind::Fpca ? fpca_supply.grid : zst_supply.grid;
    }
    Eigen::VectorXd project(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand) const;
    // Reconstructed, monotonized curve pair.
    std::pair<Eigen::VectorXd, Eigen::VectorXd> reconstruct(const Eigen::VectorXd& scores) const;
    // Largest absolute monotonicity violation removed by PAVA, for logging.
    static double monotonicity_deviation(const Eigen::VectorXd& raw, const Eigen::VectorXd& fixed);
};

// Export of a fitted basis (mean, components, eigenvalues) for inspection.
void export_fpca_basis_json(const FpcaBasis& basis, const std::string& path);

// Linear interpolation of grid values at an arbitrary price (clamped to the
// grid ends).
double interp_on_grid(const EvaluationGrid& grid, const Eigen::VectorXd& values, double price);

}  // namespace mocf
