#pragma once

// L1-regularized linear regression: LARS-lasso homotopy path with AIC
// lambda selection, coordinate-descent fitting, and the variance-stabilizing
// price transform.

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

namespace mocf {

struct DesignMatrix {
    Eigen::MatrixXd x;                      // n x p
    std::vector<std::string> column_names;  // unique
    // Source day offset of each column relative to the forecast day: 0 for
    // exogenous lag-0 and dummies, >= 1 for lagged targets/exogenous. Used by
    // the leakage audit.
    std::vector<int> column_day_lags;
};

struct LassoFit {
    Eigen::VectorXd coefficients;  // original (unstandardized) scale
    double intercept = 0.0;
    double lambda = 0.0;
    Eigen::VectorXd center;  // per-column standardization parameters
    Eigen::VectorXd scale;
    std::vector<std::string> column_names;  // optional, for coefficient dumps

    double predict(const Eigen::VectorXd& features) const {
        return coefficients.dot(features) + intercept;
    }
};

inline constexpr double kLambdaAllZero = std::numeric_limits<double>::infinity();

// Objective: (1/2n) ||y - X b - b0||^2 + lambda ||b||_1 on internally
// standardized columns with an unpenalized intercept.

// LARS-lasso path knots with AIC(lambda) = n ln(RSS/n) + 2 df,
// df = active-set size. Ties resolve to the larger lambda (sparser model).
// Constant response returns kLambdaAllZero.
double lars_lambda_by_aic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

// Cyclic coordinate descent; converges when the largest coefficient change
// in a sweep is below 1e-8 (at most 1e5 sweeps).
LassoFit fit_lasso_cd(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda);

// Path knots (lambda values, largest first), exposed for the path-equivalence
// tests.
std::vector<double> lars_path_lambdas(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

// --- Variance-stabilizing transform ----------------------------------------

struct AsinhScaling {
    double median = 0.0;
    double mad = 1.0;

    double forward(double p) const;
    double inverse(double t) const;

    // Median / median-absolute-deviation of a sample; throws on zero MAD.
    static AsinhScaling fit(const std::vector<double>& prices);
};

}  // namespace mocf
