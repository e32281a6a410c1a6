#include "mocf/regression.hpp"

#include <algorithm>
#include <cmath>

#include "mocf/errors.hpp"

namespace mocf {

namespace {

struct Standardized {
    Eigen::MatrixXd x;       // zero-variance columns left as zeros
    Eigen::VectorXd center;
    Eigen::VectorXd scale;   // 0 marks a constant column
    Eigen::VectorXd y;       // centered response
    double y_mean = 0.0;
};

Standardized standardize(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    Standardized s;
    const Eigen::Index n = x.rows(), p = x.cols();
    s.center = x.colwise().mean();
    s.x.resize(n, p);
    s.scale.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        Eigen::VectorXd c = x.col(j).array() - s.center(j);
        const double sd = std::sqrt(c.squaredNorm() / static_cast<double>(n));
        s.scale(j) = sd;
        s.x.col(j) = sd > 0.0 ? Eigen::VectorXd(c / sd) : Eigen::VectorXd::Zero(n);
    }
    s.y_mean = y.mean();
    s.y = y.array() - s.y_mean;
    return s;
}

struct PathKnot {
    double lambda;
    Eigen::VectorXd beta;  // standardized scale
};

// Lasso homotopy: between events the active-set solution is linear in
// lambda; events are joins (an inactive correlation reaches lambda) and
// drops (an active coefficient crosses zero).
std::vector<PathKnot> lars_path(const Eigen::MatrixXd& xs, const Eigen::VectorXd& yc) {
    const Eigen::Index n = xs.rows(), p = xs.cols();
    std::vector<PathKnot> knots;

    Eigen::VectorXd c = xs.transpose() * yc / static_cast<double>(n);
    double lambda = c.cwiseAbs().maxCoeff();
    knots.push_back({lambda, Eigen::VectorXd::Zero(p)});
    if (lambda <= 0.0) return knots;

    std::vector<Eigen::Index> active;
    std::vector<double> signs;
    std::vector<bool> is_active(static_cast<size_t>(p), false);
    {
        Eigen::Index j0 = 0;
        c.cwiseAbs().maxCoeff(&j0);
        active.push_back(j0);
        signs.push_back(c(j0) > 0 ? 1.0 : -1.0);
        is_active[static_cast<size_t>(j0)] = true;
    }

    const int max_steps = static_cast<int>(8 * p + 16);
    for (int step = 0; step < max_steps; ++step) {
        const Eigen::Index a = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd xa(n, a);
        Eigen::VectorXd sv(a);
        for (Eigen::Index i = 0; i < a; ++i) {
            xa.col(i) = xs.col(active[static_cast<size_t>(i)]);
            sv(i) = signs[static_cast<size_t>(i)];
        }
        Eigen::MatrixXd gram = xa.transpose() * xa;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
        if (ldlt.info() != Eigen::Success) break;
        const Eigen::VectorXd b0 = ldlt.solve(xa.transpose() * yc);
        const Eigen::VectorXd dir = ldlt.solve(sv) * static_cast<double>(n);
        if (!b0.allFinite() || !dir.allFinite()) break;

        // beta_A(l) = b0 - l * dir; inactive correlations c_j(l) = aj + l*bj
        const Eigen::VectorXd xty = xs.transpose() * yc / static_cast<double>(n);
        const Eigen::VectorXd xtxb0 = xs.transpose() * (xa * b0) / static_cast<double>(n);
        const Eigen::VectorXd xtxd = xs.transpose() * (xa * dir) / static_cast<double>(n);

        double next_lambda = 0.0;
        int event_join = -1, event_drop = -1;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (is_active[static_cast<size_t>(j)]) continue;
            const double aj = xty(j) - xtxb0(j);
            const double bj = xtxd(j);
            for (const double cand : {aj / (1.0 - bj), -aj / (1.0 + bj)}) {
                if (std::isfinite(cand) && cand > 1e-12 && cand < lambda - 1e-12 &&
                    cand > next_lambda) {
                    next_lambda = cand;
                    event_join = static_cast<int>(j);
                    event_drop = -1;
                }
            }
        }
        for (Eigen::Index i = 0; i < a; ++i) {
            if (std::abs(dir(i)) < 1e-14) continue;
            const double cand = b0(i) / dir(i);
            if (cand > 1e-12 && cand < lambda - 1e-12 && cand > next_lambda) {
                next_lambda = cand;
                event_drop = static_cast<int>(i);
                event_join = -1;
            }
        }

        Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
        for (Eigen::Index i = 0; i < a; ++i)
            beta(active[static_cast<size_t>(i)]) = b0(i) - next_lambda * dir(i);

        if (event_join < 0 && event_drop < 0) {
            // path completes at the unpenalized solution
            knots.push_back({0.0, beta});
            break;
        }
        knots.push_back({next_lambda, beta});
        lambda = next_lambda;

        if (event_join >= 0) {
            // recompute the sign from the correlation at the knot
            const Eigen::VectorXd r = yc - xs * beta;
            const double cj = xs.col(event_join).dot(r);
            active.push_back(event_join);
            signs.push_back(cj > 0 ? 1.0 : -1.0);
            is_active[static_cast<size_t>(event_join)] = true;
        } else {
            is_active[static_cast<size_t>(active[static_cast<size_t>(event_drop)])] = false;
            active.erase(active.begin() + event_drop);
            signs.erase(signs.begin() + event_drop);
        }
        if (active.empty()) break;
    }
    return knots;
}

}  // namespace

std::vector<double> lars_path_lambdas(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Standardized s = standardize(x, y);
    std::vector<double> out;
    for (const auto& k : lars_path(s.x, s.y)) out.push_back(k.lambda);
    return out;
}

double lars_lambda_by_aic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Eigen::Index n = x.rows();
    if (n < 2) throw NumericError("LARS needs at least 2 observations");
    const Standardized s = standardize(x, y);
    if (s.y.cwiseAbs().maxCoeff() == 0.0) return kLambdaAllZero;

    const auto knots = lars_path(s.x, s.y);
    double best_lambda = knots.front().lambda;
    double best_aic = std::numeric_limits<double>::infinity();
    for (const auto& k : knots) {
        const double rss = std::max((s.y - s.x * k.beta).squaredNorm(), 1e-300);
        const int df = static_cast<int>((k.beta.array().abs() > 0.0).count());
        const double aic =
            static_cast<double>(n) * std::log(rss / static_cast<double>(n)) + 2.0 * df;
        // strict improvement required: ties keep the larger (sparser) lambda
        if (aic < best_aic - 1e-12) {
            best_aic = aic;
            best_lambda = k.lambda;
        }
    }
    return best_lambda;
}

LassoFit fit_lasso_cd(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
    if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
    const Eigen::Index n = x.rows(), p = x.cols();
    const Standardized s = standardize(x, y);

    LassoFit fit;
    fit.lambda = lambda;
    fit.center = s.center;
    fit.scale = s.scale;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    if (lambda != kLambdaAllZero) {
        Eigen::VectorXd z(p);  // (1/n) x_j' x_j, = 1 for non-constant columns
        for (Eigen::Index j = 0; j < p; ++j)
            z(j) = s.x.col(j).squaredNorm() / static_cast<double>(n);

        // Solve on a unit-scale response so the convergence tolerance is
        // relative; scaling y and lambda by the same factor leaves the
        // minimizer unchanged up to that factor.
        double y_scale = std::sqrt(s.y.squaredNorm() / static_cast<double>(n));
        if (!(y_scale > 0.0)) y_scale = 1.0;
        const double lam = lambda / y_scale;

        const Eigen::VectorXd ys = s.y / y_scale;
        Eigen::VectorXd residual = ys;
        constexpr int kMaxSweeps = 100000;
        constexpr double kTol = 1e-8;
        bool converged = false;
        double max_delta = 0.0;
        double prev_objective = std::numeric_limits<double>::infinity();
        for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
            max_delta = 0.0;
            for (Eigen::Index j = 0; j < p; ++j) {
                if (z(j) <= 0.0) continue;
                const double rho =
                    s.x.col(j).dot(residual) / static_cast<double>(n) + z(j) * beta(j);
                const double soft =
                    std::copysign(std::max(std::abs(rho) - lam, 0.0), rho);
                const double updated = soft / z(j);
                const double delta = updated - beta(j);
                if (delta != 0.0) {
                    residual -= delta * s.x.col(j);
                    beta(j) = updated;
                    max_delta = std::max(max_delta, std::abs(delta));
                }
            }
            if (max_delta < kTol) {
                converged = true;
                break;
            }
            // Near-collinear columns create flat directions along which sweeps
            // reshuffle coefficients with negligible effect on the fit.  Stop
            // once the objective has stalled over a window of sweeps, or once
            // the duality gap certifies the iterate as essentially optimal.
            if (sweep % 100 == 99) {
                const double objective = residual.squaredNorm() / (2.0 * n) +
                                         lam * beta.cwiseAbs().sum();
                if (prev_objective - objective <=
                    1e-9 * std::max(1.0, std::abs(objective))) {
                    converged = true;
                    break;
                }
                prev_objective = objective;
                if (lam > 0.0) {
                    const double grad_inf =
                        (s.x.transpose() * residual).cwiseAbs().maxCoeff() /
                        static_cast<double>(n);
                    const Eigen::VectorXd theta =
                        residual * std::min(1.0, lam / grad_inf);
                    const double dual = (ys.squaredNorm() - (ys - theta).squaredNorm()) /
                                        (2.0 * n);
                    if (objective - dual <= 1e-6) {
                        converged = true;
                        break;
                    }
                }
            }
        }
        if (!converged)
            throw NumericError("coordinate descent did not converge; last sweep max delta = " +
                               std::to_string(max_delta));
        beta *= y_scale;
    }

    fit.coefficients.resize(p);
    for (Eigen::Index j = 0; j < p; ++j)
        fit.coefficients(j) = s.scale(j) > 0.0 ? beta(j) / s.scale(j) : 0.0;
    fit.intercept = s.y_mean - fit.coefficients.dot(s.center);
    return fit;
}

// --- Variance-stabilizing transform ------------------------------------------

double AsinhScaling::forward(double p) const { return std::asinh((p - median) / mad); }
double AsinhScaling::inverse(double t) const { return std::sinh(t) * mad + median; }

AsinhScaling AsinhScaling::fit(const std::vector<double>& prices) {
    if (prices.empty()) throw NumericError("asinh scaling needs data");
    std::vector<double> v = prices;
    auto median_of = [](std::vector<double>& u) {
        const size_t n = u.size();
        std::nth_element(u.begin(), u.begin() + n / 2, u.end());
        double hi = u[n / 2];
        if (n % 2 == 0) {
            std::nth_element(u.begin(), u.begin() + n / 2 - 1, u.end());
            return (hi + u[n / 2 - 1]) / 2.0;
        }
        return hi;
    };
    AsinhScaling s;
    s.median = median_of(v);
    for (auto& x : v) x = std::abs(x - s.median);
    s.mad = median_of(v);
    if (s.mad <= 0.0) throw NumericError("asinh scaling: zero median absolute deviation");
    return s;
}

}  // namespace mocf
