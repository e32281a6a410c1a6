#include "mocf/representation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mocf/errors.hpp"

namespace mocf {

FpcaBasis fit_fpca(const Eigen::MatrixXd& curves, Side side, const EvaluationGrid& grid,
                   int max_components) {
    const Eigen::Index t = curves.rows();
    const Eigen::Index g = curves.cols();
    if (t < 2) throw NumericError("FPCA needs at least 2 curves");
    if (g != grid.size()) throw NumericError("FPCA curve matrix does not match the grid");

    FpcaBasis basis;
    basis.side = side;
    basis.grid = grid;
    basis.mean = curves.colwise().mean();

    const Eigen::MatrixXd centered = curves.rowwise() - basis.mean.transpose();
    if (centered.rowwise().norm().maxCoeff() == 0.0 && t >= 2) {
        // all curves identical: zero-variance basis with a single null mode
        basis.components = Eigen::MatrixXd::Zero(g, 1);
        basis.eigenvalues = Eigen::VectorXd::Zero(1);
        basis.explained_ratio = {0.0};
        return basis;
    }

    const Eigen::VectorXd w = grid.trapezoid_weights();
    const Eigen::VectorXd ws = w.array().sqrt();
    // Covariance under the weighted inner product: eigen-decompose
    // W^(1/2) C W^(1/2), then map eigenvectors back through W^(-1/2).
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(t - 1);
    cov = ws.asDiagonal() * cov * ws.asDiagonal();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw NumericError("FPCA eigen-decomposition failed");

    basis.total_variance = std::max(0.0, solver.eigenvalues().sum());
    const int k = std::min<int>(max_components, static_cast<int>(g));
    basis.components.resize(g, k);
    basis.eigenvalues.resize(k);
    for (int i = 0; i < k; ++i) {
        const Eigen::Index src = g - 1 - i;  // solver sorts ascending
        basis.eigenvalues(i) = std::max(0.0, solver.eigenvalues()(src));
        basis.components.col(i) = solver.eigenvectors().col(src).cwiseQuotient(ws);
    }
    basis.explained_ratio.resize(k);
    const double total = basis.total_variance;
    for (int i = 0; i < k; ++i)
        basis.explained_ratio[i] = total > 0.0 ? basis.eigenvalues(i) / total : 0.0;
    return basis;
}

namespace {

// Kneedle elbow (sensitivity 1, decreasing convex scree flipped to
// increasing concave). Returns the 1-based elbow position.
int kneedle_elbow(const std::vector<double>& y) {
    const int n = static_cast<int>(y.size());
    if (n < 3) return 1;
    const double ymin = *std::min_element(y.begin(), y.end());
    const double ymax = *std::max_element(y.begin(), y.end());
    if (ymax - ymin <= 0.0) return 1;

    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) {
        const double xn = static_cast<double>(i) / (n - 1);
        const double yn = (y[i] - ymin) / (ymax - ymin);
        d[i] = (1.0 - yn) - xn;
    }
    const double sensitivity = 1.0;
    const double mean_dx = 1.0 / (n - 1);
    int best = 0;
    for (int i = 1; i < n; ++i)
        if (d[i] > d[best]) best = i;
    for (int i = 1; i + 1 < n; ++i) {
        if (!(d[i] > d[i - 1] && d[i] >= d[i + 1])) continue;  // local maximum
        const double threshold = d[i] - sensitivity * mean_dx;
        for (int j = i + 1; j < n; ++j) {
            if (d[j] > d[i]) break;  // next candidate takes over
            if (d[j] < threshold) return i + 1;
        }
    }
    return best + 1;
}

}  // namespace

int select_num_components(const std::vector<double>& eigenvalues, double threshold) {
    const int n = static_cast<int>(eigenvalues.size());
    if (n < 2) throw NumericError("component selection needs at least 2 eigenvalues");
    double total = 0.0;
    for (double e : eigenvalues) total += e;

    int k99 = 1;
    if (total > 0.0) {
        double cum = 0.0;
        for (int i = 0; i < n; ++i) {
            cum += eigenvalues[i];
            if (cum / total >= threshold) {
                k99 = i + 1;
                break;
            }
            k99 = n;
        }
    }
    // The elbow position is the first point of the flat regime; components on
    // the steep side of it are retained.
    const int k_knee = std::max(1, kneedle_elbow(eigenvalues) - 1);
    return std::max(std::max(k_knee, k99), 1);
}

Eigen::VectorXd fpca_project(const FpcaBasis& basis, const Eigen::VectorXd& curve, int k) {
    if (k > basis.num_components()) throw NumericError("projection K exceeds the fitted basis");
    const Eigen::VectorXd w = basis.grid.trapezoid_weights();
    const Eigen::VectorXd centered = curve - basis.mean;
    return basis.components.leftCols(k).transpose() * w.cwiseProduct(centered);
}

Eigen::VectorXd fpca_reconstruct(const FpcaBasis& basis, const Eigen::VectorXd& scores) {
    if (scores.size() > basis.num_components())
        throw NumericError("score length exceeds the fitted basis");
    return basis.mean + basis.components.leftCols(scores.size()) * scores;
}

// --- ZST ---------------------------------------------------------------------

double interp_on_grid(const EvaluationGrid& grid, const Eigen::VectorXd& values, double price) {
    const auto& p = grid.prices;
    if (price <= p.front()) return values(0);
    if (price >= p.back()) return values(values.size() - 1);
    const auto it = std::upper_bound(p.begin(), p.end(), price);
    const size_t j = static_cast<size_t>(it - p.begin());
    const double t = (price - p[j - 1]) / (p[j] - p[j - 1]);
    return values(j - 1) + t * (values(j) - values(j - 1));
}

ZstBasis fit_zst(const Eigen::MatrixXd& curves, Side side, const EvaluationGrid& grid, int k) {
    if (k < 2) throw ConfigError("ZST needs at least 2 price classes");
    ZstBasis basis;
    basis.side = side;
    basis.grid = grid;
    basis.mean_curve = curves.colwise().mean();
    basis.anchor = basis.mean_curve(0);

    const int g = grid.size();
    const double v0 = basis.mean_curve(0);
    const double v1 = basis.mean_curve(g - 1);
    if (std::abs(v1 - v0) < 1e-9)
        throw NumericError("ZST grid construction: mean price curve is flat on the domain");

    // Equispaced volume grid mapped through the mean price curve (the
    // monotone inverse of the mean quantity curve). Flat mean segments map to
    // their lowest price.
    basis.price_grid.resize(k);
    for (int i = 0; i < k; ++i) {
        const double target = v0 + (v1 - v0) * static_cast<double>(i) / (k - 1);
        const bool increasing = v1 > v0;
        int j = 0;
        while (j < g - 1) {
            const double a = basis.mean_curve(j), b = basis.mean_curve(j + 1);
            if ((increasing && b >= target) || (!increasing && b <= target)) break;
            ++j;
        }
        const double a = basis.mean_curve(j);
        const double b = basis.mean_curve(std::min(j + 1, g - 1));
        double t = 0.0;
        if (std::abs(b - a) > 1e-12) t = (target - a) / (b - a);
        t = std::clamp(t, 0.0, 1.0);
        const double pa = grid.prices[j];
        const double pb = grid.prices[std::min(j + 1, g - 1)];
        basis.price_grid[i] = pa + t * (pb - pa);
    }
    std::sort(basis.price_grid.begin(), basis.price_grid.end());
    basis.price_grid.front() = grid.prices.front();
    basis.price_grid.back() = grid.prices.back();
    return basis;
}

Eigen::VectorXd zst_project(const ZstBasis& basis, const Eigen::VectorXd& curve) {
    const int k = static_cast<int>(basis.price_grid.size());
    Eigen::VectorXd diffs(k);
    double prev = basis.anchor;
    for (int i = 0; i < k; ++i) {
        const double q = interp_on_grid(basis.grid, curve, basis.price_grid[i]);
        diffs(i) = q - prev;
        prev = q;
    }
    return diffs;
}

Eigen::VectorXd zst_reconstruct(const ZstBasis& basis, const Eigen::VectorXd& diffs) {
    const int k = static_cast<int>(basis.price_grid.size());
    if (diffs.size() != k) throw NumericError("ZST vector length does not match the price grid");

    std::vector<double> q(k);
    double cum = basis.anchor;
    for (int i = 0; i < k; ++i) {
        cum += diffs(i);
        q[i] = cum;
    }

    const int g = basis.grid.size();
    Eigen::VectorXd out(g);
    int seg = 0;
    for (int i = 0; i < g; ++i) {
        const double p = basis.grid.prices[i];
        while (seg + 2 < k && basis.price_grid[seg + 1] < p) ++seg;
        const double pa = basis.price_grid[seg], pb = basis.price_grid[seg + 1];
        const double qa = q[seg], qb = q[seg + 1];
        double frac;
        const double ma = interp_on_grid(basis.grid, basis.mean_curve, pa);
        const double mb = interp_on_grid(basis.grid, basis.mean_curve, pb);
        const double mp = interp_on_grid(basis.grid, basis.mean_curve, std::clamp(p, pa, pb));
        if (std::abs(mb - ma) > 1e-12)
            frac = (mp - ma) / (mb - ma);  // follow the mean curve's shape
        else if (pb > pa)
            frac = (std::clamp(p, pa, pb) - pa) / (pb - pa);
        else
            frac = 0.0;
        out(i) = qa + frac * (qb - qa);
    }
    return out;
}

// --- PAVA --------------------------------------------------------------------

std::vector<double> pava_non_decreasing(const std::vector<double>& y) {
    const size_t n = y.size();
    std::vector<double> value(n);
    std::vector<size_t> count(n);
    size_t blocks = 0;
    for (size_t i = 0; i < n; ++i) {
        value[blocks] = y[i];
        count[blocks] = 1;
        ++blocks;
        while (blocks > 1 && value[blocks - 2] >= value[blocks - 1]) {
            const double merged = (value[blocks - 2] * count[blocks - 2] +
                                   value[blocks - 1] * count[blocks - 1]) /
                                  (count[blocks - 2] + count[blocks - 1]);
            count[blocks - 2] += count[blocks - 1];
            value[blocks - 2] = merged;
            --blocks;
        }
    }
    std::vector<double> out;
    out.reserve(n);
    for (size_t b = 0; b < blocks; ++b)
        out.insert(out.end(), count[b], value[b]);
    return out;
}

void enforce_monotonicity_inplace(Eigen::VectorXd& values, Side side) {
    std::vector<double> v(values.data(), values.data() + values.size());
    if (side == Side::Demand)
        for (auto& x : v) x = -x;
    v = pava_non_decreasing(v);
    if (side == Side::Demand)
        for (auto& x : v) x = -x;
    for (Eigen::Index i = 0; i < values.size(); ++i) values(i) = v[static_cast<size_t>(i)];
}

SmoothCurve enforce_monotonicity(const SmoothCurve& curve) {
    SmoothCurve out = curve;
    Eigen::VectorXd v = curve.vec();
    enforce_monotonicity_inplace(v, curve.side);
    out.values.assign(v.data(), v.data() + v.size());
    return out;
}

// --- Curve pair codec ----------------------------------------------------------

Eigen::VectorXd CurvePairCodec::project(const Eigen::VectorXd& supply,
                                        const Eigen::VectorXd& demand) const {
    Eigen::VectorXd out(dim());
    if (kind == Kind::Fpca) {
        out.head(k_supply) = fpca_project(fpca_supply, supply, k_supply);
        out.tail(k_demand) = fpca_project(fpca_demand, demand, k_demand);
    } else {
        out.head(k_supply) = zst_project(zst_supply, supply);
        out.tail(k_demand) = zst_project(zst_demand, demand);
    }
    return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> CurvePairCodec::reconstruct(
    const Eigen::VectorXd& scores) const {
    if (scores.size() != dim()) throw NumericError("score vector length mismatch");
    Eigen::VectorXd s, d;
    if (kind == Kind::Fpca) {
        s = fpca_reconstruct(fpca_supply, scores.head(k_supply));
        d = fpca_reconstruct(fpca_demand, scores.tail(k_demand));
    } else {
        s = zst_reconstruct(zst_supply, scores.head(k_supply));
        d = zst_reconstruct(zst_demand, scores.tail(k_demand));
    }
    enforce_monotonicity_inplace(s, Side::Supply);
    enforce_monotonicity_inplace(d, Side::Demand);
    return {s, d};
}

double CurvePairCodec::monotonicity_deviation(const Eigen::VectorXd& raw,
                                              const Eigen::VectorXd& fixed) {
    return (raw - fixed).cwiseAbs().maxCoeff();
}

void export_fpca_basis_json(const FpcaBasis& basis, const std::string& path) {
    nlohmann::json j;
    j["side"] = side_name(basis.side);
    j["prices"] = basis.grid.prices;
    j["mean"] = std::vector<double>(basis.mean.data(), basis.mean.data() + basis.mean.size());
    j["eigenvalues"] = std::vector<double>(basis.eigenvalues.data(),
                                           basis.eigenvalues.data() + basis.eigenvalues.size());
    j["explained_ratio"] = basis.explained_ratio;
    std::vector<std::vector<double>> comps;
    for (int k = 0; k < basis.num_components(); ++k)
        comps.emplace_back(basis.components.col(k).data(),
                           basis.components.col(k).data() + basis.components.rows());
    j["components"] = comps;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << j.dump(2) << '\n';
}

}  // namespace mocf
