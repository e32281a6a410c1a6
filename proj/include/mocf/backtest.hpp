#pragma once

// Rolling daily-recalibration experiment: configuration, the forecast store
// on disk, and the end-to-end backtest loop.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mocf/models.hpp"
#include "mocf/market_data.hpp"

namespace mocf {

enum class Representation { None, Fpca, Zst, Price };

struct ModelSpec {
    Representation rep = Representation::None;
    ModelVariant variant = ModelVariant::Naive;
    std::string id;  // e.g. "fpca-arx", "price-farx", "lear", "naive"
};

ModelSpec parse_model_spec(const std::string& id);

struct ExperimentConfig {
    std::string orders_csv;
    std::string exogenous_csv;
    std::string coupling_csv;  // optional
    std::string holidays_csv;  // optional; Italian defaults otherwise
    std::string store_dir;
    DayStamp test_start = 0;
    DayStamp test_end = 0;
    int window_days = 364;
    bool allow_short_window = false;  // required for non-standard window lengths
    std::vector<ModelSpec> models;
    bool dynamic_k = true;
    int fixed_k = 0;   // used when dynamic_k is false
    int max_k = 25;    // cap on retained components
    int grid_points = 301;
    int bandwidth_count = 10;
    bool probabilistic = true;
    int n_simulations = 5000;
    std::vector<int> calib_windows = {28, 56, 91, 182};
    int prob_min_history = 182;
    uint64_t seed = 1;
    int jobs = 1;

    // Flat key=value file; '#' comments; unknown keys rejected.
    static ExperimentConfig load(const std::string& path);
    void validate() const;
};

struct BacktestSummary {
    int days_run = 0;
    long leakage_violations = 0;
    long store_rows = 0;
};

// Runs the full rolling backtest and populates config.store_dir.
BacktestSummary run_backtest(const ExperimentConfig& config);

// Recalibrates and forecasts a single day, appending to the store.
BacktestSummary run_single_day(const ExperimentConfig& config, DayStamp day);

// Reads a completed store and writes metric CSVs (point metrics, DM matrix,
// CRPS/PIT summaries, curve-R^2 summary) into out_dir.
void evaluate_store(const std::string& store_dir, const std::string& out_dir);

// Emits per-hour MAE and CRPS series for external plotting.
void write_plot_data(const std::string& store_dir, const std::string& out_dir);

// Upper tail of the chi-squared distribution (regularized incomplete gamma),
// used by the PIT uniformity report.
double chi_squared_p_value(double statistic, int dof);

}  // namespace mocf
