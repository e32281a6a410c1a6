// Command-line entry point: synthetic data generation, rolling backtests,
// single-day forecasts, store evaluation and plot-data export.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "mocf/backtest.hpp"
#include "mocf/errors.hpp"
#include "mocf/market_data.hpp"
#include "mocf/time.hpp"

namespace fs = std::filesystem;

namespace {

int run(int argc, char** argv) {
    CLI::App app{"Day-ahead electricity market forecasting from merit-order curves"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic market dataset");
    std::uint64_t synth_seed = 1;
    int synth_days = 30;
    std::string synth_out;
    synth->add_option("--seed", synth_seed, "Master RNG seed");
    synth->add_option("--days", synth_days, "Number of days (>= 8)")->required();
    synth->add_option("--out", synth_out, "Output directory")->required();

    // backtest
    auto* backtest = app.add_subcommand("backtest", "Run the rolling daily-recalibration backtest");
    std::string bt_config;
    int bt_jobs = 0;
    backtest->add_option("--config", bt_config, "Experiment config file")->required();
    backtest->add_option("--jobs", bt_jobs, "Worker threads (overrides config)");

    // forecast
    auto* forecast = app.add_subcommand("forecast", "Recalibrate and forecast a single day");
    std::string fc_config, fc_date;
    forecast->add_option("--config", fc_config, "Experiment config file")->required();
    forecast->add_option("--date", fc_date, "Target date (YYYY-MM-DD)")->required();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Compute metric reports from a store");
    std::string ev_store, ev_out;
    evaluate->add_option("--store", ev_store, "Forecast store directory")->required();
    evaluate->add_option("--out", ev_out, "Report directory (default: <store>/reports)");

    // plot-data
    auto* plot = app.add_subcommand("plot-data", "Emit per-hour metric series for plotting");
    std::string pd_store, pd_out;
    plot->add_option("--store", pd_store, "Forecast store directory")->required();
    plot->add_option("--out", pd_out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) {
        mocf::SyntheticMarket market = mocf::generate_synthetic_market(synth_seed, synth_days);
        fs::create_directories(synth_out);
        const fs::path out(synth_out);
        mocf::write_order_book((out / "orders.csv").string(), market.snapshots);
        mocf::write_exogenous((out / "exogenous.csv").string(), market.exogenous);
        mocf::write_coupling((out / "coupling.csv").string(), market.snapshots);
        std::fprintf(stderr, "wrote %d days to %s\n", synth_days, synth_out.c_str());
        return 0;
    }
    if (backtest->parsed()) {
        mocf::ExperimentConfig cfg = mocf::ExperimentConfig::load(bt_config);
        if (bt_jobs > 0) cfg.jobs = bt_jobs;
        mocf::BacktestSummary s = mocf::run_backtest(cfg);
        std::fprintf(stderr, "backtest: %d days, %ld store rows, %ld leakage violations\n",
                     s.days_run, s.store_rows, s.leakage_violations);
        return 0;
    }
    if (forecast->parsed()) {
        mocf::ExperimentConfig cfg = mocf::ExperimentConfig::load(fc_config);
        mocf::BacktestSummary s = mocf::run_single_day(cfg, mocf::parse_date_iso(fc_date));
        std::fprintf(stderr, "forecast %s: %ld store rows\n", fc_date.c_str(), s.store_rows);
        return 0;
    }
    if (evaluate->parsed()) {
        if (ev_out.empty()) ev_out = (fs::path(ev_store) / "reports").string();
        mocf::evaluate_store(ev_store, ev_out);
        std::fprintf(stderr, "reports written to %s\n", ev_out.c_str());
        return 0;
    }
    if (plot->parsed()) {
        mocf::write_plot_data(pd_store, pd_out);
        std::fprintf(stderr, "plot data written to %s\n", pd_out.c_str());
        return 0;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const mocf::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const mocf::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 3;
    }
}
