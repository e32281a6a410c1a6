#include "mocf/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "mocf/curves.hpp"
#include "mocf/errors.hpp"
#include "mocf/evaluation.hpp"
#include "mocf/probabilistic.hpp"
#include "mocf/representation.hpp"
#include "mocf/rng.hpp"
#include "mocf/smoothing.hpp"

namespace fs = std::filesystem;

namespace mocf {
namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void append_rows(const std::string& path, const std::string& header,
                 const std::vector<std::string>& rows) {
    fs::create_directories(fs::path(path).parent_path());
    const bool fresh = !fs::exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw ConfigError("cannot open for append: " + path);
    if (fresh) out << header << '\n';
    for (const auto& r : rows) out << r << '\n';
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

ModelSpec parse_model_spec(const std::string& id) {
    ModelSpec spec;
    spec.id = id;
    if (id == "naive") return spec;
    if (id == "lear") {
        spec.rep = Representation::Price;
        spec.variant = ModelVariant::Lear;
        return spec;
    }
    const auto dash = id.find('-');
    if (dash == std::string::npos) throw ConfigError("unknown model id: " + id);
    const std::string rep = id.substr(0, dash), var = id.substr(dash + 1);
    if (rep == "fpca")
        spec.rep = Representation::Fpca;
    else if (rep == "zst")
        spec.rep = Representation::Zst;
    else if (rep == "price")
        spec.rep = Representation::Price;
    else
        throw ConfigError("unknown representation in model id: " + id);
    if (var == "arx")
        spec.variant = ModelVariant::Arx;
    else if (var == "farx")
        spec.variant = ModelVariant::Farx;
    else if (var == "varx")
        spec.variant = ModelVariant::Varx;
    else if (var == "fvarx")
        spec.variant = ModelVariant::Fvarx;
    else
        throw ConfigError("unknown variant in model id: " + id);
    if (spec.rep == Representation::Price &&
        (spec.variant == ModelVariant::Varx || spec.variant == ModelVariant::Fvarx))
        throw ConfigError("price target is univariate; use arx/farx/lear: " + id);
    return spec;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    ExperimentConfig cfg;
    cfg.models.clear();
    std::string line;
    int lineno = 0;
    bool models_given = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        try {
            if (key == "orders_csv") cfg.orders_csv = val;
            else if (key == "exogenous_csv") cfg.exogenous_csv = val;
            else if (key == "coupling_csv") cfg.coupling_csv = val;
            else if (key == "holidays_csv") cfg.holidays_csv = val;
            else if (key == "store_dir") cfg.store_dir = val;
            else if (key == "test_start") cfg.test_start = parse_date_iso(val);
            else if (key == "test_end") cfg.test_end = parse_date_iso(val);
            else if (key == "window_days") cfg.window_days = std::stoi(val);
            else if (key == "allow_short_window") cfg.allow_short_window = (val == "true");
            else if (key == "models") {
                models_given = true;
                for (const auto& m : split(val, ','))
                    if (!trim(m).empty()) cfg.models.push_back(parse_model_spec(trim(m)));
            } else if (key == "k_mode") {
                if (val == "dynamic") cfg.dynamic_k = true;
                else if (val.rfind("fixed:", 0) == 0) {
                    cfg.dynamic_k = false;
                    cfg.fixed_k = std::stoi(val.substr(6));
                } else throw ConfigError("k_mode must be 'dynamic' or 'fixed:<k>'");
            } else if (key == "max_k") cfg.max_k = std::stoi(val);
            else if (key == "grid_points") cfg.grid_points = std::stoi(val);
            else if (key == "bandwidth_count") cfg.bandwidth_count = std::stoi(val);
            else if (key == "probabilistic") cfg.probabilistic = (val == "true");
            else if (key == "n_simulations") cfg.n_simulations = std::stoi(val);
            else if (key == "calib_windows") {
                cfg.calib_windows.clear();
                for (const auto& w : split(val, ',')) cfg.calib_windows.push_back(std::stoi(trim(w)));
            } else if (key == "prob_min_history") cfg.prob_min_history = std::stoi(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "jobs") cfg.jobs = std::stoi(val);
            else throw ConfigError("unknown config key: " + key);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!models_given)
        for (const char* m : {"naive", "fpca-arx", "fpca-varx", "zst-arx", "price-farx", "lear"})
            cfg.models.push_back(parse_model_spec(m));
    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const {
    if (orders_csv.empty() || exogenous_csv.empty())
        throw ConfigError("orders_csv and exogenous_csv are required");
    if (store_dir.empty()) throw ConfigError("store_dir is required");
    if (test_end < test_start) throw ConfigError("test_end before test_start");
    if (window_days != 364 && !allow_short_window)
        throw ConfigError(
            "window_days != 364 deviates from the reference protocol; "
            "set allow_short_window = true to accept");
    if (window_days < 17) throw ConfigError("window_days must be >= 17");
    if (models.empty()) throw ConfigError("no models configured");
    if (n_simulations < 100) throw ConfigError("n_simulations must be >= 100");
    if (calib_windows.empty()) throw ConfigError("calib_windows must not be empty");
    for (int w : calib_windows)
        if (w < 28) throw ConfigError("calibration windows shorter than 28 days are unsupported");
    if (!dynamic_k && fixed_k < 1) throw ConfigError("fixed k must be >= 1");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

namespace {

constexpr int kLagPad = 7;  // lag depth available before the rolling window

class Engine {
  public:
    explicit Engine(const ExperimentConfig& cfg)
        : cfg_(cfg),
          calendar_(cfg.holidays_csv.empty() ? HolidayCalendar::italian_defaults()
                                             : HolidayCalendar::load(cfg.holidays_csv)),
          grid_(EvaluationGrid::uniform(kDomainLo, kDomainHi, cfg.grid_points)),
          bw_candidates_(default_bandwidth_candidates(cfg.bandwidth_count)) {
        load_data();
    }

    BacktestSummary run(DayStamp start, DayStamp end) {
        for (DayStamp d = start; d <= end; ++d) {
            std::fprintf(stderr, "[%s] recalibrating for %s\n",
                         format_date_iso(d - 1).c_str(), format_date_iso(d).c_str());
            run_day(d);
            ++summary_.days_run;
        }
        finalize();
        return summary_;
    }

  private:
    // --- data ---------------------------------------------------------------
    void load_data() {
        auto snapshots = parse_order_book(cfg_.orders_csv);
        if (!cfg_.coupling_csv.empty()) parse_coupling(cfg_.coupling_csv, snapshots);
        auto exog = parse_exogenous(cfg_.exogenous_csv);
        if (exog.size() != snapshots.size())
            throw DataError("exogenous/order-book hour counts differ");
        for (size_t i = 0; i < exog.size(); ++i)
            if (exog[i].timestamp != snapshots[i].timestamp)
                throw DataError("exogenous timestamps do not match the order book at " +
                                format_hour_iso(snapshots[i].timestamp));
        if (snapshots.size() % 24 != 0 || hour_of(snapshots.front().timestamp) != 0)
            throw DataError("order book must cover whole days starting at hour 0");
        data_start_ = day_of(snapshots.front().timestamp);
        num_days_ = static_cast<int>(snapshots.size()) / 24;

        const size_t n = snapshots.size();
        raw_supply_.resize(n);
        raw_demand_.resize(n);
        actual_price_.resize(n);
        exog_.resize(n);
        smooth_cache_.resize(n);
        for (size_t i = 0; i < n; ++i) {
            MarketSnapshot coupled = apply_market_coupling(snapshots[i]);
            StepCurve s = restrict_domain(build_quantity_curve(coupled.supply_orders, Side::Supply),
                                          kDomainLo, kDomainHi);
            StepCurve d = restrict_domain(build_quantity_curve(coupled.demand_orders, Side::Demand),
                                          kDomainLo, kDomainHi);
            auto sv = evaluate_on_grid(s, grid_);
            auto dv = evaluate_on_grid(d, grid_);
            raw_supply_[i] = Eigen::Map<Eigen::VectorXd>(sv.data(), grid_.size());
            raw_demand_[i] = Eigen::Map<Eigen::VectorXd>(dv.data(), grid_.size());
            try {
                actual_price_[i] = clear_market(s, d).price;
            } catch (const NumericError& e) {
                throw DataError("no clearing at " + format_hour_iso(snapshots[i].timestamp) +
                                ": " + e.what());
            }
            exog_[i] = Eigen::VectorXd(4);
            exog_[i] << exog[i].load_forecast, exog[i].ntc_fr, exog[i].ntc_ch,
                exog[i].res_forecast;
        }
    }

    int day_offset(DayStamp d) const { return static_cast<int>(d - data_start_); }
    size_t hidx(int day_off, int h) const { return static_cast<size_t>(day_off) * 24 + h; }

    // --- smoothing ----------------------------------------------------------
    const Eigen::MatrixXd& smoother_for(double h) {
        auto it = smoother_cache_.find(h);
        if (it == smoother_cache_.end())
            it = smoother_cache_.emplace(h, smoother_matrix(grid_, h)).first;
        return it->second;
    }

    struct SmoothEntry {
        double h = -1.0;
        Eigen::VectorXd s, d;
    };

    const SmoothEntry& smoothed(int day_off, int hour, double h) {
        SmoothEntry& e = smooth_cache_[hidx(day_off, hour)];
        if (e.h != h) {
            const Eigen::MatrixXd& L = smoother_for(h);
            e.s = L * raw_supply_[hidx(day_off, hour)];
            e.d = L * raw_demand_[hidx(day_off, hour)];
            enforce_monotonicity_inplace(e.s, Side::Supply);
            enforce_monotonicity_inplace(e.d, Side::Demand);
            e.h = h;
        }
        return e;
    }

    double select_day_bandwidth(int last_window_day) {
        // One curve per hour of the last window day, alternating sides so both
        // inform the global bandwidth; the median selection is applied to all
        // window curves.
        std::vector<double> chosen(24);
        for (int h = 0; h < 24; ++h) {
            const auto& raw =
                (h % 2 == 0) ? raw_supply_[hidx(last_window_day, h)]
                             : raw_demand_[hidx(last_window_day, h)];
            std::vector<double> v(raw.data(), raw.data() + raw.size());
            chosen[h] = select_bandwidth_gcv(v, grid_, bw_candidates_);
        }
        std::sort(chosen.begin(), chosen.end());
        return chosen[(chosen.size() - 1) / 2];
    }

    // --- per-day pipeline -----------------------------------------------------
    struct DayState {
        double bandwidth = 0.0;
        CurvePairCodec fpca, zst;
        bool has_fpca = false, has_zst = false;
        AsinhScaling price_scale;
    };

    void run_day(DayStamp d) {
        const int off = day_offset(d);
        const int w0 = off - cfg_.window_days;  // first window day
        if (w0 - kLagPad < 0 || off >= num_days_)
            throw DataError("insufficient history/exogenous data for " + format_date_iso(d));

        bool need_fpca = false, need_zst = false, need_price = false;
        for (const auto& m : cfg_.models) {
            need_fpca |= m.rep == Representation::Fpca;
            need_zst |= m.rep == Representation::Zst;
            need_price |= m.rep == Representation::Price;
        }
        // The representation is refit even when only price models run: the
        // naive benchmark and R^2 bookkeeping rely on the cached curves only.

        DayState st;
        st.bandwidth = select_day_bandwidth(off - 1);
        const int T = cfg_.window_days * 24;

        if (need_fpca || need_zst || cfg_.probabilistic) {
            Eigen::MatrixXd sup(T, grid_.size()), dem(T, grid_.size());
            for (int t = 0; t < cfg_.window_days; ++t)
                for (int h = 0; h < 24; ++h) {
                    const auto& e = smoothed(w0 + t, h, st.bandwidth);
                    sup.row(t * 24 + h) = e.s.transpose();
                    dem.row(t * 24 + h) = e.d.transpose();
                }
            const int max_c = std::min(grid_.size() - 1, std::max(cfg_.max_k, 30));
            FpcaBasis bs = fit_fpca(sup, Side::Supply, grid_, max_c);
            FpcaBasis bd = fit_fpca(dem, Side::Demand, grid_, max_c);
            int ks, kd;
            if (cfg_.dynamic_k) {
                std::vector<double> es(bs.eigenvalues.data(),
                                       bs.eigenvalues.data() + bs.eigenvalues.size());
                std::vector<double> ed(bd.eigenvalues.data(),
                                       bd.eigenvalues.data() + bd.eigenvalues.size());
                ks = std::min(cfg_.max_k, select_num_components(es));
                kd = std::min(cfg_.max_k, select_num_components(ed));
            } else {
                ks = kd = cfg_.fixed_k;
            }
            st.fpca.kind = CurvePairCodec::Kind::Fpca;
            st.fpca.fpca_supply = std::move(bs);
            st.fpca.fpca_demand = std::move(bd);
            st.fpca.k_supply = ks;
            st.fpca.k_demand = kd;
            st.has_fpca = true;
            zst_k_supply_ = std::max(zst_k_supply_, ks);
            zst_k_demand_ = std::max(zst_k_demand_, kd);
            if (need_zst) {
                st.zst.kind = CurvePairCodec::Kind::Zst;
                st.zst.zst_supply = fit_zst(sup, Side::Supply, grid_, zst_k_supply_);
                st.zst.zst_demand = fit_zst(dem, Side::Demand, grid_, zst_k_demand_);
                st.zst.k_supply = zst_k_supply_;
                st.zst.k_demand = zst_k_demand_;
                st.has_zst = true;
            }
        }
        if (need_price) {
            std::vector<double> prices;
            prices.reserve(T);
            for (int t = 0; t < cfg_.window_days; ++t)
                for (int h = 0; h < 24; ++h) prices.push_back(actual_price_[hidx(w0 + t, h)]);
            st.price_scale = AsinhScaling::fit(prices);
        }

        // Panels span [d - window - 7, d]; regression targets cover the full
        // window, lags reach into the 7-day pad, day d supplies exogenous only.
        std::map<Representation, DayHourPanel> panels;
        if (has_curve_models(Representation::Fpca) && st.has_fpca)
            panels[Representation::Fpca] = build_score_panel(st.fpca, w0, off, st.bandwidth);
        if (has_curve_models(Representation::Zst) && st.has_zst)
            panels[Representation::Zst] = build_score_panel(st.zst, w0, off, st.bandwidth);
        if (need_price) panels[Representation::Price] = build_price_panel(st.price_scale, w0, off);

        const int predict_idx = cfg_.window_days + kLagPad;
        const int train_begin = kLagPad, train_end = predict_idx - 1;

        std::vector<std::string> meta_row;
        long day_leaks = 0;
        int model_idx = -1;
        for (const auto& spec : cfg_.models) {
            ++model_idx;
            if (spec.rep == Representation::None) {
                run_naive(spec, d, off);
                continue;
            }
            const DayHourPanel& panel = panels.at(spec.rep);
            FittedDayModel model = fit_day_ahead(spec.variant, panel, calendar_, train_begin,
                                                 train_end, cfg_.jobs);
            Eigen::MatrixXd pred = predict_day(model, panel, calendar_, predict_idx);
            for (int h = 0; h < 24; ++h)
                day_leaks += audit_leakage(spec.variant, h, 0, predict_idx, panel, calendar_);

            if (spec.rep == Representation::Price) {
                std::array<double, 24> prices{};
                for (int h = 0; h < 24; ++h) prices[h] = st.price_scale.inverse(pred(h, 0));
                store_points(spec.id, d, prices);
                if (cfg_.probabilistic) postprocess_price_model(spec, d, off, prices);
            } else {
                const CurvePairCodec& codec =
                    spec.rep == Representation::Fpca ? st.fpca : st.zst;
                std::array<double, 24> prices{};
                Eigen::MatrixXd actual_scores(24, codec.dim());
                for (int h = 0; h < 24; ++h) {
                    auto [sc, dc] = codec.reconstruct(pred.row(h).transpose());
                    prices[h] = clear_on_grid(grid_, sc, dc).price;
                    accumulate_r2(spec.id, sc, dc, off, h);
                    const auto& e = smoothed(off, h, st.bandwidth);
                    actual_scores.row(h) = codec.project(e.s, e.d).transpose();
                }
                store_points(spec.id, d, prices);
                ResidualDay rd;
                rd.day = d;
                rd.k_s = codec.k_supply;
                rd.k_d = codec.k_demand;
                rd.res = actual_scores - pred;
                residuals_[spec.id].push_back(std::move(rd));
                if (cfg_.probabilistic)
                    simulate_curve_model(spec, model_idx, d, off, codec, pred);
            }
        }
        summary_.leakage_violations += day_leaks;

        append_rows(store_path("meta.csv"),
                    "date,bandwidth,k_supply,k_demand,zst_k_supply,zst_k_demand,"
                    "leakage_violations",
                    {format_date_iso(d) + ',' + fmt(st.bandwidth) + ',' +
                     std::to_string(st.has_fpca ? st.fpca.k_supply : 0) + ',' +
                     std::to_string(st.has_fpca ? st.fpca.k_demand : 0) + ',' +
                     std::to_string(zst_k_supply_) + ',' + std::to_string(zst_k_demand_) + ',' +
                     std::to_string(day_leaks)});

        // Actual prices become part of the store once day d has realized.
        std::vector<std::string> rows;
        for (int h = 0; h < 24; ++h)
            rows.push_back(format_date_iso(d) + ',' + std::to_string(h) + ',' +
                           fmt(actual_price_[hidx(off, h)]));
        append_rows(store_path("actuals.csv"), "date,hour,price", rows);
        auto& arr = actuals_[d];
        for (int h = 0; h < 24; ++h) arr[h] = actual_price_[hidx(off, h)];
    }

    bool has_curve_models(Representation rep) const {
        for (const auto& m : cfg_.models)
            if (m.rep == rep) return true;
        return false;
    }

    DayHourPanel build_score_panel(const CurvePairCodec& codec, int w0, int off,
                                   double bandwidth) {
        DayHourPanel panel;
        panel.first_day = data_start_ + (w0 - kLagPad);
        panel.dim_y = codec.dim();
        panel.dim_x = 4;
        const int days = cfg_.window_days + kLagPad + 1;
        panel.y.reserve(static_cast<size_t>(days) * 24);
        panel.x.reserve(static_cast<size_t>(days) * 24);
        for (int t = 0; t < days; ++t) {
            const int day = w0 - kLagPad + t;
            for (int h = 0; h < 24; ++h) {
                if (day == off) {
                    panel.y.push_back(Eigen::VectorXd::Zero(panel.dim_y));
                } else {
                    const auto& e = smoothed(day, h, bandwidth);
                    panel.y.push_back(codec.project(e.s, e.d));
                }
                panel.x.push_back(exog_[hidx(day, h)]);
            }
        }
        return panel;
    }

    DayHourPanel build_price_panel(const AsinhScaling& scale, int w0, int off) {
        DayHourPanel panel;
        panel.first_day = data_start_ + (w0 - kLagPad);
        panel.dim_y = 1;
        panel.dim_x = 4;
        const int days = cfg_.window_days + kLagPad + 1;
        for (int t = 0; t < days; ++t) {
            const int day = w0 - kLagPad + t;
            for (int h = 0; h < 24; ++h) {
                Eigen::VectorXd y(1);
                y(0) = (day == off) ? 0.0 : scale.forward(actual_price_[hidx(day, h)]);
                panel.y.push_back(y);
                panel.x.push_back(exog_[hidx(day, h)]);
            }
        }
        return panel;
    }

    void run_naive(const ModelSpec& spec, DayStamp d, int off) {
        int lag = naive_lag_days(d, calendar_);
        if (off - lag < 0) {
            std::fprintf(stderr, "naive: day %s lacks d-7 history, falling back to d-1\n",
                         format_date_iso(d).c_str());
            lag = 1;
        }
        std::array<double, 24> prices{};
        for (int h = 0; h < 24; ++h) {
            prices[h] = actual_price_[hidx(off - lag, h)];
            accumulate_r2(spec.id, raw_supply_[hidx(off - lag, h)],
                          raw_demand_[hidx(off - lag, h)], off, h);
        }
        store_points(spec.id, d, prices);
    }

    // --- probabilistic --------------------------------------------------------
    struct ResidualDay {
        DayStamp day = 0;
        int k_s = 0, k_d = 0;
        Eigen::MatrixXd res;  // 24 x (k_s + k_d)
    };

    void simulate_curve_model(const ModelSpec& spec, int model_idx, DayStamp d, int off,
                              const CurvePairCodec& codec, const Eigen::MatrixXd& pred) {
        const auto& hist = residuals_[spec.id];
        // The day-d residual was just appended; calibration uses strictly
        // earlier days.
        const int avail = static_cast<int>(hist.size()) - 1;
        if (avail < cfg_.prob_min_history) return;
        std::vector<EmpiricalPriceDistribution> per_hour_members[24];
        int widx = -1;
        for (int w : cfg_.calib_windows) {
            ++widx;
            if (w > avail) continue;
            // Score dimensions vary with the daily K selection; residual
            // vectors are truncated to the smallest K in the window per side.
            int ks = codec.k_supply, kd = codec.k_demand;
            for (int t = avail - w; t < avail; ++t) {
                ks = std::min(ks, hist[t].k_s);
                kd = std::min(kd, hist[t].k_d);
            }
            std::vector<Eigen::MatrixXd> window(w);
            for (int t = 0; t < w; ++t) {
                const ResidualDay& rd = hist[avail - w + t];
                Eigen::MatrixXd m(24, ks + kd);
                m.leftCols(ks) = rd.res.leftCols(ks);
                m.rightCols(kd) = rd.res.middleCols(rd.k_s, kd);
                window[t] = std::move(m);
            }
            ErrorModel em = estimate_error_model(window);
            em.dim_supply = ks;
            std::vector<std::string> rows(24);
            for (int h = 0; h < 24; ++h) {
                Rng rng = Rng::substream(cfg_.seed,
                                         (static_cast<uint64_t>(off) * 977 + model_idx) * 131 +
                                             static_cast<uint64_t>(widx) * 29 + h);
                EmpiricalPriceDistribution dist = simulate_price_distribution(
                    pred.row(h).transpose(), h, em, codec, cfg_.n_simulations, rng);
                per_hour_members[h].push_back(dist);
                rows[h] = quantile_row(d, h, dist);
            }
            write_quantiles(spec.id, "w" + std::to_string(w), d, rows);
        }
        if (!per_hour_members[0].empty()) {
            std::vector<std::string> rows(24);
            for (int h = 0; h < 24; ++h)
                rows[h] = quantile_row(d, h, ensemble_vertical_average(per_hour_members[h]));
            write_quantiles(spec.id, "ens", d, rows);
        }
    }

    void postprocess_price_model(const ModelSpec& spec, DayStamp d, int off,
                                 const std::array<double, 24>& new_forecast) {
        const auto& pts = points_[spec.id];
        // Pairs strictly before day d with known actuals.
        std::vector<DayStamp> days;
        for (const auto& [day, _] : pts)
            if (day < d && actuals_.count(day)) days.push_back(day);
        const int avail = static_cast<int>(days.size());
        if (avail < cfg_.prob_min_history) return;
        (void)off;
        const std::vector<PostprocessMethod> windowed = {
            PostprocessMethod::Normal, PostprocessMethod::Conformal, PostprocessMethod::Idr};
        for (PostprocessMethod method : windowed) {
            std::vector<EmpiricalPriceDistribution> members[24];
            for (int w : cfg_.calib_windows) {
                if (w > avail) continue;
                std::vector<std::string> rows(24);
                for (int h = 0; h < 24; ++h) {
                    std::vector<double> f, y;
                    for (int t = avail - w; t < avail; ++t) {
                        f.push_back(pts.at(days[t])[h]);
                        y.push_back(actuals_.at(days[t])[h]);
                    }
                    EmpiricalPriceDistribution dist =
                        postprocess_point_forecast(method, f, y, new_forecast[h]);
                    members[h].push_back(dist);
                    rows[h] = quantile_row(d, h, dist);
                }
                write_quantiles(spec.id, std::string(postprocess_name(method)) + "-w" +
                                             std::to_string(w), d, rows);
            }
            if (!members[0].empty()) {
                std::vector<std::string> rows(24);
                for (int h = 0; h < 24; ++h)
                    rows[h] = quantile_row(d, h, ensemble_vertical_average(members[h]));
                write_quantiles(spec.id, std::string(postprocess_name(method)) + "-ens", d, rows);
            }
        }
        // Quantile regression pools the calibration windows into one sample
        // (their union: the longest window).
        const int w = std::min(avail, *std::max_element(cfg_.calib_windows.begin(),
                                                        cfg_.calib_windows.end()));
        std::vector<std::string> rows(24);
        for (int h = 0; h < 24; ++h) {
            std::vector<double> f, y;
            for (int t = avail - w; t < avail; ++t) {
                f.push_back(pts.at(days[t])[h]);
                y.push_back(actuals_.at(days[t])[h]);
            }
            rows[h] = quantile_row(
                d, h,
                postprocess_point_forecast(PostprocessMethod::QuantileRegression, f, y,
                                           new_forecast[h]));
        }
        write_quantiles(spec.id, "qrm", d, rows);
    }

    // --- store ----------------------------------------------------------------
    std::string store_path(const std::string& rel) const {
        return (fs::path(cfg_.store_dir) / rel).string();
    }

    void store_points(const std::string& model, DayStamp d, const std::array<double, 24>& p) {
        std::vector<std::string> rows;
        for (int h = 0; h < 24; ++h)
            rows.push_back(format_date_iso(d) + ',' + std::to_string(h) + ',' + fmt(p[h]));
        append_rows(store_path("points/" + model + "/" + format_month(d) + ".csv"),
                    "date,hour,price", rows);
        points_[model][d] = p;
        summary_.store_rows += 24;
    }

    static std::string quantile_header() {
        std::string h = "timestamp";
        char buf[8];
        for (int i = 1; i <= 99; ++i) {
            std::snprintf(buf, sizeof(buf), ",p%02d", i);
            h += buf;
        }
        return h;
    }

    std::string quantile_row(DayStamp d, int hour, const EmpiricalPriceDistribution& dist) const {
        std::string row = format_hour_iso(make_hour(d, hour));
        for (double q : dist.quantiles) row += ',' + fmt(q);
        return row;
    }

    void write_quantiles(const std::string& model, const std::string& tag, DayStamp d,
                         const std::vector<std::string>& rows) {
        append_rows(store_path("quantiles/" + model + "/" + tag + "/" + format_month(d) + ".csv"),
                    quantile_header(), rows);
        summary_.store_rows += static_cast<long>(rows.size());
    }

    void accumulate_r2(const std::string& model, const Eigen::VectorXd& fs,
                       const Eigen::VectorXd& fd, int off, int h) {
        auto& acc = r2_[model];
        if (acc.first.empty()) {
            acc.first.resize(grid_.size());
            acc.second.resize(grid_.size());
        }
        const Eigen::VectorXd& as = raw_supply_[hidx(off, h)];
        const Eigen::VectorXd& ad = raw_demand_[hidx(off, h)];
        for (int i = 0; i < grid_.size(); ++i) {
            acc.first[i].add(fs(i), as(i));
            acc.second[i].add(fd(i), ad(i));
        }
    }

    void finalize() {
        std::vector<std::string> summary_rows;
        for (const auto& [model, acc] : r2_) {
            std::vector<std::string> rows;
            for (int i = 0; i < grid_.size(); ++i)
                rows.push_back(fmt(grid_.prices[i]) + ',' + fmt(acc.first[i].value()) + ',' +
                               fmt(acc.second[i].value()));
            const std::string path = store_path("r2/" + model + ".csv");
            fs::create_directories(fs::path(path).parent_path());
            std::ofstream out(path);  // overwritten: accumulators cover all days so far
            out << "price,supply_r2,demand_r2\n";
            for (const auto& r : rows) out << r << '\n';
            summary_rows.push_back(model + ',' + fmt(average_r_squared(grid_, acc.first)) + ',' +
                                   fmt(average_r_squared(grid_, acc.second)));
        }
        if (!summary_rows.empty()) {
            std::ofstream out(store_path("r2_summary.csv"));
            out << "model,supply_avg_r2,demand_avg_r2\n";
            for (const auto& r : summary_rows) out << r << '\n';
        }
    }

    ExperimentConfig cfg_;
    HolidayCalendar calendar_;
    EvaluationGrid grid_;
    std::vector<double> bw_candidates_;
    DayStamp data_start_ = 0;
    int num_days_ = 0;
    std::vector<Eigen::VectorXd> raw_supply_, raw_demand_, exog_;
    std::vector<double> actual_price_;
    std::vector<SmoothEntry> smooth_cache_;
    std::map<double, Eigen::MatrixXd> smoother_cache_;
    // running maxima of the daily K selections; ZST needs both domain
    // endpoints, hence the floor of 2 price classes
    int zst_k_supply_ = 2, zst_k_demand_ = 2;
    std::map<std::string, std::vector<ResidualDay>> residuals_;
    std::map<std::string, std::map<DayStamp, std::array<double, 24>>> points_;
    std::map<DayStamp, std::array<double, 24>> actuals_;
    std::map<std::string, std::pair<std::vector<RSquaredAccumulator>,
                                    std::vector<RSquaredAccumulator>>> r2_;
    BacktestSummary summary_;
};

}  // namespace

BacktestSummary run_backtest(const ExperimentConfig& config) {
    config.validate();
    Engine engine(config);
    return engine.run(config.test_start, config.test_end);
}

BacktestSummary run_single_day(const ExperimentConfig& config, DayStamp day) {
    config.validate();
    Engine engine(config);
    return engine.run(day, day);
}

// --- evaluation of a completed store ----------------------------------------

namespace {

// (day, hour) -> value series read back from the store's CSV partitions.
using HourSeries = std::map<HourStamp, double>;

HourSeries read_point_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    HourSeries out;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto f = split(line, ',');
        if (f.size() != 3) throw DataError("bad row in " + path + ": " + line);
        out[make_hour(parse_date_iso(f[0]), std::stoi(f[1]))] = std::stod(f[2]);
    }
    return out;
}

HourSeries read_point_dir(const fs::path& dir) {
    HourSeries out;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        HourSeries part = read_point_file(f.string());
        out.insert(part.begin(), part.end());
    }
    return out;
}

std::map<HourStamp, EmpiricalPriceDistribution> read_quantile_dir(const fs::path& dir) {
    std::map<HourStamp, EmpiricalPriceDistribution> out;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::ifstream in(f);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            auto fields = split(line, ',');
            if (fields.size() != 100) throw DataError("bad quantile row in " + f.string());
            EmpiricalPriceDistribution d;
            for (int i = 0; i < 99; ++i) d.quantiles[i] = std::stod(fields[i + 1]);
            out[parse_hour_iso(fields[0])] = d;
        }
    }
    return out;
}

std::vector<std::string> list_subdirs(const fs::path& dir) {
    std::vector<std::string> out;
    if (!fs::exists(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) out.push_back(e.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

double chi_squared_p_value(double statistic, int dof) {
    // Upper regularized incomplete gamma Q(dof/2, stat/2): series expansion
    // below a+1, Lentz continued fraction above.
    const double a = dof / 2.0, x = statistic / 2.0;
    if (x <= 0.0) return 1.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double term = 1.0 / a, sum = term, ap = a;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-15) break;
        }
        const double p = sum * std::exp(-x + a * std::log(x) - lg);
        return 1.0 - p;
    }
    double b = x + 1.0 - a, c = 1e300, dvar = 1.0 / b, h = dvar;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        dvar = an * dvar + b;
        if (std::abs(dvar) < 1e-300) dvar = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        dvar = 1.0 / dvar;
        const double del = dvar * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - lg) * h;
}

void evaluate_store(const std::string& store_dir, const std::string& out_dir) {
    const fs::path store(store_dir);
    if (!fs::exists(store / "actuals.csv")) throw DataError("no actuals.csv in " + store_dir);
    fs::create_directories(out_dir);
    HourSeries actuals = read_point_file((store / "actuals.csv").string());

    std::map<std::string, HourSeries> points;
    for (const auto& model : list_subdirs(store / "points"))
        points[model] = read_point_dir(store / "points" / model);

    // Point metrics, rMAE against the stored naive benchmark.
    std::vector<double> naive_fc, naive_act;
    if (points.count("naive"))
        for (const auto& [t, v] : points["naive"])
            if (actuals.count(t)) naive_fc.push_back(v);
    {
        std::ofstream out(fs::path(out_dir) / "point_metrics.csv");
        out << "model,n,mae,rmse,rmae\n";
        for (const auto& [model, series] : points) {
            std::vector<double> fc, act, nv;
            for (const auto& [t, v] : series) {
                auto it = actuals.find(t);
                if (it == actuals.end()) continue;
                fc.push_back(v);
                act.push_back(it->second);
                if (points.count("naive") && points["naive"].count(t))
                    nv.push_back(points["naive"][t]);
            }
            if (fc.empty()) continue;
            if (nv.size() != fc.size()) nv.clear();
            PointMetrics m = point_metrics(fc, act, nv);
            out << model << ',' << fc.size() << ',' << fmt(m.mae) << ',' << fmt(m.rmse) << ','
                << fmt(m.rmae) << '\n';
        }
    }

    // Daily mean absolute errors feed the pairwise DM matrix.
    std::map<std::string, std::map<DayStamp, std::pair<double, int>>> daily;
    for (const auto& [model, series] : points)
        for (const auto& [t, v] : series) {
            auto it = actuals.find(t);
            if (it == actuals.end()) continue;
            auto& cell = daily[model][day_of(t)];
            cell.first += std::abs(it->second - v);
            ++cell.second;
        }
    {
        std::ofstream out(fs::path(out_dir) / "dm_matrix.csv");
        out << "model_a,model_b,days,statistic,p_value\n";
        for (const auto& [ma, da] : daily)
            for (const auto& [mb, db] : daily) {
                if (ma == mb) continue;
                std::vector<double> la, lb;
                for (const auto& [day, cell] : da) {
                    auto it = db.find(day);
                    if (it == db.end()) continue;
                    la.push_back(cell.first / cell.second);
                    lb.push_back(it->second.first / it->second.second);
                }
                if (la.size() < 30) continue;
                out << ma << ',' << mb << ',' << la.size() << ',';
                try {
                    DmResult r = dm_test(la, lb);
                    out << fmt(r.statistic) << ',' << fmt(r.p_value) << '\n';
                } catch (const NumericError&) {
                    out << "nan,nan\n";
                }
            }
    }

    // Distributional scores per (model, tag).
    std::ofstream crps_out(fs::path(out_dir) / "crps.csv");
    crps_out << "model,tag,n,mean_crps\n";
    std::ofstream pit_out(fs::path(out_dir) / "pit.csv");
    pit_out << "model,tag,n,chi_squared,p_value\n";
    for (const auto& model : list_subdirs(store / "quantiles"))
        for (const auto& tag : list_subdirs(store / "quantiles" / model)) {
            auto dists = read_quantile_dir(store / "quantiles" / model / tag);
            double crps_sum = 0.0;
            std::array<long, 20> bins{};
            long n = 0;
            for (const auto& [t, dist] : dists) {
                auto it = actuals.find(t);
                if (it == actuals.end()) continue;
                crps_sum += crps(dist, it->second);
                const double u = pit_value(dist, it->second);
                ++bins[std::min(19, static_cast<int>(u * 20.0))];
                ++n;
            }
            if (n == 0) continue;
            crps_out << model << ',' << tag << ',' << n << ',' << fmt(crps_sum / n) << '\n';
            const double expect = n / 20.0;
            double chi2 = 0.0;
            for (long b : bins) chi2 += (b - expect) * (b - expect) / expect;
            pit_out << model << ',' << tag << ',' << n << ',' << fmt(chi2) << ','
                    << fmt(chi_squared_p_value(chi2, 19)) << '\n';
        }

    if (fs::exists(store / "r2_summary.csv"))
        fs::copy_file(store / "r2_summary.csv", fs::path(out_dir) / "r2_summary.csv",
                      fs::copy_options::overwrite_existing);
}

void write_plot_data(const std::string& store_dir, const std::string& out_dir) {
    const fs::path store(store_dir);
    if (!fs::exists(store / "actuals.csv")) throw DataError("no actuals.csv in " + store_dir);
    fs::create_directories(out_dir);
    HourSeries actuals = read_point_file((store / "actuals.csv").string());

    std::ofstream mae_out(fs::path(out_dir) / "mae_by_hour.csv");
    mae_out << "model,hour,n,mae\n";
    for (const auto& model : list_subdirs(store / "points")) {
        HourSeries series = read_point_dir(store / "points" / model);
        std::array<double, 24> err{};
        std::array<long, 24> cnt{};
        for (const auto& [t, v] : series) {
            auto it = actuals.find(t);
            if (it == actuals.end()) continue;
            err[hour_of(t)] += std::abs(it->second - v);
            ++cnt[hour_of(t)];
        }
        for (int h = 0; h < 24; ++h)
            if (cnt[h] > 0)
                mae_out << model << ',' << h << ',' << cnt[h] << ',' << fmt(err[h] / cnt[h])
                        << '\n';
    }

    std::ofstream crps_out(fs::path(out_dir) / "crps_by_hour.csv");
    crps_out << "model,tag,hour,n,mean_crps\n";
    for (const auto& model : list_subdirs(store / "quantiles"))
        for (const auto& tag : list_subdirs(store / "quantiles" / model)) {
            auto dists = read_quantile_dir(store / "quantiles" / model / tag);
            std::array<double, 24> sum{};
            std::array<long, 24> cnt{};
            for (const auto& [t, dist] : dists) {
                auto it = actuals.find(t);
                if (it == actuals.end()) continue;
                sum[hour_of(t)] += crps(dist, it->second);
                ++cnt[hour_of(t)];
            }
            for (int h = 0; h < 24; ++h)
                if (cnt[h] > 0)
                    crps_out << model << ',' << tag << ',' << h << ',' << cnt[h] << ','
                             << fmt(sum[h] / cnt[h]) << '\n';
        }
}

}  // namespace mocf
