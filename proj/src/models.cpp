#include "mocf/models.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "mocf/errors.hpp"

namespace mocf {
namespace {

constexpr int kDayLags[] = {1, 2, 3, 7};
constexpr int kExogLags[] = {0, 1, 7};
constexpr int kMaxLag = 7;

std::string col(const std::string& base, int lag) {
    return base + "_l" + std::to_string(lag);
}

}  // namespace

const char* variant_name(ModelVariant v) {
    switch (v) {
        case ModelVariant::Naive: return "naive";
        case ModelVariant::Arx: return "arx";
        case ModelVariant::Farx: return "farx";
        case ModelVariant::Varx: return "varx";
        case ModelVariant::Fvarx: return "fvarx";
        case ModelVariant::Lear: return "lear";
    }
    return "?";
}

HolidayCalendar HolidayCalendar::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open holiday file: " + path);
    HolidayCalendar cal;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        try {
            cal.bank_holidays.insert(parse_date_iso(line));
        } catch (const std::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cal;
}

HolidayCalendar HolidayCalendar::italian_defaults() {
    // National non-working days; enough coverage for backtests on recent data.
    static const char* dates[] = {
        "2023-01-01", "2023-01-06", "2023-04-10", "2023-04-25", "2023-05-01",
        "2023-06-02", "2023-08-15", "2023-11-01", "2023-12-08", "2023-12-25",
        "2023-12-26", "2024-01-01", "2024-01-06", "2024-04-01", "2024-04-25",
        "2024-05-01", "2024-06-02", "2024-08-15", "2024-11-01", "2024-12-08",
        "2024-12-25", "2024-12-26",
    };
    HolidayCalendar cal;
    for (const char* d : dates) cal.bank_holidays.insert(parse_date_iso(d));
    return cal;
}

std::array<double, 3> day_type_dummies(DayStamp day, const HolidayCalendar& calendar) {
    int wd = weekday(day);  // 0 = Monday
    if (wd == 6 || calendar.is_bank_holiday(day)) return {0.0, 0.0, 1.0};
    if (wd == 0) return {1.0, 0.0, 0.0};
    if (wd == 5) return {0.0, 1.0, 0.0};
    return {0.0, 0.0, 0.0};
}

int naive_lag_days(DayStamp day, const HolidayCalendar& calendar) {
    int wd = weekday(day);
    if (wd == 0 || wd == 5 || wd == 6 || calendar.is_bank_holiday(day)) return 7;
    return 1;
}

FeatureSchema feature_schema(ModelVariant variant, int hour, int component, int dim_y,
                             int dim_x) {
    FeatureSchema s;
    auto push = [&](const std::string& name, int lag) {
        s.names.push_back(name);
        s.day_lags.push_back(lag);
    };
    char buf[64];
    switch (variant) {
        case ModelVariant::Naive:
            return s;
        case ModelVariant::Arx:
        case ModelVariant::Lear:
            // ARX: own component at the same hour. LEAR: dim_y == 1 but every
            // hour of the day enters (as do all-hour exogenous lags).
            if (variant == ModelVariant::Arx) {
                for (int lag : kDayLags) push(col("y" + std::to_string(component), lag), lag);
            } else {
                for (int lag : kDayLags)
                    for (int j = 0; j < 24; ++j) {
                        std::snprintf(buf, sizeof(buf), "y_h%02d_l%d", j, lag);
                        push(buf, lag);
                    }
            }
            break;
        case ModelVariant::Farx:
            for (int lag : kDayLags)
                for (int j = 0; j < 24; ++j) {
                    std::snprintf(buf, sizeof(buf), "y%d_h%02d_l%d", component, j, lag);
                    push(buf, lag);
                }
            break;
        case ModelVariant::Varx:
            for (int lag : kDayLags)
                for (int k = 0; k < dim_y; ++k) {
                    std::snprintf(buf, sizeof(buf), "y%d_l%d", k, lag);
                    push(buf, lag);
                }
            break;
        case ModelVariant::Fvarx:
            // Own component across the other 23 hours plus the full vector at
            // the forecast hour, per lag.
            for (int lag : kDayLags) {
                for (int j = 0; j < 24; ++j) {
                    if (j == hour) {
                        for (int k = 0; k < dim_y; ++k) {
                            std::snprintf(buf, sizeof(buf), "y%d_h%02d_l%d", k, j, lag);
                            push(buf, lag);
                        }
                    } else {
                        std::snprintf(buf, sizeof(buf), "y%d_h%02d_l%d", component, j, lag);
                        push(buf, lag);
                    }
                }
            }
            break;
    }
    if (variant == ModelVariant::Lear) {
        for (int lag : kExogLags)
            for (int j = 0; j < 24; ++j)
                for (int e = 0; e < dim_x; ++e) {
                    std::snprintf(buf, sizeof(buf), "x%d_h%02d_l%d", e, j, lag);
                    push(buf, lag);
                }
    } else {
        for (int lag : kExogLags)
            for (int e = 0; e < dim_x; ++e) push(col("x" + std::to_string(e), lag), lag);
    }
    push("d_monday", 0);
    push("d_saturday", 0);
    push("d_holiday", 0);
    return s;
}

FeatureRow build_features(ModelVariant variant, int hour, int component, int day,
                          const DayHourPanel& panel, const HolidayCalendar& calendar) {
    if (day < kMaxLag) throw ConfigError("feature row needs at least 7 days of history");
    FeatureRow row;
    std::vector<double> v;
    auto push_y = [&](int src_day, int src_hour, int k) {
        v.push_back(panel.y_at(src_day, src_hour)(k));
        row.source_days.push_back(src_day);
    };
    auto push_x = [&](int src_day, int src_hour, int e) {
        v.push_back(panel.x_at(src_day, src_hour)(e));
        row.source_days.push_back(src_day);
    };
    switch (variant) {
        case ModelVariant::Naive:
            throw ConfigError("the naive rule has no feature row");
        case ModelVariant::Arx:
            for (int lag : kDayLags) push_y(day - lag, hour, component);
            break;
        case ModelVariant::Lear:
        case ModelVariant::Farx:
            for (int lag : kDayLags)
                for (int j = 0; j < 24; ++j) push_y(day - lag, j, component);
            break;
        case ModelVariant::Varx:
            for (int lag : kDayLags)
                for (int k = 0; k < panel.dim_y; ++k) push_y(day - lag, hour, k);
            break;
        case ModelVariant::Fvarx:
            for (int lag : kDayLags)
                for (int j = 0; j < 24; ++j) {
                    if (j == hour)
                        for (int k = 0; k < panel.dim_y; ++k) push_y(day - lag, j, k);
                    else
                        push_y(day - lag, j, component);
                }
            break;
    }
    if (variant == ModelVariant::Lear) {
        for (int lag : kExogLags)
            for (int j = 0; j < 24; ++j)
                for (int e = 0; e < panel.dim_x; ++e) push_x(day - lag, j, e);
    } else {
        for (int lag : kExogLags)
            for (int e = 0; e < panel.dim_x; ++e) push_x(day - lag, hour, e);
    }
    auto z = day_type_dummies(panel.stamp(day), calendar);
    for (double zd : z) {
        v.push_back(zd);
        row.source_days.push_back(-1);
    }
    row.values = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    return row;
}

namespace {

void fit_hour(ModelVariant variant, const DayHourPanel& panel, const HolidayCalendar& calendar,
              int train_begin, int train_end, int hour, std::vector<LassoFit>& out) {
    int first_target = std::max(train_begin, kMaxLag);
    int n = train_end - first_target + 1;
    if (n < 10) throw ConfigError("training window too short: " + std::to_string(n) + " days");
    out.resize(panel.dim_y);
    for (int k = 0; k < panel.dim_y; ++k) {
        FeatureSchema schema = feature_schema(variant, hour, k, panel.dim_y, panel.dim_x);
        DesignMatrix design;
        design.column_names = schema.names;
        design.column_day_lags = schema.day_lags;
        design.x.resize(n, static_cast<Eigen::Index>(schema.names.size()));
        Eigen::VectorXd resp(n);
        for (int i = 0; i < n; ++i) {
            int d = first_target + i;
            FeatureRow row = build_features(variant, hour, k, d, panel, calendar);
            design.x.row(i) = row.values.transpose();
            resp(i) = panel.y_at(d, hour)(k);
        }
        double lambda = lars_lambda_by_aic(design.x, resp);
        out[k] = fit_lasso_cd(design.x, resp, lambda);
        out[k].column_names = design.column_names;
    }
}

}  // namespace

FittedDayModel fit_day_ahead(ModelVariant variant, const DayHourPanel& panel,
                             const HolidayCalendar& calendar, int train_begin, int train_end,
                             int jobs) {
    FittedDayModel model;
    model.variant = variant;
    model.dim_y = panel.dim_y;
    model.dim_x = panel.dim_x;
    if (variant == ModelVariant::Naive) return model;
    model.fits.resize(24);
    if (jobs <= 1) {
        for (int h = 0; h < 24; ++h)
            fit_hour(variant, panel, calendar, train_begin, train_end, h, model.fits[h]);
        return model;
    }
    // Hours are independent fits; results are written to disjoint slots, so
    // the outcome does not depend on the thread count.
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(jobs);
    for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w]() {
            try {
                for (int h = w; h < 24; h += jobs)
                    fit_hour(variant, panel, calendar, train_begin, train_end, h, model.fits[h]);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return model;
}

Eigen::MatrixXd predict_day(const FittedDayModel& model, const DayHourPanel& panel,
                            const HolidayCalendar& calendar, int day) {
    Eigen::MatrixXd out(24, model.dim_y);
    if (model.variant == ModelVariant::Naive) {
        int lag = naive_lag_days(panel.stamp(day), calendar);
        if (day - lag < 0) lag = 1;
        for (int h = 0; h < 24; ++h) out.row(h) = panel.y_at(day - lag, h).transpose();
        return out;
    }
    for (int h = 0; h < 24; ++h)
        for (int k = 0; k < model.dim_y; ++k) {
            FeatureRow row = build_features(model.variant, h, k, day, panel, calendar);
            out(h, k) = model.fits[h][k].predict(row.values);
        }
    return out;
}

int audit_leakage(ModelVariant variant, int hour, int component, int day,
                  const DayHourPanel& panel, const HolidayCalendar& calendar) {
    FeatureRow row = build_features(variant, hour, component, day, panel, calendar);
    FeatureSchema schema = feature_schema(variant, hour, component, panel.dim_y, panel.dim_x);
    if (row.source_days.size() != schema.day_lags.size())
        throw NumericError("feature row / schema size mismatch");
    int violations = 0;
    for (size_t c = 0; c < row.source_days.size(); ++c) {
        int src = row.source_days[c];
        if (src < 0) continue;  // calendar dummies carry no panel data
        // Only exogenous lag-0 columns may touch day `day` itself.
        bool exog_day_d = schema.names[c][0] == 'x' && schema.day_lags[c] == 0;
        if (src > day || (src == day && !exog_day_d)) ++violations;
        if (src != day - schema.day_lags[c]) ++violations;  // schema metadata must match
    }
    return violations;
}

void export_model_csv(const FittedDayModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    out << "hour,component,column,coefficient\n";
    for (int h = 0; h < static_cast<int>(model.fits.size()); ++h)
        for (int k = 0; k < static_cast<int>(model.fits[h].size()); ++k) {
            const LassoFit& f = model.fits[h][k];
            out << h << ',' << k << ",(intercept)," << f.intercept << '\n';
            for (int c = 0; c < f.coefficients.size(); ++c) {
                if (f.coefficients(c) == 0.0) continue;
                out << h << ',' << k << ',' << f.column_names[c] << ',' << f.coefficients(c)
                    << '\n';
            }
        }
}

}  // namespace mocf
