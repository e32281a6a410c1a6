#pragma once

// Day-ahead model zoo: the hourly panel, calendar dummies, feature
// construction for ARX / fARX / VARX / fVARX / LEAR, LASSO fitting with
// LARS-AIC lambda selection, prediction and the naive rule.

#include <Eigen/Dense>
#include <set>
#include <string>
#include <vector>

#include "mocf/regression.hpp"
#include "mocf/time.hpp"

namespace mocf {

enum class ModelVariant { Naive, Arx, Farx, Varx, Fvarx, Lear };

const char* variant_name(ModelVariant v);

struct HolidayCalendar {
    std::set<DayStamp> bank_holidays;

    static HolidayCalendar load(const std::string& path);  // one ISO date per line
    static HolidayCalendar italian_defaults();             // national holidays 2023-2024

    bool is_bank_holiday(DayStamp d) const { return bank_holidays.count(d) > 0; }
};

// z_d: {Monday, Saturday, Holiday (Sunday or bank holiday)}; working days are
// all-zero. A bank holiday takes precedence over the weekday flags.
std::array<double, 3> day_type_dummies(DayStamp day, const HolidayCalendar& calendar);

// Naive rule: previous same weekday for Monday/Saturday/Sunday-class days,
// previous day otherwise.
int naive_lag_days(DayStamp day, const HolidayCalendar& calendar);

// Hourly panel indexed by (day offset, hour): target vectors y (K components)
// and exogenous vectors x (r components).
struct DayHourPanel {
    DayStamp first_day = 0;
    int dim_y = 0;
    int dim_x = 0;
    std::vector<Eigen::VectorXd> y;  // (day * 24 + hour)
    std::vector<Eigen::VectorXd> x;

    int num_days() const { return static_cast<int>(y.size()) / 24; }
    const Eigen::VectorXd& y_at(int day, int hour) const {
        return y[static_cast<size_t>(day) * 24 + hour];
    }
    const Eigen::VectorXd& x_at(int day, int hour) const {
        return x[static_cast<size_t>(day) * 24 + hour];
    }
    DayStamp stamp(int day) const { return first_day + day; }
};

// One model row. Alongside the feature values the builder records the panel
// day each value was read from, which feeds the leakage audit.
struct FeatureRow {
    Eigen::VectorXd values;
    std::vector<int> source_days;  // panel day index per column; -1 for dummies
};

// Column schema shared by all rows of an (hour, component) fit.
struct FeatureSchema {
    std::vector<std::string> names;
    std::vector<int> day_lags;  // 0 marks day-d values (exogenous lag 0, dummies)
};

FeatureSchema feature_schema(ModelVariant variant, int hour, int component, int dim_y, int dim_x);

// Feature vector for forecasting day `day` of the panel (component matters
// for fVARX only).
FeatureRow build_features(ModelVariant variant, int hour, int component, int day,
                          const DayHourPanel& panel, const HolidayCalendar& calendar);

struct FittedDayModel {
    ModelVariant variant = ModelVariant::Naive;
    int dim_y = 0;
    int dim_x = 0;
    // fits[hour][component]; empty for the naive rule
    std::vector<std::vector<LassoFit>> fits;
};

// Fits 24 hourly regressions (one LASSO per response component) on panel days
// [train_begin+7, train_end]; lambda per fit from the LARS-AIC path.
FittedDayModel fit_day_ahead(ModelVariant variant, const DayHourPanel& panel,
                             const HolidayCalendar& calendar, int train_begin, int train_end,
                             int jobs = 1);

// Predicts the 24 target vectors of panel day `day` (requires day >= 7 and
// exogenous data for `day`). Naive applies the weekday rule directly.
Eigen::MatrixXd predict_day(const FittedDayModel& model, const DayHourPanel& panel,
                            const HolidayCalendar& calendar, int day);

// Verifies that no feature of a day-`day` forecast was read from panel day
// >= day, except exogenous lag-0 and dummies. Returns the violation count.
int audit_leakage(ModelVariant variant, int hour, int component, int day,
                  const DayHourPanel& panel, const HolidayCalendar& calendar);

// Coefficient dump for inspection: one CSV row per (hour, component, column).
void export_model_csv(const FittedDayModel& model, const std::string& path);

}  // namespace mocf
