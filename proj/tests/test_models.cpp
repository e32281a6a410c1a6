#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "mocf/errors.hpp"
#include "mocf/models.hpp"
#include "mocf/rng.hpp"

using namespace mocf;

namespace {

DayStamp next_weekday(DayStamp from, int wd) {
    while (weekday(from) != wd) ++from;
    return from;
}

// Panel with AR(1) target dynamics at the day scale plus i.i.d. exogenous
// noise, identical across hours.
DayHourPanel ar1_panel(int days, int dim_y, int dim_x, double phi, double noise, Rng& rng) {
    DayHourPanel panel;
    panel.first_day = parse_date_iso("2023-01-02");  // a Monday
    panel.dim_y = dim_y;
    panel.dim_x = dim_x;
    panel.y.resize(static_cast<size_t>(days) * 24);
    panel.x.resize(static_cast<size_t>(days) * 24);
    std::vector<Eigen::VectorXd> state(24, Eigen::VectorXd::Zero(dim_y));
    for (int d = 0; d < days; ++d)
        for (int h = 0; h < 24; ++h) {
            Eigen::VectorXd eps(dim_y);
            for (int k = 0; k < dim_y; ++k) eps(k) = noise * rng.gaussian();
            state[h] = phi * state[h] + eps;
            panel.y[static_cast<size_t>(d) * 24 + h] = state[h];
            Eigen::VectorXd x(dim_x);
            for (int k = 0; k < dim_x; ++k) x(k) = rng.gaussian();
            panel.x[static_cast<size_t>(d) * 24 + h] = x;
        }
    return panel;
}

}  // namespace

TEST_CASE("feature column counts per variant") {
    // own lags {1,2,3,7}, exogenous lags {0,1,7}, 3 day-type dummies
    CHECK(feature_schema(ModelVariant::Arx, 5, 0, 1, 4).names.size() == 4 + 3 * 4 + 3);
    CHECK(feature_schema(ModelVariant::Farx, 5, 0, 1, 4).names.size() == 4 * 24 + 3 * 4 + 3);
    CHECK(feature_schema(ModelVariant::Varx, 5, 2, 10, 4).names.size() == 4 * 10 + 3 * 4 + 3);
    CHECK(feature_schema(ModelVariant::Fvarx, 5, 2, 10, 4).names.size() ==
          4 * 10 + 3 * 4 + 95);  // full vector at the forecast hour, own component elsewhere
    CHECK(feature_schema(ModelVariant::Lear, 5, 0, 1, 2).names.size() ==
          4 * 24 + 3 * 24 * 2 + 3);
}

TEST_CASE("schema and rows agree, and fVARX mixes hours as documented") {
    Rng rng(4);
    DayHourPanel panel = ar1_panel(20, 3, 2, 0.5, 1.0, rng);
    HolidayCalendar cal;  // empty

    for (auto variant : {ModelVariant::Arx, ModelVariant::Farx, ModelVariant::Varx,
                         ModelVariant::Fvarx, ModelVariant::Lear}) {
        FeatureSchema schema = feature_schema(variant, 7, 1, panel.dim_y, panel.dim_x);
        FeatureRow row = build_features(variant, 7, 1, 10, panel, cal);
        REQUIRE(row.values.size() == static_cast<Eigen::Index>(schema.names.size()));
        REQUIRE(row.source_days.size() == schema.names.size());
        REQUIRE(schema.day_lags.size() == schema.names.size());
        // bookkeeping consistency: each lagged column reads day - lag
        for (size_t c = 0; c < schema.names.size(); ++c)
            if (row.source_days[c] >= 0) CHECK(row.source_days[c] == 10 - schema.day_lags[c]);
    }

    // fVARX: lagged target columns at hours other than the forecast hour
    // involve only the response component; the forecast hour carries the
    // whole vector.
    FeatureSchema fv = feature_schema(ModelVariant::Fvarx, 7, 1, 3, 2);
    int own_other_hours = 0, full_at_hour = 0;
    for (const auto& name : fv.names) {
        if (name.empty() || name[0] != 'y') continue;
        const bool at_hour = name.find("h07") != std::string::npos;
        if (at_hour)
            ++full_at_hour;
        else
            ++own_other_hours;
    }
    CHECK(full_at_hour == 4 * 3);        // 4 lags x K components
    CHECK(own_other_hours == 4 * 23);    // 4 lags x 23 other hours, own component
}

TEST_CASE("day-type dummies and precedence") {
    HolidayCalendar cal;
    cal.bank_holidays.insert(parse_date_iso("2023-05-01"));  // a Monday

    auto sum = [](std::array<double, 3> z) { return z[0] + z[1] + z[2]; };
    const DayStamp monday = parse_date_iso("2023-01-02");
    CHECK(day_type_dummies(monday, cal) == std::array<double, 3>{1, 0, 0});
    CHECK(day_type_dummies(monday + 5, cal) == std::array<double, 3>{0, 1, 0});  // Saturday
    CHECK(day_type_dummies(monday + 6, cal) == std::array<double, 3>{0, 0, 1});  // Sunday
    CHECK(sum(day_type_dummies(monday + 1, cal)) == 0);                          // Tuesday
    // bank holiday beats the Monday flag
    CHECK(day_type_dummies(parse_date_iso("2023-05-01"), cal) ==
          std::array<double, 3>{0, 0, 1});
}

TEST_CASE("naive lag rule") {
    HolidayCalendar cal = HolidayCalendar::italian_defaults();
    const DayStamp monday = next_weekday(parse_date_iso("2023-03-01"), 0);
    CHECK(naive_lag_days(monday, cal) == 7);
    CHECK(naive_lag_days(monday + 1, cal) == 1);  // Tuesday
    CHECK(naive_lag_days(monday + 5, cal) == 7);  // Saturday
    CHECK(naive_lag_days(monday + 6, cal) == 7);  // Sunday
    // Italian national holiday on a weekday (2023-04-25 is a Tuesday)
    CHECK(naive_lag_days(parse_date_iso("2023-04-25"), cal) == 7);
}

TEST_CASE("ARX recovers the lag-1 coefficient of a simulated AR(1)") {
    Rng rng(11);
    DayHourPanel panel = ar1_panel(372, 1, 1, 0.7, 0.3, rng);
    HolidayCalendar cal;
    FittedDayModel model = fit_day_ahead(ModelVariant::Arx, panel, cal, 0, 370);
    REQUIRE(model.fits.size() == 24);
    int hit = 0;
    for (int h = 0; h < 24; ++h) {
        const LassoFit& fit = model.fits[h][0];
        if (std::abs(fit.coefficients(0) - 0.7) < 0.15) ++hit;
    }
    CHECK(hit >= 20);  // allow a few noisy hours
}

TEST_CASE("fitting is deterministic across repeats and thread counts") {
    Rng rng(23);
    DayHourPanel panel = ar1_panel(60, 2, 1, 0.6, 0.5, rng);
    HolidayCalendar cal;
    FittedDayModel a = fit_day_ahead(ModelVariant::Varx, panel, cal, 0, 58, 1);
    FittedDayModel b = fit_day_ahead(ModelVariant::Varx, panel, cal, 0, 58, 4);
    for (int h = 0; h < 24; ++h)
        for (int k = 0; k < 2; ++k) {
            CHECK(a.fits[h][k].intercept == b.fits[h][k].intercept);
            CHECK((a.fits[h][k].coefficients == b.fits[h][k].coefficients));
            CHECK(a.fits[h][k].lambda == b.fits[h][k].lambda);
        }
    Eigen::MatrixXd pa = predict_day(a, panel, cal, 59);
    Eigen::MatrixXd pb = predict_day(b, panel, cal, 59);
    CHECK((pa.array() == pb.array()).all());
}

TEST_CASE("constant target collapses to the intercept") {
    Rng rng(2);
    DayHourPanel panel = ar1_panel(40, 1, 1, 0.0, 1.0, rng);
    for (auto& v : panel.y) v.setConstant(8.25);
    HolidayCalendar cal;
    FittedDayModel model = fit_day_ahead(ModelVariant::Arx, panel, cal, 0, 38);
    Eigen::MatrixXd pred = predict_day(model, panel, cal, 39);
    for (int h = 0; h < 24; ++h) {
        CHECK(model.fits[h][0].coefficients.cwiseAbs().maxCoeff() == 0.0);
        CHECK(pred(h, 0) == doctest::Approx(8.25));
    }
}

TEST_CASE("naive prediction copies the source day") {
    Rng rng(7);
    DayHourPanel panel = ar1_panel(30, 2, 1, 0.4, 1.0, rng);
    HolidayCalendar cal;
    FittedDayModel naive;
    naive.variant = ModelVariant::Naive;
    naive.dim_y = 2;
    naive.dim_x = 1;
    const int day = 22;
    const int lag = naive_lag_days(panel.stamp(day), cal);
    Eigen::MatrixXd pred = predict_day(naive, panel, cal, day);
    for (int h = 0; h < 24; ++h)
        for (int k = 0; k < 2; ++k) CHECK(pred(h, k) == panel.y_at(day - lag, h)(k));
}

TEST_CASE("leakage audit is clean for every variant") {
    Rng rng(19);
    DayHourPanel panel = ar1_panel(25, 2, 2, 0.5, 1.0, rng);
    HolidayCalendar cal;
    for (auto variant : {ModelVariant::Arx, ModelVariant::Farx, ModelVariant::Varx,
                         ModelVariant::Fvarx, ModelVariant::Lear})
        for (int h : {0, 7, 23})
            CHECK(audit_leakage(variant, h, 1, 20, panel, cal) == 0);
}

TEST_CASE("holiday calendar file handling") {
    const std::string path = "/tmp/mocf_test_holidays.txt";
    {
        std::ofstream out(path);
        out << "# national holidays\n2023-04-25\n\n2023-05-01\n";
    }
    HolidayCalendar cal = HolidayCalendar::load(path);
    CHECK(cal.bank_holidays.size() == 2);
    CHECK(cal.is_bank_holiday(parse_date_iso("2023-04-25")));
    CHECK(!cal.is_bank_holiday(parse_date_iso("2023-04-26")));
    std::remove(path.c_str());

    CHECK_THROWS_AS(HolidayCalendar::load("/nonexistent/holidays.txt"), ConfigError);
    {
        std::ofstream out(path);
        out << "not-a-date\n";
    }
    CHECK_THROWS(HolidayCalendar::load(path));
    std::remove(path.c_str());
}
