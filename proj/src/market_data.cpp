#include "mocf/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mocf/errors.hpp"
#include "mocf/rng.hpp"

namespace mocf {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& path, size_t line_no) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError(path + ":" + std::to_string(line_no) + ": malformed number '" + s + "'");
    }
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    return in;
}

void expect_header(std::ifstream& in, const std::string& expected, const std::string& path) {
    std::string header;
    if (!std::getline(in, header)) throw DataError(path + ": empty file");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != expected)
        throw DataError(path + ": unexpected header '" + header + "', expected '" + expected + "'");
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::vector<MarketSnapshot> parse_order_book(const std::string& path) {
    auto in = open_or_throw(path);
    expect_header(in, "timestamp,side,price_eur_mwh,quantity_mwh", path);

    std::vector<MarketSnapshot> snapshots;
    std::string line;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = split_csv(line);
        if (f.size() != 4)
            throw DataError(path + ":" + std::to_string(line_no) + ": expected 4 fields, got " +
                            std::to_string(f.size()));
        OrderRecord rec;
        try {
            rec.timestamp = parse_hour_iso(f[0]);
        } catch (const std::exception& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (f[1] == "supply")
            rec.side = Side::Supply;
        else if (f[1] == "demand")
            rec.side = Side::Demand;
        else
            throw DataError(path + ":" + std::to_string(line_no) + ": unknown side '" + f[1] + "'");
        rec.price = parse_double(f[2], path, line_no);
        rec.quantity = parse_double(f[3], path, line_no);
        if (rec.quantity <= 0.0)
            throw DataError(path + ":" + std::to_string(line_no) + ": quantity must be > 0");
        if (rec.price < kPriceFloor || rec.price > kPriceCap)
            throw DataError(path + ":" + std::to_string(line_no) + ": price outside [-500, 3000]");

        if (snapshots.empty() || snapshots.back().timestamp != rec.timestamp) {
            if (!snapshots.empty() && rec.timestamp < snapshots.back().timestamp)
                throw DataError(path + ":" + std::to_string(line_no) +
                                ": timestamps must be non-decreasing");
            snapshots.emplace_back();
            snapshots.back().timestamp = rec.timestamp;
            snapshots.back().coupling.timestamp = rec.timestamp;
        }
        auto& snap = snapshots.back();
        (rec.side == Side::Supply ? snap.supply_orders : snap.demand_orders).push_back(rec);
    }

    std::string gaps;
    for (size_t i = 1; i < snapshots.size(); ++i)
        for (HourStamp t = snapshots[i - 1].timestamp + 1; t < snapshots[i].timestamp; ++t)
            gaps += (gaps.empty() ? "" : ", ") + format_hour_iso(t);
    if (!gaps.empty()) throw DataError(path + ": missing hours: " + gaps);

    for (auto& snap : snapshots) {
        std::stable_sort(snap.supply_orders.begin(), snap.supply_orders.end(),
                         [](const auto& a, const auto& b) { return a.price < b.price; });
        std::stable_sort(snap.demand_orders.begin(), snap.demand_orders.end(),
                         [](const auto& a, const auto& b) { return a.price > b.price; });
    }
    return snapshots;
}

std::vector<ExogenousRecord> parse_exogenous(const std::string& path) {
    auto in = open_or_throw(path);
    expect_header(in, "timestamp,load_fc,ntc_fr,ntc_ch,res_fc", path);
    std::vector<ExogenousRecord> out;
    std::string line;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = split_csv(line);
        if (f.size() != 5)
            throw DataError(path + ":" + std::to_string(line_no) + ": expected 5 fields");
        ExogenousRecord rec;
        rec.timestamp = parse_hour_iso(f[0]);
        rec.load_forecast = parse_double(f[1], path, line_no);
        rec.ntc_fr = parse_double(f[2], path, line_no);
        rec.ntc_ch = parse_double(f[3], path, line_no);
        rec.res_forecast = parse_double(f[4], path, line_no);
        if (rec.load_forecast < 0 || rec.ntc_fr < 0 || rec.ntc_ch < 0 || rec.res_forecast < 0)
            throw DataError(path + ":" + std::to_string(line_no) + ": negative exogenous value");
        if (!out.empty() && rec.timestamp != out.back().timestamp + 1)
            throw DataError(path + ":" + std::to_string(line_no) + ": non-contiguous hour");
        out.push_back(rec);
    }
    return out;
}

void parse_coupling(const std::string& path, std::vector<MarketSnapshot>& snapshots) {
    auto in = open_or_throw(path);
    expect_header(in, "timestamp,imports_mwh,exports_mwh", path);
    std::string line;
    size_t line_no = 1;
    size_t idx = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = split_csv(line);
        if (f.size() != 3)
            throw DataError(path + ":" + std::to_string(line_no) + ": expected 3 fields");
        CouplingRecord rec;
        rec.timestamp = parse_hour_iso(f[0]);
        rec.imports = parse_double(f[1], path, line_no);
        rec.exports = parse_double(f[2], path, line_no);
        if (rec.imports < 0 || rec.exports < 0)
            throw DataError(path + ":" + std::to_string(line_no) + ": negative flow");
        while (idx < snapshots.size() && snapshots[idx].timestamp < rec.timestamp) ++idx;
        if (idx < snapshots.size() && snapshots[idx].timestamp == rec.timestamp)
            snapshots[idx].coupling = rec;
    }
}

void write_order_book(const std::string& path, const std::vector<MarketSnapshot>& snapshots) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "timestamp,side,price_eur_mwh,quantity_mwh\n";
    for (const auto& snap : snapshots) {
        const std::string ts = format_hour_iso(snap.timestamp);
        for (const auto& o : snap.supply_orders)
            out << ts << ",supply," << fmt(o.price) << ',' << fmt(o.quantity) << '\n';
        for (const auto& o : snap.demand_orders)
            out << ts << ",demand," << fmt(o.price) << ',' << fmt(o.quantity) << '\n';
    }
}

void write_exogenous(const std::string& path, const std::vector<ExogenousRecord>& records) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "timestamp,load_fc,ntc_fr,ntc_ch,res_fc\n";
    for (const auto& r : records)
        out << format_hour_iso(r.timestamp) << ',' << fmt(r.load_forecast) << ',' << fmt(r.ntc_fr)
            << ',' << fmt(r.ntc_ch) << ',' << fmt(r.res_forecast) << '\n';
}

void write_coupling(const std::string& path, const std::vector<MarketSnapshot>& snapshots) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "timestamp,imports_mwh,exports_mwh\n";
    for (const auto& snap : snapshots)
        out << format_hour_iso(snap.timestamp) << ',' << fmt(snap.coupling.imports) << ','
            << fmt(snap.coupling.exports) << '\n';
}

MarketSnapshot apply_market_coupling(const MarketSnapshot& snapshot) {
    MarketSnapshot out = snapshot;
    const double net = snapshot.coupling.imports - snapshot.coupling.exports;
    if (net > 0.0) {
        OrderRecord o{snapshot.timestamp, Side::Supply, kPriceFloor, net};
        out.supply_orders.insert(out.supply_orders.begin(), o);
    } else if (net < 0.0) {
        OrderRecord o{snapshot.timestamp, Side::Demand, kPriceCap, -net};
        out.demand_orders.insert(out.demand_orders.begin(), o);
    }
    return out;
}

// --- Synthetic generator ----------------------------------------------------

namespace {

// Hourly demand profile: night trough, morning ramp, evening peak.
double load_shape(int h) {
    return 0.82 + 0.13 * std::sin((h - 3.0) * 3.14159265358979 / 12.0) +
           0.06 * std::sin((h - 8.0) * 3.14159265358979 / 6.0);
}

// Solar bell centered at 13:00, zero at night.
double solar_shape(int h) {
    const double x = (h - 13.0) / 4.5;
    const double v = std::exp(-x * x) - std::exp(-4.0);
    return v > 0.0 ? v : 0.0;
}

// Thermal stack marginal price as a function of the stack utilization
// u in [0, 1]; tilt bends the high-price tail, level shifts the whole stack.
double stack_price(double u, double level, double tilt) {
    return (18.0 + 55.0 * u + 130.0 * (1.0 + 0.5 * tilt) * u * u * u) * level;
}

}  // namespace

SyntheticMarket generate_synthetic_market(std::uint64_t seed, int days,
                                          const SyntheticConfig& config) {
    if (days < 8) throw ConfigError("synthetic generator requires days >= 8 (models need 7 lags)");

    Rng rng(seed);
    SyntheticMarket market;
    market.snapshots.reserve(static_cast<size_t>(days) * 24);
    market.exogenous.reserve(static_cast<size_t>(days) * 24);

    // Daily latent factors, AR(1) with strong persistence so the score series
    // are predictable by the autoregressive models.
    double load_anom = 0.0;   // demand level anomaly
    double res_lat = 0.0;     // renewable availability
    double level_lat = 0.0;   // stack price level
    double tilt_lat = 0.0;    // stack tail tilt
    double wind_lat = 0.0;    // non-solar renewable infeed
    double ntc_fr = 2800.0, ntc_ch = 2200.0;

    const double stack_cap = 2.6 * config.base_load;
    constexpr int kStackOrders = 40;

    for (int d = 0; d < days; ++d) {
        const DayStamp day = config.start_day + d;
        const int dow = weekday(day);
        const bool weekend = dow >= 5;

        // Renewable availability is only weakly persistent: it is driven by
        // weather, so most of its day-to-day variation is visible through the
        // published forecasts rather than through yesterday's prices.
        load_anom = 0.90 * load_anom + 0.035 * rng.gaussian();
        res_lat = 0.55 * res_lat + 0.80 * rng.gaussian();
        level_lat = 0.93 * level_lat + 0.06 * rng.gaussian();
        tilt_lat = 0.90 * tilt_lat + 0.30 * rng.gaussian();
        wind_lat = 0.50 * wind_lat + 0.70 * rng.gaussian();
        ntc_fr = std::max(500.0, 2800.0 + 0.85 * (ntc_fr - 2800.0) + 120.0 * rng.gaussian());
        ntc_ch = std::max(500.0, 2200.0 + 0.85 * (ntc_ch - 2200.0) + 100.0 * rng.gaussian());

        const double day_load = (weekend ? 0.90 : 1.0) * (1.0 + load_anom);
        const double res_avail = 0.55 + 0.32 * std::tanh(res_lat);     // in (0.23, 0.87)
        const double wind_level = 0.25 + 0.15 * std::tanh(wind_lat);   // fraction of capacity
        const double stack_level = std::exp(0.8 * level_lat * 0.1) * (1.0 + 0.06 * level_lat);

        for (int h = 0; h < 24; ++h) {
            const HourStamp ts = make_hour(day, h);
            MarketSnapshot snap;
            snap.timestamp = ts;

            const double load = config.base_load * day_load * load_shape(h) *
                                (1.0 + 0.004 * rng.gaussian());
            const double res = config.res_capacity *
                               (res_avail * solar_shape(h) + wind_level * 0.55) *
                               (1.0 + 0.01 * rng.gaussian());

            // Supply: renewable mass near zero price, then the thermal stack.
            double rres = std::max(res, 100.0);
            for (int i = 0; i < 5; ++i) {
                OrderRecord o;
                o.timestamp = ts;
                o.side = Side::Supply;
                o.price = 0.1 + 0.6 * i + 0.2 * rng.uniform();
                o.quantity = rres / 5.0;
                snap.supply_orders.push_back(o);
            }
            for (int i = 1; i <= kStackOrders; ++i) {
                const double u = static_cast<double>(i) / kStackOrders;
                OrderRecord o;
                o.timestamp = ts;
                o.side = Side::Supply;
                o.price = stack_price(u, stack_level, tilt_lat) +
                          config.price_noise * 0.15 * rng.gaussian();
                o.price = std::min(std::max(o.price, 3.5), 2900.0);
                o.quantity = stack_cap / kStackOrders;
                snap.supply_orders.push_back(o);
            }

            // Demand: a large inelastic block plus a decreasing elastic tail.
            {
                OrderRecord o;
                o.timestamp = ts;
                o.side = Side::Demand;
                o.price = kPriceCap;
                o.quantity = load * 0.92;
                snap.demand_orders.push_back(o);
            }
            for (int i = 0; i < 12; ++i) {
                OrderRecord o;
                o.timestamp = ts;
                o.side = Side::Demand;
                o.price = 290.0 - 22.0 * i + 2.0 * rng.uniform();
                o.quantity = load * 0.08 / 12.0;
                snap.demand_orders.push_back(o);
            }

            // Coupling flows driven by the transfer capacities.
            snap.coupling.timestamp = ts;
            snap.coupling.imports = 0.55 * (ntc_fr + ntc_ch) * (0.9 + 0.1 * rng.uniform());
            snap.coupling.exports = 400.0 * (0.5 + rng.uniform());

            std::sort(snap.supply_orders.begin(), snap.supply_orders.end(),
                      [](const auto& a, const auto& b) { return a.price < b.price; });
            std::sort(snap.demand_orders.begin(), snap.demand_orders.end(),
                      [](const auto& a, const auto& b) { return a.price > b.price; });

            ExogenousRecord ex;
            ex.timestamp = ts;
            ex.load_forecast = load * (1.0 + 0.008 * rng.gaussian());
            ex.ntc_fr = ntc_fr;
            ex.ntc_ch = ntc_ch;
            ex.res_forecast = std::max(0.0, res * (1.0 + 0.02 * rng.gaussian()));

            market.snapshots.push_back(std::move(snap));
            market.exogenous.push_back(ex);
        }
    }
    return market;
}

}  // namespace mocf
