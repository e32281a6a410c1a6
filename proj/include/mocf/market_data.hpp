#pragma once

// Hourly order-book snapshots, exogenous predictors and market-coupling
// flows: CSV ingestion, validation, coupling adjustment and the synthetic
// data generator used for desk-scale experiments.

#include <cstdint>
#include <string>
#include <vector>

#include "mocf/time.hpp"

namespace mocf {

inline constexpr double kPriceFloor = -500.0;  // EUR/MWh, full bidding domain
inline constexpr double kPriceCap = 3000.0;
inline constexpr double kDomainLo = 0.0;  // restricted analysis domain
inline constexpr double kDomainHi = 300.0;

enum class Side { Supply, Demand };

inline const char* side_name(Side s) { return s == Side::Supply ? "supply" : "demand"; }

struct OrderRecord {
    HourStamp timestamp = 0;
    Side side = Side::Supply;
    double price = 0.0;     // EUR/MWh, within [-500, 3000]
    double quantity = 0.0;  // MWh, strictly positive
};

struct ExogenousRecord {
    HourStamp timestamp = 0;
    double load_forecast = 0.0;  // MWh
    double ntc_fr = 0.0;         // MW
    double ntc_ch = 0.0;         // MW
    double res_forecast = 0.0;   // MWh
};

struct CouplingRecord {
    HourStamp timestamp = 0;
    double imports = 0.0;  // MWh
    double exports = 0.0;  // MWh
};

struct MarketSnapshot {
    HourStamp timestamp = 0;
    std::vector<OrderRecord> supply_orders;  // sorted by non-decreasing price
    std::vector<OrderRecord> demand_orders;  // sorted by non-increasing price
    CouplingRecord coupling;
};

// --- CSV ingestion --------------------------------------------------------
// Schemas (UTF-8, ISO-8601 timestamps, dot decimal separator):
//   orders:    timestamp,side,price_eur_mwh,quantity_mwh
//   exogenous: timestamp,load_fc,ntc_fr,ntc_ch,res_fc
//   coupling:  timestamp,imports_mwh,exports_mwh

std::vector<MarketSnapshot> parse_order_book(const std::string& path);
std::vector<ExogenousRecord> parse_exogenous(const std::string& path);
// Attaches coupling records to matching snapshots in place.
void parse_coupling(const std::string& path, std::vector<MarketSnapshot>& snapshots);

void write_order_book(const std::string& path, const std::vector<MarketSnapshot>& snapshots);
void write_exogenous(const std::string& path, const std::vector<ExogenousRecord>& records);
void write_coupling(const std::string& path, const std::vector<MarketSnapshot>& snapshots);

// --- Market coupling ------------------------------------------------------
// Net imports are appended to supply at the minimum price (they are always
// accepted); net exports to demand at the maximum price. Net zero flow is an
// identity.
MarketSnapshot apply_market_coupling(const MarketSnapshot& snapshot);

// --- Synthetic generator --------------------------------------------------

struct SyntheticConfig {
    DayStamp start_day = 19358;      // 2023-01-01
    double base_load = 28000.0;      // MWh
    double res_capacity = 14000.0;   // MWh of renewable infeed at solar peak
    double price_noise = 1.0;        // thermal stack price jitter scale
};

struct SyntheticMarket {
    std::vector<MarketSnapshot> snapshots;
    std::vector<ExogenousRecord> exogenous;
};

// Deterministic given the seed. Curves exhibit daily/weekly seasonality and
// a renewable-driven low-price supply mass correlated with res_forecast; the
// clearing price always lies inside (0, 300). Requires days >= 8.
SyntheticMarket generate_synthetic_market(std::uint64_t seed, int days,
                                          const SyntheticConfig& config = {});

}  // namespace mocf
