#pragma once

// Merit-order quantity curves Q(p): cumulative quantity offered below
// (supply) or demanded above (demand) a price, and market clearing at the
// intersection of a supply/demand pair.

#include <utility>
#include <vector>

#include "mocf/market_data.hpp"

namespace mocf {

struct StepCurve {
    Side side = Side::Supply;
    // Breakpoints sorted by strictly increasing price. For supply the
    // cumulative quantity is non-decreasing in price; for demand
    // non-increasing. Q is right-continuous at each breakpoint for supply
    // (sum over p_i <= p) and left-continuous for demand (sum over p_i >= p).
    std::vector<std::pair<double, double>> breakpoints;  // (price, cumulative quantity)
    double p_min = kPriceFloor;
    double p_max = kPriceCap;

    double value_at(double price) const;
    double total_quantity() const;
};

struct ClearingPoint {
    double price = 0.0;
    double quantity = 0.0;
};

StepCurve build_quantity_curve(const std::vector<OrderRecord>& orders, Side side);

// Collapses breakpoints outside [p_min, p_max] into boundary evaluations.
// Curve values on the interior are unchanged.
StepCurve restrict_domain(const StepCurve& curve, double p_min, double p_max);

// Finds the price where Q_d - Q_s changes sign, linearly interpolating
// between the two bracketing evaluation prices. Throws NumericError when the
// curves do not cross. When D - S is exactly zero on a flat segment, the
// segment's lowest price is returned.
ClearingPoint clear_market(const StepCurve& supply, const StepCurve& demand);

}  // namespace mocf
