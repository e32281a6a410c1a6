#include "mocf/curves.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "mocf/errors.hpp"

namespace mocf {

double StepCurve::value_at(double price) const {
    if (side == Side::Supply) {
        // last breakpoint with bp.price <= price
        auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), price,
                                   [](double p, const auto& bp) { return p < bp.first; });
        if (it == breakpoints.begin()) return 0.0;
        return std::prev(it)->second;
    }
    // demand: first breakpoint with bp.price >= price
    auto it = std::lower_bound(breakpoints.begin(), breakpoints.end(), price,
                               [](const auto& bp, double p) { return bp.first < p; });
    if (it == breakpoints.end()) return 0.0;
    return it->second;
}

double StepCurve::total_quantity() const {
    if (breakpoints.empty()) return 0.0;
    return side == Side::Supply ? breakpoints.back().second : breakpoints.front().second;
}

StepCurve build_quantity_curve(const std::vector<OrderRecord>& orders, Side side) {
    if (orders.empty()) throw DataError("cannot build a quantity curve from an empty order list");
    std::vector<std::pair<double, double>> pq;
    pq.reserve(orders.size());
    for (const auto& o : orders) {
        if (o.side != side)
            throw DataError("order side mismatch while building a quantity curve");
        if (o.quantity <= 0.0) throw DataError("order quantity must be strictly positive");
        pq.emplace_back(o.price, o.quantity);
    }
    std::sort(pq.begin(), pq.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    StepCurve curve;
    curve.side = side;
    // merge equal prices into one breakpoint
    for (const auto& [p, q] : pq) {
        if (!curve.breakpoints.empty() && curve.breakpoints.back().first == p)
            curve.breakpoints.back().second += q;
        else
            curve.breakpoints.emplace_back(p, q);
    }
    if (side == Side::Supply) {
        double cum = 0.0;
        for (auto& bp : curve.breakpoints) {
            cum += bp.second;
            bp.second = cum;
        }
    } else {
        double cum = 0.0;
        for (auto it = curve.breakpoints.rbegin(); it != curve.breakpoints.rend(); ++it) {
            cum += it->second;
            it->second = cum;
        }
    }
    return curve;
}

StepCurve restrict_domain(const StepCurve& curve, double p_min, double p_max) {
    if (!(p_min < p_max)) throw ConfigError("restrict_domain requires p_min < p_max");
    StepCurve out;
    out.side = curve.side;
    out.p_min = p_min;
    out.p_max = p_max;
    const double q_lo = curve.value_at(p_min);
    const double q_hi = curve.value_at(p_max);
    out.breakpoints.emplace_back(p_min, q_lo);
    for (const auto& bp : curve.breakpoints)
        if (bp.first > p_min && bp.first < p_max) out.breakpoints.push_back(bp);
    if (out.breakpoints.back().first < p_max &&
        q_hi != out.breakpoints.back().second)
        out.breakpoints.emplace_back(p_max, q_hi);
    return out;
}

ClearingPoint clear_market(const StepCurve& supply, const StepCurve& demand) {
    if (supply.breakpoints.empty() || demand.breakpoints.empty())
        throw DataError("clear_market requires non-empty curves");

    const double lo = std::max(supply.p_min, demand.p_min);
    const double hi = std::min(supply.p_max, demand.p_max);

    std::vector<double> prices;
    prices.push_back(lo);
    for (const auto& bp : supply.breakpoints)
        if (bp.first > lo && bp.first < hi) prices.push_back(bp.first);
    for (const auto& bp : demand.breakpoints)
        if (bp.first > lo && bp.first < hi) prices.push_back(bp.first);
    prices.push_back(hi);
    std::sort(prices.begin(), prices.end());
    prices.erase(std::unique(prices.begin(), prices.end()), prices.end());

    const size_t n = prices.size();
    std::vector<double> s(n), d(n);
    for (size_t i = 0; i < n; ++i) {
        s[i] = supply.value_at(prices[i]);
        d[i] = demand.value_at(prices[i]);
    }

    // D - S is a non-increasing step function. It can turn non-positive
    // either AT a price (supply is right-continuous and jumps there) or just
    // AFTER one (demand is left-continuous and drops beyond it), so each
    // price is evaluated together with the open interval that follows it.
    // The clearing price is the infimum of {p : D(p) - S(p) <= 0}.
    size_t cross = n;
    bool at_price = true;
    for (size_t i = 0; i < n; ++i) {
        if (d[i] - s[i] <= 0.0) {
            cross = i;
            at_price = true;
            break;
        }
        if (i + 1 < n) {
            // value on (prices[i], prices[i+1]): supply holds, demand drops
            const double f_open = d[i + 1] - s[i];
            if (f_open <= 0.0) {
                cross = i;
                at_price = false;
                break;
            }
        }
    }
    if (cross == n) throw NumericError("curves do not intersect: demand above supply everywhere");
    if (cross == 0 && at_price && d[0] - s[0] < 0.0)
        throw NumericError("curves do not intersect: demand below supply at the domain start");

    int extra_changes = 0;
    bool below = true;
    for (size_t i = cross + 1; i < n; ++i) {
        const bool b = d[i] - s[i] <= 0.0;
        if (b != below) ++extra_changes, below = b;
    }
    if (extra_changes > 0)
        std::cerr << "clear_market: " << extra_changes
                  << " additional sign change(s); returning the lowest-price crossing\n";

    // Traded quantity is the smaller curve value at (or just beyond) the
    // crossing; ties where D - S = 0 already resolve to the segment's lowest
    // price because the scan stops at the first qualifying index.
    const double quantity = at_price ? std::min(s[cross], d[cross])
                                     : std::min(s[cross], d[cross + 1]);
    return ClearingPoint{prices[cross], quantity};
}

}  // namespace mocf
