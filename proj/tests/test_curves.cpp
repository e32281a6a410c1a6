#include <doctest.h>

#include <cmath>

#include "mocf/curves.hpp"
#include "mocf/errors.hpp"
#include "mocf/rng.hpp"

using namespace mocf;

namespace {

std::vector<OrderRecord> make_orders(Side side, std::initializer_list<std::pair<double, double>> pq) {
    std::vector<OrderRecord> out;
    for (auto [p, q] : pq) out.push_back({0, side, p, q});
    return out;
}

// Brute-force Q(p) straight from the definition.
double brute_q(const std::vector<OrderRecord>& orders, Side side, double p) {
    double sum = 0.0;
    for (const auto& o : orders)
        if ((side == Side::Supply && o.price <= p) || (side == Side::Demand && o.price >= p))
            sum += o.quantity;
    return sum;
}

}  // namespace

TEST_CASE("supply quantity curve from definition") {
    auto orders = make_orders(Side::Supply, {{10, 5}, {20, 3}});
    auto curve = build_quantity_curve(orders, Side::Supply);
    CHECK(curve.value_at(9) == 0.0);
    CHECK(curve.value_at(10) == 5.0);
    CHECK(curve.value_at(25) == 8.0);
}

TEST_CASE("demand quantity curve from definition") {
    auto orders = make_orders(Side::Demand, {{50, 4}, {30, 2}});
    auto curve = build_quantity_curve(orders, Side::Demand);
    CHECK(curve.value_at(40) == 4.0);
    CHECK(curve.value_at(20) == 6.0);
}

TEST_CASE("empty order list rejected") {
    CHECK_THROWS_AS(build_quantity_curve({}, Side::Supply), DataError);
}

TEST_CASE("curve matches brute-force sums on random orders") {
    Rng rng(42);
    for (Side side : {Side::Supply, Side::Demand}) {
        std::vector<OrderRecord> orders;
        for (int i = 0; i < 1000; ++i)
            orders.push_back({0, side, rng.uniform(-500, 3000), rng.uniform(0.1, 50)});
        auto curve = build_quantity_curve(orders, side);
        double total = 0;
        for (const auto& o : orders) total += o.quantity;
        CHECK(curve.total_quantity() == doctest::Approx(total).epsilon(1e-12));
        for (int i = 0; i < 100; ++i) {
            const double p = rng.uniform(-600, 3100);
            CHECK(curve.value_at(p) == doctest::Approx(brute_q(orders, side, p)).epsilon(1e-12));
        }
    }
}

TEST_CASE("monotonicity of breakpoints") {
    Rng rng(7);
    std::vector<OrderRecord> orders;
    for (int i = 0; i < 300; ++i)
        orders.push_back({0, Side::Supply, rng.uniform(0, 300), rng.uniform(0.1, 10)});
    auto curve = build_quantity_curve(orders, Side::Supply);
    for (size_t i = 1; i < curve.breakpoints.size(); ++i) {
        CHECK(curve.breakpoints[i].first > curve.breakpoints[i - 1].first);
        CHECK(curve.breakpoints[i].second >= curve.breakpoints[i - 1].second);
    }
}

TEST_CASE("restrict_domain identity and boundary mass") {
    auto inside = build_quantity_curve(make_orders(Side::Supply, {{10, 5}, {200, 3}}), Side::Supply);
    auto restricted = restrict_domain(inside, 0, 300);
    for (double p : {5.0, 10.0, 150.0, 299.0})
        CHECK(restricted.value_at(p) == inside.value_at(p));

    auto low = build_quantity_curve(make_orders(Side::Supply, {{-500, 7}, {50, 2}}), Side::Supply);
    auto r = restrict_domain(low, 0, 300);
    CHECK(r.value_at(0) == 7.0);
    CHECK(r.value_at(60) == 9.0);
}

TEST_CASE("restrict_domain pointwise oracle on random curve") {
    Rng rng(11);
    std::vector<OrderRecord> orders;
    for (int i = 0; i < 400; ++i)
        orders.push_back({0, Side::Demand, rng.uniform(-500, 3000), rng.uniform(0.1, 20)});
    auto curve = build_quantity_curve(orders, Side::Demand);
    auto restricted = restrict_domain(curve, 0, 300);
    for (int i = 0; i < 50; ++i) {
        const double p = rng.uniform(0.001, 299.999);
        CHECK(restricted.value_at(p) == doctest::Approx(curve.value_at(p)).epsilon(1e-12));
    }
}

TEST_CASE("symmetric crossing clears at the midpoint") {
    // supply Q(p) = p, demand Q(p) = 100 - p on integer breakpoints
    std::vector<OrderRecord> s, d;
    for (int p = 1; p <= 100; ++p) {
        s.push_back({0, Side::Supply, double(p), 1.0});
        d.push_back({0, Side::Demand, double(p - 1), 1.0});
    }
    auto sc = build_quantity_curve(s, Side::Supply);
    auto dc = build_quantity_curve(d, Side::Demand);
    auto cp = clear_market(sc, dc);
    CHECK(cp.price == doctest::Approx(50).epsilon(0.02));
    CHECK(cp.quantity == doctest::Approx(50).epsilon(0.02));
}

TEST_CASE("no intersection raises") {
    auto sc = build_quantity_curve(make_orders(Side::Supply, {{10, 1}}), Side::Supply);
    auto dc = build_quantity_curve(make_orders(Side::Demand, {{3000, 100}}), Side::Demand);
    CHECK_THROWS_AS(clear_market(sc, dc), NumericError);
}

TEST_CASE("clearing matches fine-grid scan on random pairs") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<OrderRecord> s, d;
        const double load = rng.uniform(100, 400);
        d.push_back({0, Side::Demand, 3000, load});
        for (int i = 0; i < 30; ++i)
            d.push_back({0, Side::Demand, rng.uniform(20, 290), rng.uniform(0.5, 10)});
        for (int i = 0; i < 60; ++i)
            s.push_back({0, Side::Supply, rng.uniform(0, 260), rng.uniform(5, 25)});
        auto sc = restrict_domain(build_quantity_curve(s, Side::Supply), 0, 300);
        auto dc = restrict_domain(build_quantity_curve(d, Side::Demand), 0, 300);
        if (sc.value_at(300) <= dc.value_at(300)) continue;  // needs a crossing

        auto cp = clear_market(sc, dc);
        // exhaustive scan over a 0.01 grid for the first sign change
        double scan_price = 300.0;
        double prev = dc.value_at(0) - sc.value_at(0);
        REQUIRE(prev > 0);
        for (double p = 0.01; p <= 300.0 + 1e-9; p += 0.01) {
            const double f = dc.value_at(p) - sc.value_at(p);
            if (f <= 0) {
                scan_price = p;
                break;
            }
            prev = f;
        }
        CHECK(std::abs(cp.price - scan_price) <= 0.0100001);
    }
}

TEST_CASE("clearing invariant under pre-merging equal prices") {
    std::vector<OrderRecord> s = {{0, Side::Supply, 10, 2}, {0, Side::Supply, 10, 3},
                                  {0, Side::Supply, 40, 8}};
    std::vector<OrderRecord> s_merged = {{0, Side::Supply, 10, 5}, {0, Side::Supply, 40, 8}};
    std::vector<OrderRecord> d = {{0, Side::Demand, 3000, 7}, {0, Side::Demand, 30, 4}};
    auto dc = build_quantity_curve(d, Side::Demand);
    auto p1 = clear_market(build_quantity_curve(s, Side::Supply), dc);
    auto p2 = clear_market(build_quantity_curve(s_merged, Side::Supply), dc);
    CHECK(p1.price == p2.price);
}
