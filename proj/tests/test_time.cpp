#include <doctest.h>

#include "mocf/time.hpp"

using namespace mocf;

TEST_CASE("civil date round trip") {
    for (DayStamp d : {DayStamp{0}, DayStamp{19358}, DayStamp{-1}, DayStamp{20000}}) {
        CHECK(days_from_civil(civil_from_days(d)) == d);
    }
    CHECK(days_from_civil({1970, 1, 1}) == 0);
    CHECK(days_from_civil({2023, 1, 1}) == 19358);
}

TEST_CASE("weekday") {
    CHECK(weekday(days_from_civil({1970, 1, 1})) == 3);   // Thursday
    CHECK(weekday(days_from_civil({2024, 1, 1})) == 0);   // Monday
    CHECK(weekday(days_from_civil({2024, 1, 6})) == 5);   // Saturday
    CHECK(weekday(days_from_civil({2024, 1, 7})) == 6);   // Sunday
}

TEST_CASE("hour parsing and formatting round trip") {
    const HourStamp t = parse_hour_iso("2024-03-15T17:00:00Z");
    CHECK(format_hour_iso(t) == "2024-03-15T17:00:00Z");
    CHECK(hour_of(t) == 17);
    CHECK(format_date_iso(day_of(t)) == "2024-03-15");
    CHECK(parse_hour_iso("2024-03-15 17:00") == t);
    CHECK_THROWS(parse_hour_iso("2024-03-15T17:30:00Z"));
    CHECK_THROWS(parse_hour_iso("not a date"));
    CHECK(format_month(day_of(t)) == "2024-03");
}
