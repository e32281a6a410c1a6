#pragma once

// Hourly UTC time handling. Timestamps are represented as whole hours since
// the Unix epoch; dates as whole days. ISO-8601 parsing/formatting is done by
// hand so that output is byte-stable across platforms.

#include <cstdint>
#include <string>

namespace mocf {

using HourStamp = std::int64_t;  // hours since 1970-01-01T00:00:00Z
using DayStamp = std::int64_t;   // days since 1970-01-01

struct CivilDate {
    int year;
    int month;  // 1..12
    int day;    // 1..31
};

DayStamp days_from_civil(const CivilDate& d);
CivilDate civil_from_days(DayStamp z);

inline DayStamp day_of(HourStamp t) {
    // floor division, valid for negative stamps too
    return t >= 0 ? t / 24 : (t - 23) / 24;
}
inline int hour_of(HourStamp t) { return static_cast<int>(t - day_of(t) * 24); }
inline HourStamp make_hour(DayStamp day, int hour) { return day * 24 + hour; }

// 0 = Monday .. 6 = Sunday
int weekday(DayStamp day);

// Parses "YYYY-MM-DDTHH:MM:SS" with optional trailing 'Z' or "YYYY-MM-DD HH:MM".
// Minutes/seconds must be zero (hourly data). Throws std::invalid_argument.
HourStamp parse_hour_iso(const std::string& s);
DayStamp parse_date_iso(const std::string& s);

std::string format_hour_iso(HourStamp t);   // "YYYY-MM-DDTHH:00:00Z"
std::string format_date_iso(DayStamp d);    // "YYYY-MM-DD"
std::string format_month(DayStamp d);       // "YYYY-MM"

}  // namespace mocf
