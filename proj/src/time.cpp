#include "mocf/time.hpp"

#include <cstdio>
#include <stdexcept>

namespace mocf {

DayStamp days_from_civil(const CivilDate& d) {
    // Howard Hinnant's civil-days algorithm.
    int y = d.year;
    const int m = d.month;
    const int dd = d.day;
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 + static_cast<unsigned>(dd) - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<DayStamp>(era) * 146097 + static_cast<DayStamp>(doe) - 719468;
}

CivilDate civil_from_days(DayStamp z) {
    z += 719468;
    const DayStamp era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const DayStamp y = static_cast<DayStamp>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

int weekday(DayStamp day) {
    // 1970-01-01 was a Thursday (index 3 with Monday = 0).
    DayStamp w = (day + 3) % 7;
    if (w < 0) w += 7;
    return static_cast<int>(w);
}

namespace {

bool parse_int(const std::string& s, size_t pos, size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (size_t i = pos; i < pos + len; ++i) {
        if (s[i] < '0' || s[i] > '9') return false;
        v = v * 10 + (s[i] - '0');
    }
    out = v;
    return true;
}

[[noreturn]] void bad_timestamp(const std::string& s) {
    throw std::invalid_argument("invalid timestamp: '" + s + "'");
}

}  // namespace

DayStamp parse_date_iso(const std::string& s) {
    int y, mo, d;
    if (s.size() < 10 || s[4] != '-' || s[7] != '-' ||
        !parse_int(s, 0, 4, y) || !parse_int(s, 5, 2, mo) || !parse_int(s, 8, 2, d))
        bad_timestamp(s);
    if (mo < 1 || mo > 12 || d < 1 || d > 31) bad_timestamp(s);
    return days_from_civil({y, mo, d});
}

HourStamp parse_hour_iso(const std::string& s) {
    if (s.size() < 13 || (s[10] != 'T' && s[10] != ' ')) bad_timestamp(s);
    DayStamp day = parse_date_iso(s.substr(0, 10));
    int h;
    if (!parse_int(s, 11, 2, h) || h > 23) bad_timestamp(s);
    // anything past the hour must be zero minutes/seconds (optionally 'Z')
    for (size_t i = 13; i < s.size(); ++i) {
        char c = s[i];
        if (c == ':' || c == '0') continue;
        if (c == 'Z' && i == s.size() - 1) break;
        bad_timestamp(s);
    }
    return make_hour(day, h);
}

std::string format_date_iso(DayStamp d) {
    CivilDate c = civil_from_days(d);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", c.year, c.month, c.day);
    return buf;
}

std::string format_hour_iso(HourStamp t) {
    char buf[24];
    CivilDate c = civil_from_days(day_of(t));
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:00:00Z", c.year, c.month, c.day, hour_of(t));
    return buf;
}

std::string format_month(DayStamp d) {
    CivilDate c = civil_from_days(d);
    char buf[10];
    std::snprintf(buf, sizeof buf, "%04d-%02d", c.year, c.month);
    return buf;
}

}  // namespace mocf
