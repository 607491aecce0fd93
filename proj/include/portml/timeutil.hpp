#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace portml::timeutil {

// Timestamps are UTC seconds since the Unix epoch. Dates are converted with
// the standard civil-calendar algorithms (proleptic Gregorian).

constexpr int64_t kSecondsPerDay = 86400;

constexpr int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<int64_t>(era) * 146097 + static_cast<int64_t>(doe) - 719468;
}

struct Civil {
    int year, month, day;
};

constexpr Civil civil_from_days(int64_t z) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int64_t y = static_cast<int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return {static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

constexpr int64_t ts_from_civil(int y, int m, int d, int hh = 0, int mm = 0, int ss = 0) {
    return days_from_civil(y, m, d) * kSecondsPerDay + hh * 3600 + mm * 60 + ss;
}

// Accepts "YYYY-MM-DD" or "YYYY-MM-DDTHH:MM:SS" (space also tolerated).
inline int64_t parse_iso(const std::string& s) {
    int y, mo, d, hh = 0, mi = 0, ss = 0;
    if (s.size() >= 19) {
        if (std::sscanf(s.c_str(), "%d-%d-%d%*c%d:%d:%d", &y, &mo, &d, &hh, &mi, &ss) != 6)
            throw std::runtime_error("bad timestamp: " + s);
    } else {
        if (std::sscanf(s.c_str(), "%d-%d-%d", &y, &mo, &d) != 3)
            throw std::runtime_error("bad date: " + s);
    }
    return ts_from_civil(y, mo, d, hh, mi, ss);
}

inline std::string format_iso(int64_t ts) {
    int64_t days = ts / kSecondsPerDay;
    int64_t sec = ts % kSecondsPerDay;
    if (sec < 0) { sec += kSecondsPerDay; --days; }
    Civil c = civil_from_days(days);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02lld:%02lld:%02lld", c.year, c.month,
                  c.day, static_cast<long long>(sec / 3600),
                  static_cast<long long>((sec / 60) % 60), static_cast<long long>(sec % 60));
    return buf;
}

inline std::string format_date(int64_t ts) {
    Civil c = civil_from_days(ts >= 0 ? ts / kSecondsPerDay
                                      : (ts - kSecondsPerDay + 1) / kSecondsPerDay);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", c.year, c.month, c.day);
    return buf;
}

constexpr int days_in_month(int y, int m) {
    const int tab[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && ((y % 4 == 0 && y % 100 != 0) || y % 400 == 0)) return 29;
    return tab[m - 1];
}

// Same day-of-month n calendar months later (clamped to month length),
// preserving time of day.
inline int64_t add_months(int64_t ts, int n) {
    int64_t days = ts >= 0 ? ts / kSecondsPerDay : (ts - kSecondsPerDay + 1) / kSecondsPerDay;
    int64_t tod = ts - days * kSecondsPerDay;
    Civil c = civil_from_days(days);
    int total = (c.year * 12 + (c.month - 1)) + n;
    int y = total / 12, m = total % 12 + 1;
    int d = c.day;
    int dim = days_in_month(y, m);
    if (d > dim) d = dim;
    return days_from_civil(y, m, d) * kSecondsPerDay + tod;
}

}  // namespace portml::timeutil
