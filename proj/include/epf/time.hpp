#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace epf {

/// An hourly-aligned UTC instant.
using Instant = std::chrono::sys_seconds;
using Hours = std::chrono::hours;

/// Half-open interval [begin, end).
struct Interval {
    Instant begin;
    Instant end;

    [[nodiscard]] bool empty() const { return end <= begin; }
    [[nodiscard]] bool contains(Instant t) const { return t >= begin && t < end; }
    [[nodiscard]] long hours() const;
};

/// Parses `YYYY-MM-DDTHH:MM:SSZ` or a bare `YYYY-MM-DD` (midnight UTC).
Instant parse_instant(std::string_view text);
/// Formats as `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_instant(Instant t);
std::string format_date(std::chrono::sys_days d);

Instant from_unix(long long seconds);
long long to_unix(Instant t);

bool is_hour_aligned(Instant t);

/// Wall-clock rule for a bidding zone: fixed standard offset, optional
/// EU summer time (last Sunday of March 01:00 UTC to last Sunday of
/// October 01:00 UTC).
struct ZoneClock {
    int standard_offset_hours = 1;
    bool eu_summer_time = true;

    [[nodiscard]] int offset_hours(Instant t) const;
    [[nodiscard]] std::chrono::local_seconds to_local(Instant t) const;
};

/// Local broken-down time used by calendar features.
struct LocalTime {
    std::chrono::year_month_day date;
    int hour = 0;     // 0..23
    int weekday = 0;  // 0 = Monday .. 6 = Sunday
};

LocalTime local_time(Instant t, const ZoneClock& clock);

}  // namespace epf
