#include "epf/time.hpp"

#include <cstdio>
#include <stdexcept>

#include "epf/error.hpp"

namespace epf {

using namespace std::chrono;

long Interval::hours() const {
    if (empty()) return 0;
    return static_cast<long>(duration_cast<Hours>(end - begin).count());
}

namespace {

int parse_digits(std::string_view s, std::size_t pos, std::size_t n, std::string_view whole) {
    if (pos + n > s.size()) throw ParseError("truncated timestamp '" + std::string(whole) + "'");
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (s[i] < '0' || s[i] > '9')
            throw ParseError("malformed timestamp '" + std::string(whole) + "'");
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

void expect_char(std::string_view s, std::size_t pos, char c, std::string_view whole) {
    if (pos >= s.size() || s[pos] != c)
        throw ParseError("malformed timestamp '" + std::string(whole) + "'");
}

sys_days last_sunday(year y, month m) {
    const sys_days last{y / m / std::chrono::last};
    const weekday wd{last};
    return last - days{(wd - Sunday).count()};
}

}  // namespace

Instant parse_instant(std::string_view text) {
    const int y = parse_digits(text, 0, 4, text);
    expect_char(text, 4, '-', text);
    const int mo = parse_digits(text, 5, 2, text);
    expect_char(text, 7, '-', text);
    const int d = parse_digits(text, 8, 2, text);
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw ParseError("invalid date '" + std::string(text) + "'");
    Instant t{sys_days{ymd}};
    if (text.size() == 10) return t;
    expect_char(text, 10, 'T', text);
    const int hh = parse_digits(text, 11, 2, text);
    expect_char(text, 13, ':', text);
    const int mm = parse_digits(text, 14, 2, text);
    expect_char(text, 16, ':', text);
    const int ss = parse_digits(text, 17, 2, text);
    expect_char(text, 19, 'Z', text);
    if (text.size() != 20 || hh > 23 || mm > 59 || ss > 59)
        throw ParseError("malformed timestamp '" + std::string(text) + "'");
    return t + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_instant(Instant t) {
    const auto day_start = floor<days>(t);
    const year_month_day ymd{day_start};
    const hh_mm_ss hms{t - day_start};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()), long(hms.hours().count()),
                  long(hms.minutes().count()), long(hms.seconds().count()));
    return buf;
}

std::string format_date(sys_days d) {
    const year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()));
    return buf;
}

Instant from_unix(long long s) { return Instant{seconds{s}}; }
long long to_unix(Instant t) { return t.time_since_epoch().count(); }

bool is_hour_aligned(Instant t) { return t.time_since_epoch().count() % 3600 == 0; }

int ZoneClock::offset_hours(Instant t) const {
    if (!eu_summer_time) return standard_offset_hours;
    const year y = year_month_day{floor<days>(t)}.year();
    const Instant start = Instant{last_sunday(y, March)} + hours{1};
    const Instant stop = Instant{last_sunday(y, October)} + hours{1};
    return standard_offset_hours + ((t >= start && t < stop) ? 1 : 0);
}

local_seconds ZoneClock::to_local(Instant t) const {
    return local_seconds{t.time_since_epoch() + hours{offset_hours(t)}};
}

LocalTime local_time(Instant t, const ZoneClock& clock) {
    const local_seconds ls = clock.to_local(t);
    const local_days ld = floor<days>(ls);
    LocalTime out;
    out.date = year_month_day{ld};
    out.hour = static_cast<int>(duration_cast<hours>(ls - ld).count());
    out.weekday = static_cast<int>(weekday{ld}.iso_encoding()) - 1;
    return out;
}

}  // namespace epf
