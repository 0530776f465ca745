#pragma once

#include <optional>
#include <string>
#include <vector>

#include "epf/time.hpp"

namespace epf {

/// Hourly observations of one variable in one bidding zone.
///
/// After `regularize()` the timestamps are strictly increasing with exact
/// one-hour spacing; hours that were missing in the source carry
/// `filled[i] == true` and hold the previous value.
struct HourlySeries {
    std::string zone;
    std::string variable;
    std::vector<Instant> timestamps;
    std::vector<double> values;
    std::vector<bool> filled;

    [[nodiscard]] std::size_t size() const { return timestamps.size(); }
    [[nodiscard]] bool empty() const { return timestamps.empty(); }

    /// Index of `t`, if present. Requires a regular (gap-free) series.
    [[nodiscard]] std::optional<std::size_t> index_of(Instant t) const;
    [[nodiscard]] std::optional<double> at(Instant t) const;

    /// Throws ParseError unless timestamps are strictly increasing.
    void check_monotone() const;

    /// Returns the [begin, end) slice.
    [[nodiscard]] HourlySeries slice(Interval iv) const;
};

/// Sorts by time (stable), drops duplicate timestamps keeping the first
/// occurrence, drops non-finite values (treated as gaps) and forward-fills
/// every missing hour between the first and last observation.
HourlySeries regularize(HourlySeries raw);

/// Number of hours flagged as forward-filled.
std::size_t count_filled(const HourlySeries& s);

}  // namespace epf
