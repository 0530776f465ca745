#include "epf/series.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "epf/error.hpp"

namespace epf {

std::optional<std::size_t> HourlySeries::index_of(Instant t) const {
    if (timestamps.empty() || t < timestamps.front() || t > timestamps.back()) return std::nullopt;
    const auto offset = std::chrono::duration_cast<Hours>(t - timestamps.front()).count();
    const auto i = static_cast<std::size_t>(offset);
    if (i < timestamps.size() && timestamps[i] == t) return i;
    // Irregular series: fall back to binary search.
    auto it = std::lower_bound(timestamps.begin(), timestamps.end(), t);
    if (it != timestamps.end() && *it == t) return static_cast<std::size_t>(it - timestamps.begin());
    return std::nullopt;
}

std::optional<double> HourlySeries::at(Instant t) const {
    if (auto i = index_of(t)) return values[*i];
    return std::nullopt;
}

void HourlySeries::check_monotone() const {
    for (std::size_t i = 1; i < timestamps.size(); ++i) {
        if (timestamps[i] <= timestamps[i - 1])
            throw ParseError("timestamps not strictly increasing at row " + std::to_string(i) + " (" +
                             format_instant(timestamps[i]) + ")");
    }
}

HourlySeries HourlySeries::slice(Interval iv) const {
    HourlySeries out;
    out.zone = zone;
    out.variable = variable;
    auto lo = std::lower_bound(timestamps.begin(), timestamps.end(), iv.begin);
    auto hi = std::lower_bound(timestamps.begin(), timestamps.end(), iv.end);
    const auto a = static_cast<std::size_t>(lo - timestamps.begin());
    const auto b = static_cast<std::size_t>(hi - timestamps.begin());
    out.timestamps.assign(timestamps.begin() + a, timestamps.begin() + b);
    out.values.assign(values.begin() + a, values.begin() + b);
    if (filled.size() == timestamps.size())
        out.filled.assign(filled.begin() + a, filled.begin() + b);
    else
        out.filled.assign(b - a, false);
    return out;
}

HourlySeries regularize(HourlySeries raw) {
    std::vector<std::size_t> order(raw.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return raw.timestamps[a] < raw.timestamps[b]; });

    HourlySeries out;
    out.zone = std::move(raw.zone);
    out.variable = std::move(raw.variable);
    std::vector<Instant> ts;
    std::vector<double> vs;
    for (std::size_t k : order) {
        const Instant t = std::chrono::floor<Hours>(raw.timestamps[k]);
        if (!ts.empty() && ts.back() == t) continue;  // keep first occurrence
        if (!std::isfinite(raw.values[k])) continue;
        ts.push_back(t);
        vs.push_back(raw.values[k]);
    }
    if (ts.empty()) return out;

    const auto span = std::chrono::duration_cast<Hours>(ts.back() - ts.front()).count() + 1;
    out.timestamps.reserve(static_cast<std::size_t>(span));
    out.values.reserve(static_cast<std::size_t>(span));
    out.filled.reserve(static_cast<std::size_t>(span));
    std::size_t j = 0;
    for (Instant t = ts.front(); t <= ts.back(); t += Hours{1}) {
        out.timestamps.push_back(t);
        if (j < ts.size() && ts[j] == t) {
            out.values.push_back(vs[j]);
            out.filled.push_back(false);
            ++j;
        } else {
            out.values.push_back(out.values.back());
            out.filled.push_back(true);
        }
    }
    return out;
}

std::size_t count_filled(const HourlySeries& s) {
    return static_cast<std::size_t>(std::count(s.filled.begin(), s.filled.end(), true));
}

}  // namespace epf
