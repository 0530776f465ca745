#include "epf/baselines.hpp"

#include <cmath>
#include <random>

#include "epf/error.hpp"

namespace epf {

using namespace std::chrono;

HistoryIndex::HistoryIndex(const HourlySeries& s, Duplicates policy) {
    std::map<Instant, std::pair<double, int>> acc;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i < s.filled.size() && s.filled[i]) continue;
        const double v = s.values[i];
        if (!std::isfinite(v)) continue;
        auto [it, inserted] = acc.try_emplace(s.timestamps[i], v, 1);
        if (!inserted && policy == Duplicates::Average) {
            it->second.first += v;
            it->second.second += 1;
        }
    }
    for (const auto& [t, sv] : acc) values_.emplace_hint(values_.end(), t, sv.first / sv.second);
}

std::optional<double> HistoryIndex::at(Instant t) const {
    auto it = values_.find(t);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

namespace {

struct Collector {
    const HistoryIndex& history;
    std::optional<Instant> latest;

    std::optional<double> read(Instant t) {
        auto v = history.at(t);
        if (v && (!latest || t > *latest)) latest = t;
        return v;
    }
};

// Same-hour values walking back one day at a time from `t - 1 day`.
bool same_hour_days(Collector& c, Instant t, std::size_t count, std::vector<double>& out) {
    if (c.history.empty()) return false;
    const Instant floor_t = c.history.first();
    for (Instant s = t - days{1}; s >= floor_t && out.size() < count; s -= days{1})
        if (auto v = c.read(s)) out.push_back(*v);
    return out.size() == count;
}

Instant months_back(Instant t, int k) {
    const sys_days d = floor<days>(t);
    const auto tod = t - Instant{d};
    year_month_day ymd{d};
    year_month ym = year_month{ymd.year(), ymd.month()} - months{k};
    const year_month_day_last last{ym.year(), month_day_last{ym.month()}};
    const day dd = ymd.day() > last.day() ? last.day() : ymd.day();
    return Instant{sys_days{ym.year() / ym.month() / dd}} + tod;
}

}  // namespace

BaselineResult baseline_same_hour_28d(const HistoryIndex& history, Instant origin, int horizon) {
    constexpr std::size_t kDays = 28;
    BaselineResult res;
    Collector c{history, std::nullopt};
    Eigen::MatrixXd samples(kDays, horizon);
    for (int h = 0; h < horizon; ++h) {
        const Instant t = origin + Hours{h};
        std::vector<double> vals;
        // Only days strictly before the origin; for h < 24 every t - 1 day qualifies.
        if (!same_hour_days(c, t, kDays, vals)) {
            res.omission = "fewer than 28 prior same-hour days for " + format_instant(t);
            res.latest_read = c.latest;
            return res;
        }
        for (std::size_t k = 0; k < kDays; ++k) samples(Eigen::Index(k), h) = vals[k];
    }
    res.forecast = EnsembleForecast{origin, std::move(samples)};
    res.latest_read = c.latest;
    return res;
}

BaselineResult baseline_7d_12m(const HistoryIndex& history, Instant origin, int horizon) {
    constexpr std::size_t kDays = 7;
    constexpr int kMonths = 12;
    constexpr int kMaxStepBack = 31;
    BaselineResult res;
    Collector c{history, std::nullopt};
    Eigen::MatrixXd samples(kDays + kMonths, horizon);
    for (int h = 0; h < horizon; ++h) {
        const Instant t = origin + Hours{h};
        std::vector<double> vals;
        if (!same_hour_days(c, t, kDays, vals)) {
            res.omission = "fewer than 7 prior same-hour days for " + format_instant(t);
            res.latest_read = c.latest;
            return res;
        }
        for (int k = 1; k <= kMonths; ++k) {
            std::optional<double> v;
            Instant s = months_back(t, k);
            for (int back = 0; back <= kMaxStepBack && !v; ++back, s -= days{1}) {
                if (s >= origin) continue;
                v = c.read(s);
            }
            if (!v) {
                res.omission = "no value for month offset " + std::to_string(k) + " of " + format_instant(t);
                res.latest_read = c.latest;
                return res;
            }
            vals.push_back(*v);
        }
        for (std::size_t k = 0; k < vals.size(); ++k) samples(Eigen::Index(k), h) = vals[k];
    }
    res.forecast = EnsembleForecast{origin, std::move(samples)};
    res.latest_read = c.latest;
    return res;
}

namespace {

std::optional<double> lagged(Collector& c, Instant t, int lag_hours, Instant limit) {
    const Instant base = t - Hours{lag_hours};
    for (Instant s : {base, base - Hours{1}, base + Hours{1}}) {
        if (s >= limit) continue;
        if (auto v = c.read(s)) return v;
    }
    return std::nullopt;
}

}  // namespace

std::vector<double> bootstrap_residuals(const HourlySeries& target, const HourlySeries& reference, int lag_hours,
                                        Instant train_end) {
    const HistoryIndex y(target, HistoryIndex::Duplicates::Average);
    const HistoryIndex x(reference, HistoryIndex::Duplicates::Average);
    Collector c{x, std::nullopt};
    std::vector<double> pool;
    for (const auto& [t, v] : y.values()) {
        if (t >= train_end) break;
        if (auto yhat = lagged(c, t, lag_hours, train_end)) pool.push_back(v - *yhat);
    }
    return pool;
}

BaselineResult baseline_bootstrap(const HistoryIndex& reference, const std::vector<double>& residuals,
                                  Instant origin, const BootstrapOptions& opt, int horizon) {
    if (residuals.empty()) throw Error("baseline_bootstrap: empty residual pool");
    if (opt.samples < 1) throw DomainError("baseline_bootstrap: need at least one sample");
    BaselineResult res;
    Collector c{reference, std::nullopt};
    Eigen::VectorXd point(horizon);
    for (int h = 0; h < horizon; ++h) {
        const Instant t = origin + Hours{h};
        auto v = lagged(c, t, opt.lag_hours, origin);
        if (!v) {
            res.omission = "reference unavailable at " + format_instant(t - Hours{opt.lag_hours}) + " (+-1h)";
            res.latest_read = c.latest;
            return res;
        }
        point(h) = *v;
    }
    std::seed_seq seq{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32),
                      static_cast<std::uint32_t>(to_unix(origin)), static_cast<std::uint32_t>(to_unix(origin) >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> pick(0, residuals.size() - 1);
    Eigen::MatrixXd samples(opt.samples, horizon);
    for (int m = 0; m < opt.samples; ++m)
        for (int h = 0; h < horizon; ++h) samples(m, h) = point(h) + residuals[pick(rng)];
    res.forecast = EnsembleForecast{origin, std::move(samples)};
    res.latest_read = c.latest;
    return res;
}

std::string to_string(BaselineMethod m) {
    switch (m) {
        case BaselineMethod::SameHour28d: return "same-hour-28d";
        case BaselineMethod::SevenDay12Month: return "7d-12m";
        case BaselineMethod::BootstrapPrice: return "bootstrap-price";
        case BaselineMethod::BootstrapSynthetic: return "bootstrap-synthetic";
    }
    return "?";
}

BaselineMethod parse_baseline_method(const std::string& s) {
    for (auto m : {BaselineMethod::SameHour28d, BaselineMethod::SevenDay12Month, BaselineMethod::BootstrapPrice,
                   BaselineMethod::BootstrapSynthetic})
        if (to_string(m) == s) return m;
    throw ParseError("unknown baseline method '" + s + "'");
}

BaselineRun run_baseline(BaselineMethod method, const HourlySeries& target, const HourlySeries* reference,
                         const std::vector<Instant>& origins, Instant train_end, const BootstrapOptions& opt) {
    BaselineRun run;
    const HistoryIndex history(target);
    std::vector<double> pool;
    std::optional<HistoryIndex> ref;
    if (method == BaselineMethod::BootstrapPrice || method == BaselineMethod::BootstrapSynthetic) {
        const HourlySeries& r = method == BaselineMethod::BootstrapPrice ? target : *reference;
        if (method == BaselineMethod::BootstrapSynthetic && reference == nullptr)
            throw Error("synthetic bootstrap needs a reference series");
        pool = bootstrap_residuals(target, r, opt.lag_hours, train_end);
        ref.emplace(r, HistoryIndex::Duplicates::Average);
    }
    for (Instant o : origins) {
        BaselineResult r;
        switch (method) {
            case BaselineMethod::SameHour28d: r = baseline_same_hour_28d(history, o); break;
            case BaselineMethod::SevenDay12Month: r = baseline_7d_12m(history, o); break;
            default: r = baseline_bootstrap(*ref, pool, o, opt); break;
        }
        if (r.forecast) run.forecasts.push_back(std::move(*r.forecast));
        else run.omitted.emplace_back(o, r.omission);
    }
    return run;
}

}  // namespace epf
