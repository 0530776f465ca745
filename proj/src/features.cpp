#include "epf/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "epf/error.hpp"

namespace epf {

using namespace std::chrono;

std::pair<double, double> cyclical_encode(int value, int period) {
    if (period != 24 && period != 7 && period != 12)
        throw DomainError("cyclical_encode: unsupported period " + std::to_string(period));
    if (value < 0 || value >= period)
        throw DomainError("cyclical_encode: value " + std::to_string(value) + " outside [0, " +
                          std::to_string(period) + ")");
    // Exact values at quarter phases keep sin^2+cos^2 == 1 and the tests exact.
    switch ((4 * value) % period == 0 ? (4 * value) / period : -1) {
        case 0: return {0.0, 1.0};
        case 1: return {1.0, 0.0};
        case 2: return {0.0, -1.0};
        case 3: return {-1.0, 0.0};
        default: break;
    }
    const double phase = 2.0 * std::numbers::pi * value / period;
    return {std::sin(phase), std::cos(phase)};
}

std::vector<std::array<double, 8>> build_calendar_features(Interval range, const HolidaySet& holidays,
                                                           const ZoneClock& clock) {
    std::vector<std::array<double, 8>> rows;
    rows.reserve(static_cast<std::size_t>(std::max(0L, range.hours())));
    for (Instant t = range.begin; t < range.end; t += Hours{1}) {
        const LocalTime lt = local_time(t, clock);
        const auto [hs, hc] = cyclical_encode(lt.hour, 24);
        const auto [ds, dc] = cyclical_encode(lt.weekday, 7);
        const auto [ms, mc] = cyclical_encode(static_cast<int>(unsigned(lt.date.month())) - 1, 12);
        const double weekend = lt.weekday >= 5 ? 1.0 : 0.0;
        const double holiday = holidays.count(sys_days{lt.date}) ? 1.0 : 0.0;
        rows.push_back({hs, hc, ds, dc, ms, mc, weekend, holiday});
    }
    return rows;
}

double synthetic_price(double gas_price, double co2_price) {
    if (!(gas_price >= 0.0) || !(co2_price >= 0.0))
        throw DomainError("synthetic_price: prices must be non-negative");
    constexpr double efficiency = 0.55;
    constexpr double emission_intensity = 400.0;  // gCO2/kWh
    return gas_price / efficiency + emission_intensity * co2_price / 1000.0;
}

std::string to_string(FeatureGroup g) {
    switch (g) {
        case FeatureGroup::Calendar: return "calendar";
        case FeatureGroup::R1: return "R1";
        case FeatureGroup::R2: return "R2";
        case FeatureGroup::R3: return "R3";
        case FeatureGroup::R4: return "R4";
        case FeatureGroup::R5: return "R5";
    }
    return "?";
}

FeatureGroup parse_feature_group(const std::string& s) {
    for (auto g : {FeatureGroup::Calendar, FeatureGroup::R1, FeatureGroup::R2, FeatureGroup::R3,
                   FeatureGroup::R4, FeatureGroup::R5})
        if (to_string(g) == s) return g;
    throw ParseError("unknown feature group '" + s + "'");
}

const std::vector<std::string>& group_variables(FeatureGroup g) {
    static const std::vector<std::string> none;
    static const std::vector<std::string> r1{var::co2, var::load};
    static const std::vector<std::string> r2{var::gas, var::synthetic_price};
    static const std::vector<std::string> r3{var::gen_nonrenewable, var::gen_renewable};
    static const std::vector<std::string> r4{var::cross_border, var::gen_nonrenewable, var::gen_renewable};
    static const std::vector<std::string> r5{var::load, var::gen_nonrenewable, var::gen_renewable};
    switch (g) {
        case FeatureGroup::R1: return r1;
        case FeatureGroup::R2: return r2;
        case FeatureGroup::R3: return r3;
        case FeatureGroup::R4: return r4;
        case FeatureGroup::R5: return r5;
        case FeatureGroup::Calendar: break;
    }
    return none;
}

std::vector<FeatureSpec> feature_specs(FeatureGroup g) {
    if (g == FeatureGroup::Calendar)
        return {{g, calendar_feature_names(), Representation::PastOnly, false}};
    FeatureSpec past{g, group_variables(g), Representation::PastOnly, true};
    FeatureSpec proxy{g, {}, Representation::FutureProxy, false};
    for (const auto& v : past.members) proxy.members.push_back(v + kProxySuffix);
    return {past, proxy};
}

std::vector<std::string> columns_for_groups(const std::vector<FeatureGroup>& groups) {
    std::vector<std::string> out;
    for (auto g : groups) {
        for (const auto& spec : feature_specs(g)) {
            if (g == FeatureGroup::Calendar) continue;
            for (const auto& m : spec.members)
                if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
        }
    }
    return out;
}

bool is_future_known(FeatureRole r) { return r == FeatureRole::Calendar || r == FeatureRole::FutureProxy; }

std::size_t FeatureFrame::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == name) return i;
    throw Error("frame has no column '" + name + "'");
}

const FeatureColumn& FeatureFrame::column(const std::string& name) const { return columns[column_index(name)]; }

std::vector<std::string> FeatureFrame::names() const {
    std::vector<std::string> out;
    for (const auto& c : columns) out.push_back(c.name);
    return out;
}

Interval FeatureFrame::span() const {
    if (time.empty()) return {};
    return {time.front(), time.back() + Hours{1}};
}

std::optional<std::size_t> FeatureFrame::row_of(Instant t) const {
    if (time.empty() || t < time.front() || t > time.back()) return std::nullopt;
    return static_cast<std::size_t>(duration_cast<Hours>(t - time.front()).count());
}

FeatureFrame FeatureFrame::select(const std::vector<std::string>& keep) const {
    FeatureFrame out;
    out.zone = zone;
    out.time = time;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i == 0 || std::find(keep.begin(), keep.end(), columns[i].name) != keep.end())
            out.columns.push_back(columns[i]);
    }
    return out;
}

namespace {

std::vector<double> align(const HourlySeries& s, const std::vector<Instant>& axis) {
    if (s.empty()) throw Error("covariate '" + s.variable + "' is empty");
    std::vector<double> out(axis.size());
    std::size_t j = 0;
    double last = s.values.front();
    for (std::size_t i = 0; i < axis.size(); ++i) {
        while (j < s.size() && s.timestamps[j] <= axis[i]) last = s.values[j++];
        out[i] = last;
    }
    return out;
}

std::vector<double> week_lag(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = v[i >= static_cast<std::size_t>(kProxyLagHours) ? i - kProxyLagHours : 0];
    return out;
}

}  // namespace

FeatureFrame build_frame(const HourlySeries& target, const std::map<std::string, HourlySeries>& covariates,
                         const std::vector<std::string>& columns, const FrameOptions& options) {
    const HourlySeries reg = regularize(target);
    FeatureFrame frame;
    frame.zone = target.zone;
    frame.time = reg.timestamps;
    frame.columns.push_back({reg.variable.empty() ? var::price : reg.variable, FeatureRole::Target, reg.values});
    if (frame.time.empty()) return frame;

    if (options.calendar) {
        const auto cal = build_calendar_features(frame.span(), options.holidays, options.clock);
        const auto& names = calendar_feature_names();
        for (std::size_t k = 0; k < names.size(); ++k) {
            FeatureColumn c{names[k], FeatureRole::Calendar, std::vector<double>(cal.size())};
            for (std::size_t i = 0; i < cal.size(); ++i) c.values[i] = cal[i][k];
            frame.columns.push_back(std::move(c));
        }
    }

    std::map<std::string, std::vector<double>> base;
    auto variable = [&](const std::string& name) -> const std::vector<double>& {
        if (auto it = base.find(name); it != base.end()) return it->second;
        if (auto it = covariates.find(name); it != covariates.end())
            return base[name] = align(regularize(it->second), frame.time);
        if (name == var::synthetic_price && covariates.count(var::gas) && covariates.count(var::co2)) {
            const auto gas = align(regularize(covariates.at(var::gas)), frame.time);
            const auto co2 = align(regularize(covariates.at(var::co2)), frame.time);
            std::vector<double> sp(gas.size());
            for (std::size_t i = 0; i < sp.size(); ++i) sp[i] = synthetic_price(gas[i], co2[i]);
            return base[name] = std::move(sp);
        }
        throw Error("no data for covariate '" + name + "'");
    };

    const std::string suffix = kProxySuffix;
    for (const auto& col : columns) {
        const bool proxy = col.size() > suffix.size() && col.ends_with(suffix);
        if (proxy) {
            const std::string v = col.substr(0, col.size() - suffix.size());
            frame.columns.push_back({col, FeatureRole::FutureProxy, week_lag(variable(v))});
        } else {
            frame.columns.push_back({col, FeatureRole::Market, variable(col)});
        }
    }
    return frame;
}

}  // namespace epf
