#include "epf/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "epf/features.hpp"

namespace epf {

namespace {

HourlySeries blank(const SyntheticOptions& o, const std::string& variable) {
    HourlySeries s;
    s.zone = o.zone;
    s.variable = variable;
    s.timestamps.reserve(std::size_t(o.hours));
    s.values.reserve(std::size_t(o.hours));
    return s;
}

}  // namespace

SyntheticData make_synthetic(const SyntheticOptions& o) {
    constexpr double pi = std::numbers::pi;
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> z(0.0, 1.0);

    SyntheticData d;
    d.price = blank(o, var::price);
    auto& load = d.covariates[var::load] = blank(o, var::load);
    auto& gas = d.covariates[var::gas] = blank(o, var::gas);
    auto& co2 = d.covariates[var::co2] = blank(o, var::co2);
    auto& ren = d.covariates[var::gen_renewable] = blank(o, var::gen_renewable);
    auto& non = d.covariates[var::gen_nonrenewable] = blank(o, var::gen_nonrenewable);
    auto& xb = d.covariates[var::cross_border] = blank(o, var::cross_border);

    double ar = 0.0, load_ar = 0.0, wind = 0.0, flow = 0.0;
    double gas_level = 30.0, co2_level = 80.0;
    constexpr double kMeanLoad = 50000.0;
    for (long i = 0; i < o.hours; ++i) {
        const Instant t = o.start + Hours{i};
        const LocalTime lt = local_time(t, o.clock);
        const double hour_phase = 2.0 * pi * lt.hour / 24.0;
        const double daily = -std::cos(hour_phase) + 0.5 * std::sin(2.0 * hour_phase);
        const double weekly = lt.weekday >= 5 ? -1.0 : 0.25;

        if (lt.hour == 0) {
            gas_level = std::max(1.0, gas_level + 0.5 * z(rng));
            co2_level = std::max(1.0, co2_level + 0.8 * z(rng));
        }
        load_ar = 0.95 * load_ar + 800.0 * z(rng);
        const double l = kMeanLoad + 8000.0 * daily + 6000.0 * weekly + load_ar;
        wind = 0.97 * wind + 600.0 * z(rng);
        const double solar = std::max(0.0, std::sin(pi * (lt.hour - 6) / 12.0)) * 9000.0;
        const double r = std::max(0.0, 12000.0 + wind + solar);
        flow = 0.9 * flow + 300.0 * z(rng);

        ar = o.phi * ar + o.sigma * z(rng);
        const double p = o.base + o.daily_amplitude * daily + o.weekly_amplitude * weekly + ar +
                         o.coupling * (l - kMeanLoad) / 1000.0;

        d.price.timestamps.push_back(t);
        d.price.values.push_back(p);
        auto put = [&](HourlySeries& s, double v) {
            s.timestamps.push_back(t);
            s.values.push_back(v);
        };
        put(load, l);
        put(gas, gas_level);
        put(co2, co2_level);
        put(ren, r);
        put(non, std::max(0.0, l - 0.8 * r));
        put(xb, flow);
    }
    d.price.filled.assign(d.price.size(), false);
    for (auto& [k, s] : d.covariates) s.filled.assign(s.size(), false);
    return d;
}

}  // namespace epf
