#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "epf/series.hpp"

namespace epf {

/// Hourly price = base + daily + weekly profile (zone-local) + AR(1) noise,
/// with fundamentals generated alongside. `coupling` adds
/// coupling * (load - mean load) / 1000 to the price.
struct SyntheticOptions {
    std::string zone = "SYN";
    Instant start = parse_instant("2018-10-01");
    long hours = 24L * 365;
    std::uint64_t seed = 1;
    double base = 60.0;
    double daily_amplitude = 15.0;
    double weekly_amplitude = 8.0;
    double phi = 0.9;
    double sigma = 4.0;
    double coupling = 0.0;
    ZoneClock clock;
};

struct SyntheticData {
    HourlySeries price;
    std::map<std::string, HourlySeries> covariates;  ///< co2, load, gas, gen_*, cross_border
};

SyntheticData make_synthetic(const SyntheticOptions& opt);

}  // namespace epf
