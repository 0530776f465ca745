#pragma once

#include <string>

namespace epf {

struct CarbonReport {
    double energy_kwh = 0.0;
    double co2e_kg = 0.0;
    double co2e_pue_kg = 0.0;
};

inline constexpr double kGridIntensityKgPerKwh = 0.328;  // 2025 German average
inline constexpr double kDataCentrePue = 1.2;

/// energy = hours * kW; co2e = energy * intensity; co2e_pue = co2e * PUE.
CarbonReport carbon_report(double time_hours, double power_kw, double intensity = kGridIntensityKgPerKwh,
                           double pue = kDataCentrePue);
/// Same, starting from a measured energy figure.
CarbonReport carbon_from_energy(double energy_kwh, double intensity = kGridIntensityKgPerKwh,
                                double pue = kDataCentrePue);

/// Mean power over an energy-meter log: CSV `timestamp_utc,power_kw`,
/// trapezoidal integration. Returns {hours, kWh}.
std::pair<double, double> integrate_power_log(const std::string& path);

}  // namespace epf
