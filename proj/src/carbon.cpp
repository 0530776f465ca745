#include "epf/carbon.hpp"

#include <chrono>
#include <utility>

#include "epf/csv.hpp"
#include "epf/error.hpp"
#include "epf/time.hpp"

namespace epf {

CarbonReport carbon_from_energy(double energy_kwh, double intensity, double pue) {
    if (!(energy_kwh >= 0.0) || !(intensity >= 0.0) || !(pue >= 0.0))
        throw DomainError("carbon: inputs must be non-negative");
    CarbonReport r;
    r.energy_kwh = energy_kwh;
    r.co2e_kg = energy_kwh * intensity;
    r.co2e_pue_kg = r.co2e_kg * pue;
    return r;
}

CarbonReport carbon_report(double time_hours, double power_kw, double intensity, double pue) {
    if (!(time_hours >= 0.0) || !(power_kw >= 0.0)) throw DomainError("carbon: inputs must be non-negative");
    return carbon_from_energy(time_hours * power_kw, intensity, pue);
}

std::pair<double, double> integrate_power_log(const std::string& path) {
    const auto lines = csv::read_lines(path);
    if (lines.empty() || lines.front() != "timestamp_utc,power_kw")
        throw ParseError(path + ": expected header 'timestamp_utc,power_kw'");
    double hours = 0.0, kwh = 0.0;
    Instant prev_t{};
    double prev_p = 0.0;
    bool have_prev = false;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        if (lines[r].empty()) continue;
        const auto f = csv::split(lines[r]);
        if (f.size() != 2) throw ParseError(path + ": row " + std::to_string(r) + " must have 2 fields");
        const Instant t = parse_instant(f[0]);
        const double p = csv::parse_double(f[1], "power_kw", r);
        if (p < 0.0) throw DomainError(path + ": negative power at row " + std::to_string(r));
        if (have_prev) {
            if (t <= prev_t) throw ParseError(path + ": timestamps not increasing at row " + std::to_string(r));
            const double dt = std::chrono::duration<double, std::ratio<3600>>(t - prev_t).count();
            hours += dt;
            kwh += 0.5 * (p + prev_p) * dt;
        }
        prev_t = t;
        prev_p = p;
        have_prev = true;
    }
    return {hours, kwh};
}

}  // namespace epf
