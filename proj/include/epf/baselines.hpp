#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epf/forecast.hpp"
#include "epf/series.hpp"

namespace epf {

/// Timestamp -> value lookup over raw observations. Forward-filled entries
/// and non-finite values are treated as missing.
class HistoryIndex {
public:
    enum class Duplicates { KeepFirst, Average };

    explicit HistoryIndex(const HourlySeries& s, Duplicates policy = Duplicates::KeepFirst);

    [[nodiscard]] std::optional<double> at(Instant t) const;
    [[nodiscard]] bool empty() const { return values_.empty(); }
    [[nodiscard]] Instant first() const { return values_.begin()->first; }
    [[nodiscard]] const std::map<Instant, double>& values() const { return values_; }

private:
    std::map<Instant, double> values_;
};

/// A baseline forecast, or the reason it was omitted. `latest_read` is the
/// newest timestamp consulted (always before the origin).
struct BaselineResult {
    std::optional<EnsembleForecast> forecast;
    std::string omission;
    std::optional<Instant> latest_read;
};

/// The 28 most recent same-hour observations strictly before `origin`,
/// per target hour origin + h.
BaselineResult baseline_same_hour_28d(const HistoryIndex& history, Instant origin, int horizon = 24);

/// 7 most recent same-hour days plus the same day of each of the 12 prior
/// months (clamped to month end, stepping back a day at a time past gaps).
BaselineResult baseline_7d_12m(const HistoryIndex& history, Instant origin, int horizon = 24);

/// Residual pool for the lagged-reference bootstrap: y_t - reference(t - lag)
/// for every target timestamp strictly before `train_end`.
std::vector<double> bootstrap_residuals(const HourlySeries& target, const HourlySeries& reference, int lag_hours,
                                        Instant train_end);

struct BootstrapOptions {
    int lag_hours = 168;
    int samples = 200;
    std::uint64_t seed = 0;
};

/// y_hat(t) = reference(t - lag) (with a +-1 h fallback) plus M residuals
/// drawn uniformly with replacement from `residuals`.
BaselineResult baseline_bootstrap(const HistoryIndex& reference, const std::vector<double>& residuals,
                                  Instant origin, const BootstrapOptions& opt, int horizon = 24);

enum class BaselineMethod { SameHour28d, SevenDay12Month, BootstrapPrice, BootstrapSynthetic };
std::string to_string(BaselineMethod m);
BaselineMethod parse_baseline_method(const std::string& s);

struct BaselineRun {
    std::vector<EnsembleForecast> forecasts;
    std::vector<std::pair<Instant, std::string>> omitted;
};

/// Runs one baseline over a list of origins. `reference` is only used by
/// the synthetic bootstrap; residuals come from data before `train_end`.
BaselineRun run_baseline(BaselineMethod method, const HourlySeries& target, const HourlySeries* reference,
                         const std::vector<Instant>& origins, Instant train_end, const BootstrapOptions& opt = {});

}  // namespace epf
