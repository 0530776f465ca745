#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epf/forecast.hpp"

namespace epf {

/// Ensemble CRPS, all-pairs form:
/// (1/S) sum |x_i - y| - 1/(2 S^2) sum_i sum_j |x_i - x_j|.
double crps_ensemble(std::span<const double> samples, double obs);

/// 2 * mean_tau pinball_tau(obs - q_tau). Approximates the CRPS of the
/// distribution whose quantiles are given; converges as the level grid
/// densifies. Throws DomainError on crossing quantiles.
double crps_quantile(std::span<const double> levels, std::span<const double> values, double obs);

/// rho_tau(u) = u * (tau - 1{u < 0}).
inline double pinball(double u, double tau) { return u * (tau - (u < 0.0 ? 1.0 : 0.0)); }

/// Energy score of S samples (rows) in R^m against `obs`.
double energy_score(const Eigen::MatrixXd& samples, const Eigen::VectorXd& obs, double beta = 1.0);

/// Per-horizon PIT of an ensemble: (#{x < y} + 0.5 #{x == y}) / S.
Eigen::VectorXd pit_values(const EnsembleForecast& f, const Eigen::VectorXd& obs);
/// Per-horizon PIT of a quantile forecast: level linearly interpolated at
/// the observation, clipped to [lowest level, highest level].
Eigen::VectorXd pit_values(const QuantileForecast& f, const Eigen::VectorXd& obs);
double pit_quantile(std::span<const double> levels, std::span<const double> values, double obs);

/// Levels 0.01, 0.02, ..., 0.99.
std::vector<double> default_ece_levels();

/// (1/m) sum_j |frac(PIT <= p_j) - p_j|.
double ece(std::span<const double> pit, std::span<const double> levels);

/// Kolmogorov-Smirnov distance between the empirical PIT CDF and U(0,1).
double ks_uniform(std::vector<double> pit);

/// Per-origin values of one metric.
struct ScoreSeries {
    std::string metric;
    std::vector<Instant> origins;
    std::vector<double> values;

    [[nodiscard]] double mean() const;
};

/// Long-format score table: one row per (origin, horizon, metric).
struct ScoreRow {
    Instant origin;
    int horizon = -1;  ///< -1 for per-origin metrics (energy score)
    std::string metric;
    double value = 0.0;
};

struct ScoreReport {
    std::vector<ScoreRow> rows;
    std::vector<double> pit;  ///< all PIT values, origin-major
    std::size_t omitted = 0;

    /// Mean over origins of the per-origin mean across horizons.
    [[nodiscard]] ScoreSeries series(const std::string& metric) const;
    [[nodiscard]] double mean(const std::string& metric) const;
    [[nodiscard]] std::string csv() const;
    /// Aggregate summary: mean per metric, ECE, PIT KS distance, counts.
    [[nodiscard]] std::string summary_json() const;
};

/// CRPS per (origin, horizon), energy score per origin, and PIT.
/// Forecasts without an observation for their origin are counted as omitted.
ScoreReport score_ensembles(const std::vector<EnsembleForecast>& forecasts, const std::vector<Observation>& obs);
/// CRPS (pinball form) per (origin, horizon) and PIT.
ScoreReport score_quantiles(const std::vector<QuantileForecast>& forecasts, const std::vector<Observation>& obs);

ScoreReport read_score_csv(const std::string& path);

}  // namespace epf
