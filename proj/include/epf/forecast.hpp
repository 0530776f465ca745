#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epf/time.hpp"

namespace epf {

/// S equally weighted sample trajectories over the 24-hour horizon.
struct EnsembleForecast {
    Instant origin;
    Eigen::MatrixXd samples;  // S x horizon

    [[nodiscard]] Eigen::Index size() const { return samples.rows(); }
    [[nodiscard]] Eigen::Index horizon() const { return samples.cols(); }
};

/// Quantile values per horizon hour at increasing levels in (0, 1).
struct QuantileForecast {
    Instant origin;
    std::vector<double> levels;
    Eigen::MatrixXd values;  // levels x horizon

    [[nodiscard]] Eigen::Index horizon() const { return values.cols(); }
    /// True when every horizon column is non-decreasing in the level index.
    [[nodiscard]] bool monotone() const;
};

/// `origin,sample_idx,h0..h23`
std::string ensemble_csv(const std::vector<EnsembleForecast>& forecasts);
std::vector<EnsembleForecast> read_ensemble_csv(const std::string& path);

/// `origin,horizon,level,value`
std::string quantile_csv(const std::vector<QuantileForecast>& forecasts);
std::vector<QuantileForecast> read_quantile_csv(const std::string& path);

/// Observed 24-hour targets keyed by origin, `origin,h0..h23`.
struct Observation {
    Instant origin;
    Eigen::VectorXd values;
};
std::string observation_csv(const std::vector<Observation>& obs);
std::vector<Observation> read_observation_csv(const std::string& path);

}  // namespace epf
