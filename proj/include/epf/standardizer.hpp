#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "epf/features.hpp"

namespace epf {

/// Per-column z-scoring with population statistics from training rows.
class Standardizer {
public:
    static constexpr double kStdFloor = 1e-8;

    Standardizer() = default;
    Standardizer(std::vector<std::string> names, std::vector<double> mean, std::vector<double> stdev);

    /// Rows are observations, columns features. Throws on an empty matrix.
    static Standardizer fit(const Eigen::MatrixXd& train_rows, std::vector<std::string> names = {});

    [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    [[nodiscard]] Eigen::MatrixXd invert(const Eigen::MatrixXd& z) const;

    [[nodiscard]] double apply(std::size_t col, double x) const { return (x - mean_[col]) / std_[col]; }
    [[nodiscard]] double invert(std::size_t col, double z) const { return z * std_[col] + mean_[col]; }

    [[nodiscard]] std::size_t size() const { return mean_.size(); }
    [[nodiscard]] const std::vector<std::string>& names() const { return names_; }
    [[nodiscard]] const std::vector<double>& mean() const { return mean_; }
    [[nodiscard]] const std::vector<double>& stdev() const { return std_; }
    [[nodiscard]] std::size_t index_of(const std::string& name) const;

private:
    std::vector<std::string> names_;
    std::vector<double> mean_;
    std::vector<double> std_;
};

/// Fits on the frame rows inside `train` for every non-calendar column.
/// Calendar columns are bounded by construction and pass through unchanged.
Standardizer fit_frame_standardizer(const FeatureFrame& frame, Interval train);
FeatureFrame standardize(const FeatureFrame& frame, const Standardizer& s);

/// `{"names": [...], "mean": [...], "std": [...]}`
nlohmann::json to_json(const Standardizer& s);
Standardizer standardizer_from_json(const nlohmann::json& j);

}  // namespace epf
