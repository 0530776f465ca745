#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "epf/forecast.hpp"
#include "epf/scoring.hpp"

namespace epf {

/// Central-interval coverages drawn as nested bands, outermost first.
inline const std::vector<double>& fan_coverages() {
    static const std::vector<double> c{0.98, 0.90, 0.80, 0.50};
    return c;
}

/// SVG 1.1 fan chart over the forecast's hourly positions: nested central
/// bands, the median line and (optionally) the realized prices.
std::string fan_chart_svg(const QuantileForecast& f, const std::optional<Eigen::VectorXd>& observed = std::nullopt,
                          const std::string& title = "");

/// Markdown table of mean scores per named run.
std::string score_table_markdown(const std::vector<std::pair<std::string, ScoreReport>>& runs);

}  // namespace epf
