#pragma once

#include <span>
#include <vector>

namespace epf {

/// Least-squares projection onto non-decreasing sequences (pool adjacent
/// violators, uniform weights). Preserves the mean; idempotent.
std::vector<double> isotonic_repair(std::span<const double> values);

/// Piecewise-linear map from `levels` to `values` evaluated at `targets`,
/// flat beyond the outermost levels. A single level yields a constant.
std::vector<double> interpolate_levels(std::span<const double> levels, std::span<const double> values,
                                       std::span<const double> targets);

/// {(i + 0.5) / n : i = 0..n-1}
std::vector<double> uniform_levels(int n);

}  // namespace epf
