#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epf/features.hpp"

namespace epf {

inline constexpr int kContextHours = 168;
inline constexpr int kHorizonHours = 24;
/// Market-dependent inputs are hidden over [10:00, 24:00) of the origin day.
inline constexpr int kMaskedHours = 14;

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// One forecasting instance.
///
/// `inputs` holds the context (168 rows) and `horizon` the 24 target-day
/// rows for every frame column; column 0 is the target. Cells that are not
/// observable at forecast time are zero with `known_mask` false: the target
/// and market columns over the horizon, and (after `apply_mask`) market
/// columns over the final 14 context hours. `known_mask` has 168+24 rows.
struct SampleWindow {
    Instant origin;  ///< end of the context (24:00 of day X-1) = first target hour
    std::vector<std::string> feature_names;
    std::vector<FeatureRole> roles;
    Eigen::MatrixXd inputs;   // context x F
    Eigen::MatrixXd horizon;  // horizon x F
    Eigen::VectorXd target;   // horizon
    BoolMatrix known_mask;    // (context + horizon) x F

    [[nodiscard]] std::size_t features() const { return feature_names.size(); }
    [[nodiscard]] Instant target_start() const { return origin; }
};

struct WindowOptions {
    int context = kContextHours;
    int horizon = kHorizonHours;
    int stride = 24;
    /// When set, `range` bounds the forecast hours only and the context may
    /// reach back before it (evaluation windows).
    bool targets_in_range = false;
};

/// Frame row indices at which windows start, for windows lying entirely
/// inside `range` (the whole frame when `range` is empty). The first window
/// starts at the first frame row inside the range. With `targets_in_range`
/// the first origin is the first row inside the range instead.
std::vector<std::size_t> window_starts(const FeatureFrame& frame, const WindowOptions& opt, Interval range = {});

/// Builds the unmasked window whose context begins at frame row `start`.
SampleWindow materialize(const FeatureFrame& frame, std::size_t start, const WindowOptions& opt = {});

struct WindowSet {
    std::vector<SampleWindow> windows;
    std::vector<std::string> warnings;
};

/// floor((T - context - horizon)/stride) + 1 windows over T hours; empty
/// with a warning when T < context + horizon. Stride must be 1 or 24.
WindowSet make_windows(const FeatureFrame& frame, const WindowOptions& opt = {}, Interval range = {});

/// Hides market-dependent inputs over the final 14 context hours. Idempotent.
SampleWindow apply_mask(SampleWindow w, double mask_value = 0.0);

/// Lightweight handle to windows of a frame, materialized on demand.
struct WindowIndex {
    const FeatureFrame* frame = nullptr;
    std::vector<std::size_t> starts;
    WindowOptions options;
    bool masked = true;

    [[nodiscard]] std::size_t size() const { return starts.size(); }
    [[nodiscard]] SampleWindow get(std::size_t i) const;
    [[nodiscard]] Instant origin(std::size_t i) const;
};

WindowIndex index_windows(const FeatureFrame& frame, const WindowOptions& opt, Interval range = {},
                          bool masked = true);

}  // namespace epf
