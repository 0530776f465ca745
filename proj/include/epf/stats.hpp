#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epf/features.hpp"
#include "epf/scoring.hpp"

namespace epf {

/// Newey-West long-run variance with Bartlett weights 1 - j/(m+1) and
/// population autocovariances; floored at zero. Requires T >= 2, 0 <= m < T.
double newey_west_lrv(std::span<const double> d, int lags);

enum class DmDirection { None, FavorsA, FavorsB };
std::string to_string(DmDirection d);

struct DmResult {
    double statistic = 0.0;  ///< Harvey-adjusted
    double p_value = 1.0;
    bool reject = false;
    DmDirection direction = DmDirection::None;
    double mean_diff = 0.0;  ///< mean of lossA - lossB
    int lags = 0;
    std::size_t T = 0;
    bool degenerate_variance = false;  ///< zero LRV with nonzero mean difference
    bool no_decision = false;          ///< zero LRV and zero mean difference
};

struct DmOptions {
    double alpha = 0.05;
    /// Lag count; default floor(T^0.25).
    std::optional<int> lags;
    /// Forecast horizon used in the small-sample adjustment; default lags+1.
    std::optional<int> harvey_horizon;
};

/// Diebold-Mariano test of equal expected loss on aligned per-origin losses,
/// with the Harvey-Leybourne-Newbold correction and a Student-t(T-1)
/// reference. Positive statistics mean A has the larger loss.
DmResult dm_test(std::span<const double> loss_a, std::span<const double> loss_b, const DmOptions& opt = {});
DmResult dm_test(const ScoreSeries& a, const ScoreSeries& b, const DmOptions& opt = {});

// ---------------------------------------------------------------------------
// Forward selection over feature groups

struct SelectionStep {
    int step = 0;
    FeatureGroup candidate = FeatureGroup::Calendar;
    double dm_statistic = 0.0;
    double p_value = 1.0;
    double mean_diff = 0.0;  ///< candidate loss minus current loss
    bool significant = false;
    bool adopted = false;
    std::string skipped;  ///< runner failure message, if any
};

struct SelectionResult {
    std::vector<FeatureGroup> selected;  ///< base groups first, then adoptions in order
    std::vector<SelectionStep> trail;
    std::size_t dm_calls = 0;
};

/// Validation losses (one value per origin) for a candidate feature set.
using SelectionRunner = std::function<ScoreSeries(const std::vector<FeatureGroup>&)>;

struct SelectionOptions {
    DmOptions dm;
    bool parallel = true;
};

/// Greedy forward selection: at each step every unselected group is added
/// to the current set and compared with a DM test against the current set;
/// the significantly improving group with the largest mean improvement is
/// adopted (ties by lowest group order). Stops when nothing improves.
SelectionResult forward_select(const SelectionRunner& runner, const std::vector<FeatureGroup>& groups,
                               const std::vector<FeatureGroup>& base, const SelectionOptions& opt = {});

/// Recomputes the adoption decisions from a trail's recorded statistics.
std::vector<FeatureGroup> replay_selection(const std::vector<SelectionStep>& trail,
                                           const std::vector<FeatureGroup>& base);

std::string selection_json(const SelectionResult& r);

}  // namespace epf
