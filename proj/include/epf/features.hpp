#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "epf/series.hpp"
#include "epf/time.hpp"

namespace epf {

// ---------------------------------------------------------------------------
// Calendar

/// (sin, cos) of the phase 2*pi*value/period. Period must be 24, 7 or 12.
std::pair<double, double> cyclical_encode(int value, int period);

using HolidaySet = std::set<std::chrono::sys_days>;

inline const std::vector<std::string>& calendar_feature_names() {
    static const std::vector<std::string> names{"hour_sin", "hour_cos", "dow_sin",    "dow_cos",
                                                "month_sin", "month_cos", "is_weekend", "is_holiday"};
    return names;
}

/// One row of 8 calendar columns per hour in `range` (local wall-clock of
/// `clock`; holidays are local dates). Row-major, `range.hours()` rows.
std::vector<std::array<double, 8>> build_calendar_features(Interval range, const HolidaySet& holidays,
                                                           const ZoneClock& clock = {});

// ---------------------------------------------------------------------------
// Market variables

/// Gas-fired marginal cost proxy: gas/0.55 + 400 * co2 / 1000 (EUR/MWh).
double synthetic_price(double gas_price, double co2_price);

namespace var {
inline constexpr const char* price = "price";
inline constexpr const char* co2 = "co2";
inline constexpr const char* load = "load";
inline constexpr const char* gas = "gas";
inline constexpr const char* synthetic_price = "synthetic_price";
inline constexpr const char* gen_nonrenewable = "gen_nonrenewable";
inline constexpr const char* gen_renewable = "gen_renewable";
inline constexpr const char* cross_border = "cross_border";
}  // namespace var

/// Suffix of the week-lagged proxy column derived from a market variable.
inline constexpr const char* kProxySuffix = "_wk";
inline constexpr int kProxyLagHours = 168;

enum class FeatureGroup { Calendar, R1, R2, R3, R4, R5 };
enum class Representation { PastOnly, FutureProxy };

std::string to_string(FeatureGroup g);
FeatureGroup parse_feature_group(const std::string& s);

struct FeatureSpec {
    FeatureGroup group = FeatureGroup::Calendar;
    std::vector<std::string> members;
    Representation representation = Representation::PastOnly;
    bool market_dependent = false;
};

/// Market variables of a group (R1..R5); empty for Calendar.
const std::vector<std::string>& group_variables(FeatureGroup g);
/// Both representations of a group: the past-only spec (market-dependent,
/// masked near the origin) and the week-lagged proxy spec.
std::vector<FeatureSpec> feature_specs(FeatureGroup g);

/// Column names a set of groups contributes to a frame (variables plus
/// their proxies), deduplicated, in a fixed order.
std::vector<std::string> columns_for_groups(const std::vector<FeatureGroup>& groups);

// ---------------------------------------------------------------------------
// Feature frame

enum class FeatureRole {
    Target,       ///< the forecast variable; history known up to the origin
    Calendar,     ///< deterministic, known over inputs and horizon
    Market,       ///< past-only exogenous, market-dependent (masked near origin)
    FutureProxy,  ///< value 168 h earlier; known over inputs and horizon
};

bool is_future_known(FeatureRole r);

struct FeatureColumn {
    std::string name;
    FeatureRole role = FeatureRole::Market;
    std::vector<double> values;
};

/// Hour-aligned table; column 0 is always the target.
struct FeatureFrame {
    std::string zone;
    std::vector<Instant> time;
    std::vector<FeatureColumn> columns;

    [[nodiscard]] std::size_t rows() const { return time.size(); }
    [[nodiscard]] std::size_t width() const { return columns.size(); }
    [[nodiscard]] std::size_t column_index(const std::string& name) const;
    [[nodiscard]] const FeatureColumn& column(const std::string& name) const;
    [[nodiscard]] std::vector<std::string> names() const;
    [[nodiscard]] Interval span() const;
    [[nodiscard]] std::optional<std::size_t> row_of(Instant t) const;
    /// Frame restricted to the given column names (target always kept).
    [[nodiscard]] FeatureFrame select(const std::vector<std::string>& keep) const;
};

struct FrameOptions {
    ZoneClock clock;
    HolidaySet holidays;
    bool calendar = true;
};

/// Aligns the target and covariate series on the target's hourly axis.
/// Requested columns are market variables and `<var>_wk` proxies; the
/// synthetic price is derived from gas and co2 when not supplied directly.
/// Covariates are forward-filled across gaps (and back-filled before their
/// first observation).
FeatureFrame build_frame(const HourlySeries& target, const std::map<std::string, HourlySeries>& covariates,
                         const std::vector<std::string>& columns, const FrameOptions& options);

}  // namespace epf
