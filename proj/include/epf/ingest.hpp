#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "epf/features.hpp"
#include "epf/series.hpp"
#include "epf/window.hpp"

namespace epf {

struct ZoneConfig {
    std::string zone;
    std::string endpoint;  ///< base URL, e.g. https://api.energy-charts.info
    std::vector<std::string> features{var::price};
    std::string cache_dir = "cache";
    ZoneClock clock;
    HolidaySet holidays;

    /// Throws DomainError on an empty zone code or an unknown feature name.
    void validate() const;
};

/// `timestamp_utc,value` with ISO-8601 `Z` timestamps, up to 6 decimals, LF.
std::string series_csv(const HourlySeries& s);
void save_series_csv(const std::string& path, const HourlySeries& s);
/// Throws ParseError on a header mismatch, a malformed cell (naming the
/// column and row) or non-increasing timestamps.
HourlySeries load_series_csv(const std::string& path, const std::string& zone = "", const std::string& variable = "");

/// One CSV file per (zone, feature) under a directory. Writes to the same
/// file are serialized.
class SeriesCache {
public:
    explicit SeriesCache(std::string dir) : dir_(std::move(dir)) {}
    [[nodiscard]] std::string path(const std::string& zone, const std::string& feature) const;
    [[nodiscard]] bool exists(const std::string& zone, const std::string& feature) const;
    [[nodiscard]] HourlySeries load(const std::string& zone, const std::string& feature) const;
    void save(const HourlySeries& s) const;
    /// True when the cached series has a value at every hour of `iv`.
    [[nodiscard]] bool covers(const std::string& zone, const std::string& feature, Interval iv) const;
    [[nodiscard]] const std::string& dir() const { return dir_; }

private:
    std::mutex& lock_for(const std::string& path) const;
    std::string dir_;
    mutable std::mutex table_mutex_;
    mutable std::map<std::string, std::unique_ptr<std::mutex>> file_locks_;
};

/// Decodes `{"unix_seconds": [...], "price": [...]}`. Null prices are gaps;
/// repeated timestamps keep the first record; several records inside one
/// hour (sub-hourly products) are averaged. Throws ParseError naming the
/// offending record index.
HourlySeries parse_price_payload(const std::string& body, const std::string& zone);

struct FetchOptions {
    int attempts = 3;
    std::chrono::milliseconds backoff{500};       ///< doubled after each failure
    std::chrono::milliseconds min_interval{200};  ///< between consecutive requests
    std::chrono::seconds timeout{30};
};

/// GET {base}/price?bzn=..&start=..&end=.. with retries and rate limiting.
class PriceClient {
public:
    explicit PriceClient(std::string base_url, FetchOptions opt = {});
    /// Throws TransportError after the final failed attempt.
    std::string get(const std::string& zone, Interval iv);
    [[nodiscard]] int requests() const { return requests_; }

private:
    std::string base_;
    FetchOptions opt_;
    std::chrono::steady_clock::time_point last_{};
    int requests_ = 0;
};

/// Hourly prices over `iv`, served from the cache when it covers the
/// interval; otherwise fetched, merged into the cache and saved.
HourlySeries fetch_prices(const ZoneConfig& zone, Interval iv, const FetchOptions& opt = {});

// ---------------------------------------------------------------------------
// Splits

enum class XShot { None, OneWindow, FewShotDays };

struct DatasetSplits {
    Interval train;
    Interval validation;
    Interval test;
    XShot xshot = XShot::None;
    int few_shot_days = 30;

    /// Train 2018-10-01..2022-12-31, validation 2023, test 2024.
    static DatasetSplits defaults();
    /// Throws DomainError unless train < validation < test and none is empty.
    void validate() const;
};

enum class SplitStrategy { Full, ZeroShot, OneShot, FewShot };
std::string to_string(SplitStrategy s);
SplitStrategy parse_split_strategy(const std::string& s);

struct ZoneWindows {
    WindowIndex train;
    WindowIndex validation;
    WindowIndex test;
};

/// Window indices per zone. Frames are referenced, not copied.
struct SplitSet {
    std::string target_zone;
    SplitStrategy strategy = SplitStrategy::Full;
    std::map<std::string, ZoneWindows> zones;

    [[nodiscard]] std::size_t train_windows(const std::string& zone) const;
};

/// full: target train (stride 1), validation and test (stride 24).
/// Validation and test windows have their forecast hours inside the period;
/// their context may precede it.
/// zero-shot: donors train/validation only; the target contributes test windows.
/// one-shot: as zero-shot plus the final 192-hour target window of the validation period.
/// few-shot: as zero-shot plus target windows over the final `few_shot_days` of the
/// validation period at stride 24.
/// Throws Error listing the uncovered interval when a frame is too short.
SplitSet build_splits(const DatasetSplits& splits, SplitStrategy strategy, const std::string& target_zone,
                      const std::map<std::string, FeatureFrame>& frames);

/// True when no window of `idx` reads a row outside `iv` (only the forecast
/// hours are checked for `targets_in_range` windows).
bool windows_within(const WindowIndex& idx, Interval iv);

}  // namespace epf
