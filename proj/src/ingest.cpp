#include "epf/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "epf/csv.hpp"
#include "epf/error.hpp"

namespace epf {

namespace fs = std::filesystem;

void ZoneConfig::validate() const {
    if (zone.empty()) throw DomainError("zone config: empty zone code");
    static const std::vector<std::string> known{var::price,           var::co2,           var::load,
                                                var::gas,             var::synthetic_price, var::gen_nonrenewable,
                                                var::gen_renewable,   var::cross_border};
    for (const auto& f : features)
        if (std::find(known.begin(), known.end(), f) == known.end())
            throw DomainError("zone config " + zone + ": unknown feature '" + f + "'");
}

// ---------------------------------------------------------------------------
// CSV

std::string series_csv(const HourlySeries& s) {
    std::string out = "timestamp_utc,value\n";
    out.reserve(out.size() + s.size() * 32);
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += format_instant(s.timestamps[i]);
        out += ',';
        out += csv::fixed(s.values[i], 6);
        out += '\n';
    }
    return out;
}

void save_series_csv(const std::string& path, const HourlySeries& s) { csv::write_file(path, series_csv(s)); }

HourlySeries load_series_csv(const std::string& path, const std::string& zone, const std::string& variable) {
    const auto lines = csv::read_lines(path);
    if (lines.empty()) throw ParseError(path + ": empty file");
    const auto header = csv::split(lines[0]);
    if (header.size() != 2 || header[0] != "timestamp_utc" || header[1] != "value") {
        std::string bad = header.empty() ? "" : std::string(header[0]);
        if (header.size() >= 1 && header[0] == "timestamp_utc") bad = header.size() >= 2 ? std::string(header[1]) : "";
        throw ParseError(path + ": expected header 'timestamp_utc,value', bad column '" + bad + "'");
    }
    HourlySeries s;
    s.zone = zone;
    s.variable = variable;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        if (lines[r].empty()) continue;
        const auto f = csv::split(lines[r]);
        if (f.size() != 2) throw ParseError(path + ": row " + std::to_string(r) + " has " + std::to_string(f.size()) + " fields");
        Instant t;
        try {
            t = parse_instant(f[0]);
        } catch (const Error& e) {
            throw ParseError(path + ": column timestamp_utc, row " + std::to_string(r) + ": " + e.what());
        }
        s.timestamps.push_back(t);
        s.values.push_back(csv::parse_double(f[1], "value", r));
    }
    s.filled.assign(s.size(), false);
    s.check_monotone();
    return s;
}

// ---------------------------------------------------------------------------
// Cache

std::string SeriesCache::path(const std::string& zone, const std::string& feature) const {
    return (fs::path(dir_) / zone / (feature + ".csv")).string();
}

bool SeriesCache::exists(const std::string& zone, const std::string& feature) const {
    return fs::exists(path(zone, feature));
}

HourlySeries SeriesCache::load(const std::string& zone, const std::string& feature) const {
    return load_series_csv(path(zone, feature), zone, feature);
}

std::mutex& SeriesCache::lock_for(const std::string& p) const {
    std::lock_guard<std::mutex> g(table_mutex_);
    auto& slot = file_locks_[p];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
}

void SeriesCache::save(const HourlySeries& s) const {
    if (s.zone.empty() || s.variable.empty()) throw Error("cache: series needs zone and variable");
    const auto p = path(s.zone, s.variable);
    std::lock_guard<std::mutex> g(lock_for(p));
    save_series_csv(p, s);
}

bool SeriesCache::covers(const std::string& zone, const std::string& feature, Interval iv) const {
    if (iv.empty()) return true;
    if (!exists(zone, feature)) return false;
    const auto s = load(zone, feature);
    if (s.empty()) return false;
    return s.timestamps.front() <= iv.begin && s.timestamps.back() >= iv.end - Hours{1} &&
           static_cast<long>(s.slice(iv).size()) == iv.hours();
}

// ---------------------------------------------------------------------------
// HTTP

HourlySeries parse_price_payload(const std::string& body, const std::string& zone) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("price payload: invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("unix_seconds") || !j.contains("price"))
        throw ParseError("price payload: missing 'unix_seconds' or 'price'");
    const auto& ts = j.at("unix_seconds");
    const auto& ps = j.at("price");
    if (!ts.is_array() || !ps.is_array()) throw ParseError("price payload: 'unix_seconds' and 'price' must be arrays");
    if (ts.size() != ps.size())
        throw ParseError("price payload: array lengths differ (" + std::to_string(ts.size()) + " vs " +
                         std::to_string(ps.size()) + "), first unmatched record " +
                         std::to_string(std::min(ts.size(), ps.size())));

    // hour -> (first-seen exact timestamps, their values)
    std::map<Instant, std::map<long long, double>> hours;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (!ts[i].is_number_integer() && !ts[i].is_number_unsigned() && !ts[i].is_number_float())
            throw ParseError("price payload: record " + std::to_string(i) + ": timestamp is not a number");
        if (ps[i].is_null()) continue;
        if (!ps[i].is_number()) throw ParseError("price payload: record " + std::to_string(i) + ": price is not a number");
        const auto sec = static_cast<long long>(ts[i].get<double>());
        const double v = ps[i].get<double>();
        if (!std::isfinite(v)) continue;
        hours[std::chrono::floor<Hours>(from_unix(sec))].emplace(sec, v);  // emplace keeps the first
    }
    HourlySeries raw;
    raw.zone = zone;
    raw.variable = var::price;
    for (const auto& [hour, recs] : hours) {
        double acc = 0.0;
        for (const auto& [sec, v] : recs) acc += v;
        raw.timestamps.push_back(hour);
        raw.values.push_back(acc / static_cast<double>(recs.size()));
    }
    return regularize(std::move(raw));
}

PriceClient::PriceClient(std::string base_url, FetchOptions opt) : base_(std::move(base_url)), opt_(opt) {
    while (!base_.empty() && base_.back() == '/') base_.pop_back();
    if (base_.empty()) throw DomainError("price client: empty endpoint");
}

namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme = url.find("://");
    const auto path_at = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_at == std::string::npos) return {url, ""};
    return {url.substr(0, path_at), url.substr(path_at)};
}

}  // namespace

std::string PriceClient::get(const std::string& zone, Interval iv) {
    const auto [host, prefix] = split_url(base_);
    const std::string path = prefix + "/price?bzn=" + zone + "&start=" + format_instant(iv.begin) +
                             "&end=" + format_instant(iv.end - std::chrono::seconds{1});
    auto delay = opt_.backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= std::max(1, opt_.attempts); ++attempt) {
        const auto now = std::chrono::steady_clock::now();
        if (requests_ > 0 && now - last_ < opt_.min_interval) std::this_thread::sleep_for(opt_.min_interval - (now - last_));
        last_ = std::chrono::steady_clock::now();
        ++requests_;
        httplib::Client cli(host);
        cli.set_connection_timeout(opt_.timeout);
        cli.set_read_timeout(opt_.timeout);
        cli.set_follow_location(true);
        auto res = cli.Get(path);
        if (res && res->status == 200) return res->body;
        last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
        if (attempt < opt_.attempts) {
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
    }
    throw TransportError("fetch " + zone + " " + format_instant(iv.begin) + ".." + format_instant(iv.end) + ": " +
                         last_error + " after " + std::to_string(opt_.attempts) + " attempts");
}

HourlySeries fetch_prices(const ZoneConfig& zone, Interval iv, const FetchOptions& opt) {
    zone.validate();
    HourlySeries empty;
    empty.zone = zone.zone;
    empty.variable = var::price;
    if (iv.empty()) return empty;
    const SeriesCache cache(zone.cache_dir);
    if (cache.covers(zone.zone, var::price, iv)) return cache.load(zone.zone, var::price).slice(iv);

    PriceClient client(zone.endpoint, opt);
    HourlySeries fresh = parse_price_payload(client.get(zone.zone, iv), zone.zone);
    // Fresh records first so they win on overlap; forward fills are not persisted.
    HourlySeries raw{zone.zone, var::price, {}, {}, {}};
    for (std::size_t i = 0; i < fresh.size(); ++i) {
        if (fresh.filled[i]) continue;
        raw.timestamps.push_back(fresh.timestamps[i]);
        raw.values.push_back(fresh.values[i]);
    }
    if (cache.exists(zone.zone, var::price)) {
        const auto old = cache.load(zone.zone, var::price);
        raw.timestamps.insert(raw.timestamps.end(), old.timestamps.begin(), old.timestamps.end());
        raw.values.insert(raw.values.end(), old.values.begin(), old.values.end());
    }
    HourlySeries merged = regularize(std::move(raw));
    merged.zone = zone.zone;
    merged.variable = var::price;
    cache.save(merged);
    return merged.slice(iv);
}

// ---------------------------------------------------------------------------
// Splits

DatasetSplits DatasetSplits::defaults() {
    DatasetSplits d;
    d.train = {parse_instant("2018-10-01"), parse_instant("2023-01-01")};
    d.validation = {parse_instant("2023-01-01"), parse_instant("2024-01-01")};
    d.test = {parse_instant("2024-01-01"), parse_instant("2025-01-01")};
    return d;
}

void DatasetSplits::validate() const {
    if (train.empty() || validation.empty() || test.empty()) throw DomainError("splits: empty interval");
    if (train.end > validation.begin || validation.end > test.begin)
        throw DomainError("splits: intervals must be disjoint and ordered train < validation < test");
    if (few_shot_days < 1) throw DomainError("splits: few_shot_days must be >= 1");
}

std::string to_string(SplitStrategy s) {
    switch (s) {
        case SplitStrategy::Full: return "full";
        case SplitStrategy::ZeroShot: return "zero-shot";
        case SplitStrategy::OneShot: return "one-shot";
        case SplitStrategy::FewShot: return "few-shot";
    }
    return "?";
}

SplitStrategy parse_split_strategy(const std::string& s) {
    if (s == "full") return SplitStrategy::Full;
    if (s == "zero-shot") return SplitStrategy::ZeroShot;
    if (s == "one-shot") return SplitStrategy::OneShot;
    if (s == "few-shot") return SplitStrategy::FewShot;
    throw DomainError("unknown split strategy '" + s + "' (full|zero-shot|one-shot|few-shot)");
}

std::size_t SplitSet::train_windows(const std::string& zone) const {
    auto it = zones.find(zone);
    return it == zones.end() ? 0 : it->second.train.size();
}

namespace {

void require_cover(const std::string& zone, const FeatureFrame& f, Interval iv) {
    const Interval have = f.span();
    if (have.empty() || have.begin > iv.begin || have.end < iv.end) {
        Interval missing = iv;
        if (!have.empty() && have.begin <= iv.begin && have.end > iv.begin) missing.begin = have.end;
        else if (!have.empty() && have.end >= iv.end && have.begin < iv.end) missing.end = have.begin;
        throw Error("zone " + zone + ": data does not cover " + format_instant(iv.begin) + ".." +
                    format_instant(iv.end) + " (missing " + format_instant(missing.begin) + ".." +
                    format_instant(missing.end) + ")");
    }
}

WindowIndex empty_index(const FeatureFrame& f) {
    WindowIndex w;
    w.frame = &f;
    return w;
}

}  // namespace

SplitSet build_splits(const DatasetSplits& splits, SplitStrategy strategy, const std::string& target_zone,
                      const std::map<std::string, FeatureFrame>& frames) {
    splits.validate();
    auto tz = frames.find(target_zone);
    if (tz == frames.end()) throw Error("splits: no data for target zone " + target_zone);
    SplitSet out;
    out.target_zone = target_zone;
    out.strategy = strategy;
    const WindowOptions hourly{kContextHours, kHorizonHours, 1};
    const WindowOptions daily{kContextHours, kHorizonHours, 24};
    const WindowOptions eval{kContextHours, kHorizonHours, 24, true};

    const FeatureFrame& target = tz->second;
    if (strategy == SplitStrategy::Full) {
        require_cover(target_zone, target, {splits.train.begin, splits.test.end});
        out.zones[target_zone] = {index_windows(target, hourly, splits.train), index_windows(target, eval, splits.validation),
                                  index_windows(target, eval, splits.test)};
        return out;
    }

    for (const auto& [zone, frame] : frames) {
        if (zone == target_zone) continue;
        require_cover(zone, frame, {splits.train.begin, splits.validation.end});
        out.zones[zone] = {index_windows(frame, hourly, splits.train), index_windows(frame, eval, splits.validation),
                           empty_index(frame)};
    }
    if (out.zones.empty()) throw Error("splits: " + to_string(strategy) + " needs at least one donor zone");

    require_cover(target_zone, target, {splits.test.begin - Hours{kContextHours}, splits.test.end});
    ZoneWindows t{empty_index(target), empty_index(target), index_windows(target, eval, splits.test)};
    const long span = kContextHours + kHorizonHours;
    if (strategy == SplitStrategy::OneShot) {
        const Interval last{splits.validation.end - Hours{span}, splits.validation.end};
        require_cover(target_zone, target, last);
        t.train = index_windows(target, daily, last);
    } else if (strategy == SplitStrategy::FewShot) {
        const Interval last{splits.validation.end - Hours{24L * splits.few_shot_days}, splits.validation.end};
        require_cover(target_zone, target, last);
        t.train = index_windows(target, daily, last);
    }
    out.zones[target_zone] = std::move(t);
    return out;
}

bool windows_within(const WindowIndex& idx, Interval iv) {
    if (idx.frame == nullptr) return idx.starts.empty();
    const auto len = static_cast<std::size_t>(idx.options.context + idx.options.horizon);
    const std::size_t skip = idx.options.targets_in_range ? static_cast<std::size_t>(idx.options.context) : 0;
    for (std::size_t s : idx.starts) {
        const Instant first = idx.frame->time[s + skip];
        const Instant last = idx.frame->time[s + len - 1];
        if (!iv.contains(first) || !iv.contains(last)) return false;
    }
    return true;
}

}  // namespace epf
