#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "epf/baselines.hpp"
#include "epf/ingest.hpp"
#include "epf/pipeline.hpp"
#include "epf/stats.hpp"

namespace epf {

/// Single JSON file with one section per module:
/// seed, target_zone, endpoint, cache_dir, zones[], splits, nhits, qra,
/// pipeline, baseline, dm. Every key is optional.
struct RunConfig {
    nlohmann::json json;  ///< effective configuration (after flag overrides)
    std::string workspace = ".";
    std::uint64_t seed = 1;
    std::string target_zone = "DE-LU";
    std::string endpoint = "https://api.energy-charts.info";
    std::string cache_dir = "data";
    std::vector<ZoneConfig> zones;
    DatasetSplits splits = DatasetSplits::defaults();
    PipelineOptions pipeline;
    BootstrapOptions bootstrap;
    DmOptions dm;

    [[nodiscard]] const ZoneConfig& zone(const std::string& code) const;
    /// `p` resolved against the workspace unless absolute.
    [[nodiscard]] std::string path(const std::string& p) const;
};

/// Price series plus every known covariate present in the zone's cache.
/// Throws Error when the price series is not cached.
ZoneSeries load_zone_series(const ZoneConfig& zone);

/// Frame options (clock, holidays) of a configured zone.
FrameOptions frame_options(const ZoneConfig& zone);

/// Throws ParseError on malformed sections.
RunConfig parse_config(const nlohmann::json& j, const std::string& workspace = ".");
RunConfig load_config(const std::string& path, const std::string& workspace = ".");

std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::string& path);
/// `git describe --always --dirty` of the source tree, or "unknown".
std::string git_describe();

/// Run manifest: subcommand, config hash, seed, git describe and input /
/// output digests. Contains no timestamps so reruns are byte-identical.
nlohmann::ordered_json make_manifest(const std::string& subcommand, const RunConfig& cfg,
                                     const std::vector<std::string>& inputs, const std::vector<std::string>& outputs);

}  // namespace epf
