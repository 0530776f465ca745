#include "epf/config.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "epf/csv.hpp"
#include "epf/error.hpp"

#ifndef EPF_SOURCE_DIR
#define EPF_SOURCE_DIR "."
#endif

namespace epf {

namespace fs = std::filesystem;

const ZoneConfig& RunConfig::zone(const std::string& code) const {
    for (const auto& z : zones)
        if (z.zone == code) return z;
    throw Error("zone '" + code + "' is not configured");
}

std::string RunConfig::path(const std::string& p) const {
    const fs::path q(p);
    if (q.is_absolute()) return q.string();
    return (fs::path(workspace) / q).lexically_normal().string();
}

ZoneSeries load_zone_series(const ZoneConfig& zone) {
    const SeriesCache cache(zone.cache_dir);
    if (!cache.exists(zone.zone, var::price))
        throw Error("no cached prices for " + zone.zone + " at " + cache.path(zone.zone, var::price) +
                    " (run fetch or synth first)");
    ZoneSeries z;
    z.target = cache.load(zone.zone, var::price);
    for (const char* v : {var::co2, var::load, var::gas, var::synthetic_price, var::gen_nonrenewable, var::gen_renewable,
                          var::cross_border})
        if (cache.exists(zone.zone, v)) z.covariates[v] = cache.load(zone.zone, v);
    return z;
}

FrameOptions frame_options(const ZoneConfig& zone) {
    FrameOptions o;
    o.clock = zone.clock;
    o.holidays = zone.holidays;
    return o;
}

namespace {

Interval parse_interval(const nlohmann::json& j, const char* name) {
    if (!j.is_array() || j.size() != 2) throw ParseError(std::string("splits.") + name + " must be [begin, end]");
    return {parse_instant(j[0].get<std::string>()), parse_instant(j[1].get<std::string>())};
}

}  // namespace

RunConfig parse_config(const nlohmann::json& j, const std::string& workspace) {
    RunConfig c;
    c.json = j;
    c.workspace = workspace;
    try {
        c.seed = j.value("seed", std::uint64_t{1});
        c.target_zone = j.value("target_zone", c.target_zone);
        c.endpoint = j.value("endpoint", c.endpoint);
        c.cache_dir = j.value("cache_dir", c.cache_dir);

        if (j.contains("zones")) {
            for (const auto& zj : j.at("zones")) {
                ZoneConfig z;
                z.zone = zj.at("zone").get<std::string>();
                z.endpoint = zj.value("endpoint", c.endpoint);
                z.features = zj.value("features", z.features);
                z.cache_dir = c.path(c.cache_dir);
                z.clock.standard_offset_hours = zj.value("utc_offset", 1);
                z.clock.eu_summer_time = zj.value("summer_time", true);
                for (const auto& d : zj.value("holidays", std::vector<std::string>{}))
                    z.holidays.insert(std::chrono::floor<std::chrono::days>(parse_instant(d)));
                z.validate();
                c.zones.push_back(std::move(z));
            }
        }
        if (c.zones.empty()) {
            ZoneConfig z;
            z.zone = c.target_zone;
            z.endpoint = c.endpoint;
            z.cache_dir = c.path(c.cache_dir);
            c.zones.push_back(z);
        }

        if (j.contains("splits")) {
            const auto& s = j.at("splits");
            if (s.contains("train")) c.splits.train = parse_interval(s.at("train"), "train");
            if (s.contains("validation")) c.splits.validation = parse_interval(s.at("validation"), "validation");
            if (s.contains("test")) c.splits.test = parse_interval(s.at("test"), "test");
            c.splits.few_shot_days = s.value("few_shot_days", c.splits.few_shot_days);
        }
        c.splits.validate();

        const std::string preset = j.contains("nhits") ? j.at("nhits").value("preset", std::string("tiny-default"))
                                                       : std::string("tiny-default");
        c.pipeline = PipelineOptions::from_preset(preset, c.seed);
        if (j.contains("nhits")) {
            nlohmann::json nj = j.at("nhits");
            nj["preset"] = preset;
            if (!nj.contains("seed")) nj["seed"] = c.seed;
            c.pipeline.nhits = nhits_config_from_json(nj);
        }
        if (j.contains("qra")) {
            const auto& q = j.at("qra");
            if (q.contains("preset")) c.pipeline.qra = qra_preset(q.at("preset").get<std::string>());
            auto& d = c.pipeline.qra.design;
            auto& f = c.pipeline.qra.fit;
            d.use_mean_sd = q.value("use_mean_sd", d.use_mean_sd);
            d.use_pca = q.value("use_pca", d.use_pca);
            d.pca_var = q.value("pca_var", d.pca_var);
            d.sample_k = q.value("sample_k", d.sample_k);
            d.future_covariates = q.value("future_covariates", d.future_covariates);
            f.levels = q.value("quantiles", f.levels);
            f.lambda_grid = q.value("lambda_grid", f.lambda_grid);
            f.n_epochs = q.value("n_epochs", f.n_epochs);
            f.batch_size = q.value("batch_size", f.batch_size);
            f.lr = q.value("lr", f.lr);
            f.patience = q.value("patience", f.patience);
            f.holdout_fraction = q.value("holdout_fraction", f.holdout_fraction);
            f.subsample_stride = q.value("subsample_stride", f.subsample_stride);
            c.pipeline.qra.mc_samples = q.value("mc_samples", c.pipeline.qra.mc_samples);
            c.pipeline.qra.uniform_levels = q.value("uniform_levels", c.pipeline.qra.uniform_levels);
        }
        c.pipeline.qra.fit.seed = c.seed;
        if (j.contains("pipeline")) {
            const auto& p = j.at("pipeline");
            c.pipeline.groups.clear();
            for (const auto& g : p.value("groups", std::vector<std::string>{}))
                c.pipeline.groups.push_back(parse_feature_group(g));
            c.pipeline.calendar = p.value("calendar", true);
            c.pipeline.ensemble = parse_ensemble_kind(p.value("ensemble", std::string("mc-dropout")));
            c.pipeline.qra_stride = p.value("qra_stride", 1);
            c.pipeline.max_train_windows = p.value("max_train_windows", std::size_t{0});
        }
        if (j.contains("baseline")) {
            c.bootstrap.lag_hours = j.at("baseline").value("lag_hours", 168);
            c.bootstrap.samples = j.at("baseline").value("samples", 200);
        }
        c.bootstrap.seed = c.seed;
        if (j.contains("dm")) {
            c.dm.alpha = j.at("dm").value("alpha", 0.05);
            if (j.at("dm").contains("harvey_horizon")) c.dm.harvey_horizon = j.at("dm").at("harvey_horizon").get<int>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    return c;
}

RunConfig load_config(const std::string& path, const std::string& workspace) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("config " + path + ": " + e.what());
    }
    return parse_config(j, workspace);
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

std::string file_sha256(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

std::string git_describe() {
    const std::string cmd = std::string("git -C \"") + EPF_SOURCE_DIR + "\" describe --always --dirty 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    if (p == nullptr) return "unknown";
    std::string out;
    char buf[256];
    while (std::fgets(buf, sizeof buf, p) != nullptr) out += buf;
    const int rc = pclose(p);
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return rc == 0 && !out.empty() ? out : "unknown";
}

nlohmann::ordered_json make_manifest(const std::string& subcommand, const RunConfig& cfg,
                                     const std::vector<std::string>& inputs, const std::vector<std::string>& outputs) {
    nlohmann::ordered_json m;
    m["subcommand"] = subcommand;
    m["config_sha256"] = sha256_hex(cfg.json.dump());
    m["seed"] = cfg.seed;
    m["git_describe"] = git_describe();
    auto digests = [&](const std::vector<std::string>& paths) {
        nlohmann::ordered_json a = nlohmann::ordered_json::array();
        for (const auto& p : paths) {
            const auto rel = fs::path(p).lexically_relative(fs::path(cfg.workspace)).lexically_normal().string();
            a.push_back({{"path", rel.empty() || rel.starts_with("..") ? p : rel},
                         {"sha256", fs::exists(p) ? file_sha256(p) : std::string("missing")}});
        }
        return a;
    };
    m["inputs"] = digests(inputs);
    m["outputs"] = digests(outputs);
    m["config"] = nlohmann::ordered_json::parse(cfg.json.dump());
    return m;
}

}  // namespace epf
