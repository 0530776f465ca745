#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "epf/baselines.hpp"
#include "epf/carbon.hpp"
#include "epf/config.hpp"
#include "epf/csv.hpp"
#include "epf/error.hpp"
#include "epf/ingest.hpp"
#include "epf/pipeline.hpp"
#include "epf/report.hpp"
#include "epf/scoring.hpp"
#include "epf/stats.hpp"
#include "epf/synthetic.hpp"

namespace fs = std::filesystem;
using namespace epf;
using ojson = nlohmann::ordered_json;

namespace {

struct Globals {
    std::string workspace = ".";
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string target_zone;
    std::string preset;
    bool verbose = false;
};

struct Context {
    RunConfig cfg;
    std::string subcommand;
    std::vector<std::string> arguments;
    bool verbose = false;

    [[nodiscard]] std::string path(const std::string& p) const { return cfg.path(p); }

    void log(const std::string& m) const {
        if (verbose) std::cerr << m << "\n";
    }

    void write(const std::string& path, const std::string& content) const { csv::write_file(path, content); }

    void manifest(const std::string& primary, const std::vector<std::string>& inputs,
                  const std::vector<std::string>& outputs) const {
        ojson m = make_manifest(subcommand, cfg, inputs, outputs);
        m["arguments"] = arguments;
        write(primary + ".manifest.json", m.dump(2) + "\n");
    }

    [[nodiscard]] PipelineOptions pipeline() const {
        PipelineOptions o = cfg.pipeline;
        if (verbose) o.log = [](const std::string& m) { std::cerr << m << "\n"; };
        return o;
    }
};

RunConfig load_run_config(const Globals& g) {
    nlohmann::json j = nlohmann::json::object();
    if (!g.config.empty()) {
        const fs::path p = fs::path(g.config).is_absolute() ? fs::path(g.config) : fs::path(g.workspace) / g.config;
        std::ifstream in(p);
        if (!in) throw Error("cannot open config " + p.string());
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("config " + p.string() + ": " + e.what());
        }
    }
    if (g.seed) j["seed"] = *g.seed;
    if (!g.target_zone.empty()) j["target_zone"] = g.target_zone;
    if (!g.preset.empty()) j["nhits"]["preset"] = g.preset;
    return parse_config(j, g.workspace);
}

std::string file_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json(const std::string& path) {
    try {
        return nlohmann::json::parse(file_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<FeatureGroup> parse_groups(const std::string& s) {
    std::vector<FeatureGroup> out;
    for (const auto& g : split_list(s)) out.push_back(parse_feature_group(g));
    return out;
}

Interval split_interval(const RunConfig& cfg, const std::string& split) {
    if (split == "test") return cfg.splits.test;
    if (split == "validation") return cfg.splits.validation;
    if (split == "train") return cfg.splits.train;
    throw DomainError("unknown split '" + split + "' (train|validation|test)");
}

std::vector<Instant> daily_origins(Interval iv) {
    std::vector<Instant> out;
    for (Instant t = iv.begin; t + std::chrono::hours(kHorizonHours) <= iv.end; t += std::chrono::hours(24))
        out.push_back(t);
    return out;
}

/// Observed prices at origin + h; origins with any missing or filled hour are dropped.
std::vector<Observation> observations_from_series(const HourlySeries& s, const std::vector<Instant>& origins) {
    std::vector<Observation> out;
    for (Instant o : origins) {
        Eigen::VectorXd v(kHorizonHours);
        bool ok = true;
        for (int h = 0; h < kHorizonHours && ok; ++h) {
            const auto i = s.index_of(o + std::chrono::hours(h));
            ok = i.has_value() && !s.filled[*i];
            if (ok) v[h] = s.values[*i];
        }
        if (ok) out.push_back({o, v});
    }
    return out;
}

std::map<std::string, ZoneSeries> load_zones(const RunConfig& cfg, SplitStrategy strategy) {
    std::map<std::string, ZoneSeries> zones;
    if (strategy == SplitStrategy::Full) {
        zones[cfg.target_zone] = load_zone_series(cfg.zone(cfg.target_zone));
    } else {
        for (const auto& z : cfg.zones) zones[z.zone] = load_zone_series(z);
        if (!zones.count(cfg.target_zone)) zones[cfg.target_zone] = load_zone_series(cfg.zone(cfg.target_zone));
    }
    return zones;
}

std::vector<std::string> cached_inputs(const RunConfig& cfg, const std::map<std::string, ZoneSeries>& zones) {
    std::vector<std::string> out;
    for (const auto& [code, z] : zones) {
        const SeriesCache cache(cfg.zone(code).cache_dir);
        out.push_back(cache.path(code, var::price));
        for (const auto& [v, s] : z.covariates) out.push_back(cache.path(code, v));
    }
    return out;
}

std::unique_ptr<PreparedData> prepare(const Context& c, SplitStrategy strategy,
                                      std::map<std::string, ZoneSeries>* zones_out = nullptr) {
    auto zones = load_zones(c.cfg, strategy);
    auto data = prepare_data(zones, c.cfg.target_zone, c.cfg.splits, strategy,
                             frame_options(c.cfg.zone(c.cfg.target_zone)), c.pipeline());
    if (zones_out) *zones_out = std::move(zones);
    return data;
}

const WindowSource& split_source(const PreparedData& d, const std::string& split) {
    if (split == "qra") return d.qra;
    if (split == "validation") return d.val;
    if (split == "test") return d.test;
    throw DomainError("unknown split '" + split + "' (qra|validation|test)");
}

std::map<Instant, SampleWindow> windows_by_origin(const WindowSource& src) {
    std::map<Instant, SampleWindow> out;
    for (std::size_t i = 0; i < src.size; ++i) {
        SampleWindow w = src.get(i);
        out.emplace(w.origin, std::move(w));
    }
    return out;
}

/// Standardized ensembles paired with their windows, in file order.
std::pair<std::vector<EnsembleForecast>, std::vector<SampleWindow>> pair_with_windows(
    const std::vector<EnsembleForecast>& ens, const WindowSource& src, const Standardizer& s, const std::string& target) {
    const auto by_origin = windows_by_origin(src);
    std::vector<EnsembleForecast> e;
    std::vector<SampleWindow> w;
    for (const auto& f : ens) {
        const auto it = by_origin.find(f.origin);
        if (it == by_origin.end()) throw Error("no input window for ensemble origin " + format_instant(f.origin));
        e.push_back(standardize_ensemble(f, s, target));
        w.push_back(it->second);
    }
    return {std::move(e), std::move(w)};
}

struct Checkpoint {
    NhitsModel model;
    SwagState swag;
    Standardizer standardizer;
    SplitStrategy strategy = SplitStrategy::Full;
};

Checkpoint load_checkpoint(const std::string& path) {
    const nlohmann::json j = read_json(path);
    Checkpoint c;
    c.model = model_from_checkpoint(j);
    if (j.contains("swag")) c.swag = SwagState::from_json(j.at("swag"));
    c.standardizer = standardizer_from_json(j.at("standardizer"));
    c.strategy = parse_split_strategy(j.value("strategy", std::string("full")));
    return c;
}

enum class ForecastKind { Ensemble, Quantile };

ForecastKind detect_kind(const std::string& path, const std::string& hint) {
    if (hint == "ensemble") return ForecastKind::Ensemble;
    if (hint == "quantile") return ForecastKind::Quantile;
    if (hint != "auto") throw DomainError("unknown forecast kind '" + hint + "' (auto|ensemble|quantile)");
    const auto lines = csv::read_lines(path);
    if (lines.empty()) throw ParseError(path + ": empty file");
    if (lines.front().rfind("origin,sample_idx", 0) == 0) return ForecastKind::Ensemble;
    if (lines.front().rfind("origin,horizon,level,value", 0) == 0) return ForecastKind::Quantile;
    throw ParseError(path + ": unrecognized header '" + lines.front() + "'");
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

ojson dm_json(const DmResult& r) {
    ojson j;
    j["statistic"] = r.statistic;
    j["p_value"] = r.p_value;
    j["reject"] = r.reject;
    j["direction"] = to_string(r.direction);
    j["mean_diff"] = r.mean_diff;
    j["lags"] = r.lags;
    j["T"] = r.T;
    j["degenerate_variance"] = r.degenerate_variance;
    j["no_decision"] = r.no_decision;
    return j;
}

// ---------------------------------------------------------------------------
// Subcommands

struct FetchArgs {
    std::string zone, start, end;
};

int cmd_fetch(const Context& c, const FetchArgs& a) {
    const std::string code = a.zone.empty() ? c.cfg.target_zone : a.zone;
    const ZoneConfig& z = c.cfg.zone(code);
    const Interval iv{a.start.empty() ? c.cfg.splits.train.begin - std::chrono::hours(24 * 400) : parse_instant(a.start),
                      a.end.empty() ? c.cfg.splits.test.end : parse_instant(a.end)};
    const HourlySeries s = fetch_prices(z, iv);
    const std::string out = SeriesCache(z.cache_dir).path(code, var::price);
    std::cout << code << " " << s.size() << " hours, " << count_filled(s) << " filled\n";
    c.manifest(out, {}, {out});
    return 0;
}

struct SynthArgs {
    std::string zone, start, end;
    double coupling = 0.0;
    double base = 60.0;
};

int cmd_synth(const Context& c, const SynthArgs& a) {
    const std::string code = a.zone.empty() ? c.cfg.target_zone : a.zone;
    const ZoneConfig& z = c.cfg.zone(code);
    SyntheticOptions o;
    o.zone = code;
    o.start = a.start.empty() ? c.cfg.splits.train.begin - std::chrono::hours(24 * 400) : parse_instant(a.start);
    const Instant end = a.end.empty() ? c.cfg.splits.test.end : parse_instant(a.end);
    o.hours = Interval{o.start, end}.hours();
    o.seed = c.cfg.seed ^ std::hash<std::string>{}(code);
    o.coupling = a.coupling;
    o.base = a.base;
    o.clock = z.clock;
    const SyntheticData d = make_synthetic(o);
    const SeriesCache cache(z.cache_dir);
    std::vector<std::string> outs{cache.path(code, var::price)};
    cache.save(d.price);
    for (const auto& [v, s] : d.covariates) {
        cache.save(s);
        outs.push_back(cache.path(code, v));
    }
    std::cout << code << " " << d.price.size() << " hours\n";
    c.manifest(outs.front(), {}, outs);
    return 0;
}

struct FeaturizeArgs {
    std::string zone, groups, out;
};

int cmd_featurize(const Context& c, const FeaturizeArgs& a) {
    const std::string code = a.zone.empty() ? c.cfg.target_zone : a.zone;
    const ZoneConfig& z = c.cfg.zone(code);
    const ZoneSeries zs = load_zone_series(z);
    const auto groups = a.groups.empty() ? c.cfg.pipeline.groups : parse_groups(a.groups);
    FrameOptions fo = frame_options(z);
    fo.calendar = c.cfg.pipeline.calendar;
    const FeatureFrame f = make_frame(zs, pipeline_columns(groups), fo);
    std::string text = "timestamp_utc";
    for (const auto& col : f.columns) text += "," + col.name;
    text += "\n";
    for (std::size_t i = 0; i < f.rows(); ++i) {
        text += format_instant(f.time[i]);
        for (const auto& col : f.columns) text += "," + csv::fixed(col.values[i]);
        text += "\n";
    }
    const std::string out = c.path(a.out.empty() ? "features/" + code + ".csv" : a.out);
    c.write(out, text);
    std::cout << out << ": " << f.rows() << " rows x " << f.width() << " columns\n";
    c.manifest(out, cached_inputs(c.cfg, {{code, zs}}), {out});
    return 0;
}

struct BaselineArgs {
    std::string method = "same-hour-28d";
    std::string split = "test";
    std::string out;
};

int cmd_baseline(const Context& c, const BaselineArgs& a) {
    const BaselineMethod method = parse_baseline_method(a.method);
    const ZoneConfig& z = c.cfg.zone(c.cfg.target_zone);
    const ZoneSeries zs = load_zone_series(z);
    std::optional<HourlySeries> reference;
    if (method == BaselineMethod::BootstrapSynthetic) {
        FrameOptions fo = frame_options(z);
        fo.calendar = false;
        const FeatureFrame f = make_frame(zs, {var::synthetic_price}, fo);
        HourlySeries r;
        r.zone = z.zone;
        r.variable = var::synthetic_price;
        r.timestamps = f.time;
        r.values = f.column(var::synthetic_price).values;
        r.filled.assign(r.size(), false);
        reference = std::move(r);
    }
    const auto origins = daily_origins(split_interval(c.cfg, a.split));
    const BaselineRun run = run_baseline(method, zs.target, reference ? &*reference : nullptr, origins,
                                         c.cfg.splits.train.end, c.cfg.bootstrap);
    for (const auto& [o, why] : run.omitted) std::cerr << "omitted " << format_instant(o) << ": " << why << "\n";
    const std::string out = c.path(a.out.empty() ? "forecasts/baseline-" + to_string(method) + ".csv" : a.out);
    c.write(out, ensemble_csv(run.forecasts));
    const ScoreReport rep = score_ensembles(run.forecasts, observations_from_series(zs.target, origins));
    std::cout << to_string(method) << " CRPS " << csv::fixed(rep.mean("crps")) << " over " << run.forecasts.size()
              << " origins\n";
    c.manifest(out, cached_inputs(c.cfg, {{z.zone, zs}}), {out});
    return 0;
}

struct TrainArgs {
    std::string strategy = "full";
    std::string out = "models/nhits.json";
};

int cmd_train(const Context& c, const TrainArgs& a) {
    const SplitStrategy strategy = parse_split_strategy(a.strategy);
    std::map<std::string, ZoneSeries> zones;
    const auto data = prepare(c, strategy, &zones);
    const TrainedNhits t = train_nhits_stage(*data, c.pipeline());
    nlohmann::json j = checkpoint_json(t.model, t.swag_or_null(), to_json(data->standardizer));
    j["strategy"] = to_string(strategy);
    j["train_report"] = {{"epochs_run", t.report.epochs_run},   {"best_epoch", t.report.best_epoch},
                         {"best_val_mae", t.report.best_val_mae}, {"early_stopped", t.report.early_stopped},
                         {"train_mae", t.report.train_mae},       {"val_mae", t.report.val_mae}};
    const std::string out = c.path(a.out);
    c.write(out, j.dump() + "\n");
    std::cout << "trained " << t.model.parameter_count() << " parameters for " << t.report.epochs_run
              << " epochs, best val MAE " << csv::fixed(t.report.best_val_mae) << " at epoch " << t.report.best_epoch
              << "\n";
    c.manifest(out, cached_inputs(c.cfg, zones), {out});
    return 0;
}

struct EnsembleArgs {
    std::string model = "models/nhits.json";
    std::string split = "test";
    std::string kind;
    int samples = 0;
    std::string out;
};

int cmd_ensemble(const Context& c, const EnsembleArgs& a) {
    const std::string model_path = c.path(a.model);
    const Checkpoint ck = load_checkpoint(model_path);
    std::map<std::string, ZoneSeries> zones;
    const auto data = prepare(c, ck.strategy, &zones);
    const WindowSource& src = split_source(*data, a.split);
    const EnsembleKind kind = a.kind.empty() ? c.cfg.pipeline.ensemble : parse_ensemble_kind(a.kind);
    const int S = a.samples > 0 ? a.samples : c.cfg.pipeline.qra.mc_samples;
    const auto ens = make_ensembles(ck.model, ck.swag.collected() > 0 ? &ck.swag : nullptr, src, kind, S,
                                    c.cfg.seed ^ 0xE45EULL);
    std::vector<EnsembleForecast> eur;
    for (const auto& e : ens) eur.push_back(unstandardize(e, ck.standardizer, data->target));
    const std::string out = c.path(a.out.empty() ? "ensembles/" + a.split + ".csv" : a.out);
    c.write(out, ensemble_csv(eur));
    std::cout << eur.size() << " ensembles of " << S << " members (" << to_string(kind) << ")\n";
    auto inputs = cached_inputs(c.cfg, zones);
    inputs.push_back(model_path);
    c.manifest(out, inputs, {out});
    return 0;
}

struct QraFitArgs {
    std::string model = "models/nhits.json";
    std::string ensembles = "ensembles/qra.csv";
    std::string out = "models/qra.json";
};

int cmd_qra_fit(const Context& c, const QraFitArgs& a) {
    const std::string model_path = c.path(a.model), ens_path = c.path(a.ensembles);
    const Checkpoint ck = load_checkpoint(model_path);
    std::map<std::string, ZoneSeries> zones;
    const auto data = prepare(c, ck.strategy, &zones);
    const auto [ens, windows] = pair_with_windows(read_ensemble_csv(ens_path), data->qra, ck.standardizer, data->target);
    const PipelineOptions o = c.pipeline();
    const QraDesign design = build_design(ens, windows, o.qra.design);
    QraModel m = fit_quantile_lasso(design, o.qra.fit);
    m.design = o.qra.design;
    for (const auto& w : m.warnings) std::cerr << "warning: " << w << "\n";
    const std::string out = c.path(a.out);
    c.write(out, to_json(m).dump() + "\n");
    std::cout << "QRA fit on " << ens.size() << " origins, " << m.levels.size() << " levels, "
              << design.columns.size() << " design columns\n";
    auto inputs = cached_inputs(c.cfg, zones);
    inputs.push_back(model_path);
    inputs.push_back(ens_path);
    c.manifest(out, inputs, {out});
    return 0;
}

struct PredictArgs {
    std::string model = "models/nhits.json";
    std::string qra = "models/qra.json";
    std::string ensembles = "ensembles/test.csv";
    std::string split = "test";
    std::string out = "forecasts/nhits-qra.csv";
};

int cmd_predict(const Context& c, const PredictArgs& a) {
    const std::string model_path = c.path(a.model), qra_path = c.path(a.qra), ens_path = c.path(a.ensembles);
    const Checkpoint ck = load_checkpoint(model_path);
    const QraModel qra = qra_model_from_json(read_json(qra_path));
    std::map<std::string, ZoneSeries> zones;
    const auto data = prepare(c, ck.strategy, &zones);
    const auto [ens, windows] =
        pair_with_windows(read_ensemble_csv(ens_path), split_source(*data, a.split), ck.standardizer, data->target);
    const auto q = predict_quantiles_eur(qra, ck.standardizer, data->target, ens, windows, c.pipeline());
    const std::string out = c.path(a.out);
    c.write(out, quantile_csv(q));
    std::cout << q.size() << " quantile forecasts\n";
    auto inputs = cached_inputs(c.cfg, zones);
    inputs.insert(inputs.end(), {model_path, qra_path, ens_path});
    c.manifest(out, inputs, {out});
    return 0;
}

ScoreReport score_file(const Context& c, const std::string& path, const std::string& kind_hint, std::size_t* count) {
    const ZoneSeries zs = load_zone_series(c.cfg.zone(c.cfg.target_zone));
    if (detect_kind(path, kind_hint) == ForecastKind::Ensemble) {
        const auto f = read_ensemble_csv(path);
        std::vector<Instant> origins;
        for (const auto& e : f) origins.push_back(e.origin);
        *count = f.size();
        return score_ensembles(f, observations_from_series(zs.target, origins));
    }
    const auto f = read_quantile_csv(path);
    std::vector<Instant> origins;
    for (const auto& q : f) origins.push_back(q.origin);
    *count = f.size();
    return score_quantiles(f, observations_from_series(zs.target, origins));
}

struct ScoreArgs {
    std::string forecasts;
    std::string kind = "auto";
    std::string out;
};

int cmd_score(const Context& c, const ScoreArgs& a) {
    const std::string in = c.path(a.forecasts);
    std::size_t n = 0;
    const ScoreReport rep = score_file(c, in, a.kind, &n);
    const std::string out = c.path(a.out.empty() ? "scores/" + stem(in) + ".csv" : a.out);
    const std::string summary = out.substr(0, out.size() - fs::path(out).extension().string().size()) + ".summary.json";
    c.write(out, rep.csv());
    c.write(summary, rep.summary_json());
    std::cout << rep.summary_json();
    const SeriesCache cache(c.cfg.zone(c.cfg.target_zone).cache_dir);
    c.manifest(out, {in, cache.path(c.cfg.target_zone, var::price)}, {out, summary});
    return 0;
}

struct ImportArgs {
    std::string file;
    std::string kind = "auto";
    std::string name;
};

int cmd_import(const Context& c, const ImportArgs& a) {
    const std::string in = c.path(a.file);
    const std::string name = a.name.empty() ? stem(in) : a.name;
    const std::string out = c.path("forecasts/imported-" + name + ".csv");
    std::size_t n = 0;
    if (detect_kind(in, a.kind) == ForecastKind::Ensemble) {
        const auto f = read_ensemble_csv(in);
        for (const auto& e : f)
            if (e.horizon() != kHorizonHours || !e.samples.allFinite())
                throw DomainError("import: ensemble at " + format_instant(e.origin) + " is not a finite 24-hour forecast");
        n = f.size();
        c.write(out, ensemble_csv(f));
    } else {
        const auto f = read_quantile_csv(in);
        for (const auto& q : f) {
            if (q.horizon() != kHorizonHours || !q.values.allFinite())
                throw DomainError("import: quantiles at " + format_instant(q.origin) + " are not a finite 24-hour forecast");
            if (!q.monotone()) throw DomainError("import: crossing quantiles at " + format_instant(q.origin));
        }
        n = f.size();
        c.write(out, quantile_csv(f));
    }
    std::cout << "imported " << n << " forecasts to " << out << "\n";
    c.manifest(out, {in}, {out});
    return 0;
}

struct DmArgs {
    std::string a, b;
    std::string metric = "crps";
    std::string out;
};

int cmd_dm(const Context& c, const DmArgs& a) {
    const std::string pa = c.path(a.a), pb = c.path(a.b);
    const ScoreSeries sa = read_score_csv(pa).series(a.metric), sb = read_score_csv(pb).series(a.metric);
    std::map<Instant, double> mb;
    for (std::size_t i = 0; i < sb.origins.size(); ++i) mb[sb.origins[i]] = sb.values[i];
    ScoreSeries xa{a.metric, {}, {}}, xb{a.metric, {}, {}};
    for (std::size_t i = 0; i < sa.origins.size(); ++i) {
        const auto it = mb.find(sa.origins[i]);
        if (it == mb.end()) continue;
        xa.origins.push_back(sa.origins[i]);
        xa.values.push_back(sa.values[i]);
        xb.origins.push_back(it->first);
        xb.values.push_back(it->second);
    }
    if (xa.values.size() < 3) throw Error("dm-test: fewer than 3 common origins");
    const DmResult r = dm_test(xa, xb, c.cfg.dm);
    ojson j;
    j["a"] = a.a;
    j["b"] = a.b;
    j["metric"] = a.metric;
    j["mean_a"] = xa.mean();
    j["mean_b"] = xb.mean();
    j["test"] = dm_json(r);
    const std::string out = c.path(a.out.empty() ? "dm/" + stem(pa) + "-vs-" + stem(pb) + ".json" : a.out);
    c.write(out, j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    c.manifest(out, {pa, pb}, {out});
    return 0;
}

struct SelectArgs {
    std::string candidates = "r1,r2,r3,r4,r5";
    std::string base;
    std::string out = "selection.json";
};

int cmd_select(const Context& c, const SelectArgs& a) {
    const auto zones = load_zones(c.cfg, SplitStrategy::Full);
    const FrameOptions fo = frame_options(c.cfg.zone(c.cfg.target_zone));
    const SelectionRunner runner = [&](const std::vector<FeatureGroup>& groups) {
        PipelineOptions o = c.pipeline();
        o.groups = groups;
        return run_pipeline(zones, c.cfg.target_zone, c.cfg.splits, SplitStrategy::Full, fo, o).val_scores.series("crps");
    };
    SelectionOptions so;
    so.dm = c.cfg.dm;
    so.parallel = false;
    const SelectionResult r = forward_select(runner, parse_groups(a.candidates), parse_groups(a.base), so);
    const std::string out = c.path(a.out);
    c.write(out, selection_json(r));
    std::cout << selection_json(r);
    c.manifest(out, cached_inputs(c.cfg, zones), {out});
    return 0;
}

struct XshotArgs {
    std::string strategy = "few-shot";
    std::string out_dir;
};

int cmd_xshot(const Context& c, const XshotArgs& a) {
    const SplitStrategy strategy = parse_split_strategy(a.strategy);
    const auto zones = load_zones(c.cfg, strategy);
    const FrameOptions fo = frame_options(c.cfg.zone(c.cfg.target_zone));
    const PipelineOptions o = c.pipeline();
    const PipelineResult r = run_pipeline(zones, c.cfg.target_zone, c.cfg.splits, strategy, fo, o);
    const std::string dir = c.path(a.out_dir.empty() ? "xshot/" + to_string(strategy) : a.out_dir);
    const std::string q = dir + "/quantiles.csv", s = dir + "/scores.csv", e = dir + "/ensembles.csv",
                      sum = dir + "/summary.json";
    c.write(q, quantile_csv(r.test_quantiles));
    c.write(e, ensemble_csv(r.test_ensembles));
    c.write(s, r.test_scores.csv());
    ojson j;
    j["strategy"] = to_string(strategy);
    j["target_zone"] = c.cfg.target_zone;
    j["train_windows"] = r.train_windows;
    j["epochs_run"] = r.train.epochs_run;
    j["best_epoch"] = r.train.best_epoch;
    j["validation_crps"] = r.val_scores.mean("crps");
    j["test_crps"] = r.test_scores.mean("crps");
    j["test_origins"] = r.test_quantiles.size();
    j["warnings"] = r.warnings;
    c.write(sum, j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    c.manifest(sum, cached_inputs(c.cfg, zones), {q, e, s, sum});
    return 0;
}

struct ReportArgs {
    bool fan_chart = false;
    std::string forecasts;
    std::string origin;
    std::vector<std::string> scores;
    std::string out;
};

int cmd_report(const Context& c, const ReportArgs& a) {
    if (!a.fan_chart && a.scores.empty()) throw DomainError("report: give --fan-chart or --scores");
    std::vector<std::string> inputs, outputs;
    if (a.fan_chart) {
        if (a.forecasts.empty()) throw DomainError("report --fan-chart needs --forecasts");
        const std::string in = c.path(a.forecasts);
        const auto fs_ = read_quantile_csv(in);
        if (fs_.empty()) throw Error("report: no forecasts in " + in);
        const QuantileForecast* f = &fs_.front();
        if (!a.origin.empty()) {
            const Instant t = parse_instant(a.origin);
            f = nullptr;
            for (const auto& q : fs_)
                if (q.origin == t) f = &q;
            if (f == nullptr) throw Error("report: no forecast for origin " + a.origin);
        }
        std::optional<Eigen::VectorXd> observed;
        const ZoneConfig& z = c.cfg.zone(c.cfg.target_zone);
        const SeriesCache cache(z.cache_dir);
        if (cache.exists(z.zone, var::price)) {
            const auto obs = observations_from_series(cache.load(z.zone, var::price), {f->origin});
            if (!obs.empty()) observed = obs.front().values;
            inputs.push_back(cache.path(z.zone, var::price));
        }
        const std::string day = format_instant(f->origin).substr(0, 13);
        const std::string out =
            c.path(a.out.empty() || !a.scores.empty() ? "reports/fan-" + stem(in) + "-" + day + ".svg" : a.out);
        c.write(out, fan_chart_svg(*f, observed, c.cfg.target_zone + " " + format_instant(f->origin)));
        inputs.push_back(in);
        outputs.push_back(out);
        std::cout << out << "\n";
    }
    if (!a.scores.empty()) {
        std::vector<std::pair<std::string, ScoreReport>> runs;
        for (const auto& spec : a.scores) {
            const auto eq = spec.find('=');
            const std::string path = c.path(eq == std::string::npos ? spec : spec.substr(eq + 1));
            runs.emplace_back(eq == std::string::npos ? stem(path) : spec.substr(0, eq), read_score_csv(path));
            inputs.push_back(path);
        }
        const std::string out = c.path(a.out.empty() || a.fan_chart ? "reports/scores.md" : a.out);
        const std::string md = score_table_markdown(runs);
        c.write(out, md);
        outputs.push_back(out);
        std::cout << md;
    }
    c.manifest(outputs.front(), inputs, outputs);
    return 0;
}

struct CarbonArgs {
    std::optional<double> hours, power_kw, energy_kwh;
    std::string power_log;
    double intensity = kGridIntensityKgPerKwh;
    double pue = kDataCentrePue;
    std::string out = "carbon.json";
};

int cmd_carbon(const Context& c, const CarbonArgs& a) {
    CarbonReport r;
    double hours = 0.0;
    std::vector<std::string> inputs;
    if (!a.power_log.empty()) {
        const std::string in = c.path(a.power_log);
        const auto [h, kwh] = integrate_power_log(in);
        hours = h;
        r = carbon_from_energy(kwh, a.intensity, a.pue);
        inputs.push_back(in);
    } else if (a.energy_kwh) {
        hours = a.hours.value_or(0.0);
        r = carbon_from_energy(*a.energy_kwh, a.intensity, a.pue);
    } else if (a.hours && a.power_kw) {
        hours = *a.hours;
        r = carbon_report(*a.hours, *a.power_kw, a.intensity, a.pue);
    } else {
        throw DomainError("carbon: give --hours with --power-kw, --energy-kwh, or --power-log");
    }
    ojson j;
    j["time_hours"] = hours;
    j["energy_kwh"] = r.energy_kwh;
    j["co2e_kg"] = r.co2e_kg;
    j["co2e_pue_kg"] = r.co2e_pue_kg;
    j["intensity_kg_per_kwh"] = a.intensity;
    j["pue"] = a.pue;
    const std::string out = c.path(a.out);
    c.write(out, j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    c.manifest(out, inputs, {out});
    return 0;
}

const char* error_kind(const Error& e) {
    if (dynamic_cast<const DomainError*>(&e)) return "domain";
    if (dynamic_cast<const ParseError*>(&e)) return "parse";
    if (dynamic_cast<const TransportError*>(&e)) return "transport";
    if (dynamic_cast<const NumericError*>(&e)) return "numeric";
    return "error";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Probabilistic day-ahead electricity price forecasting", "epf"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("-w,--workspace", g.workspace, "Directory all relative paths resolve against");
    app.add_option("-c,--config", g.config, "JSON config file (relative to the workspace)");
    app.add_option("--seed", g.seed, "Override the root seed");
    app.add_option("--target-zone", g.target_zone, "Override the target bidding zone");
    app.add_option("--preset", g.preset, "Override the NHITS/QRA preset");
    app.add_flag("-v,--verbose", g.verbose, "Progress on stderr");

    std::function<int(const Context&)> action;
    auto sub = [&](const char* name, const char* help) { return app.add_subcommand(name, help); };

    FetchArgs fetch;
    auto* s_fetch = sub("fetch", "Download hourly prices into the cache");
    s_fetch->add_option("--zone", fetch.zone);
    s_fetch->add_option("--start", fetch.start);
    s_fetch->add_option("--end", fetch.end);
    s_fetch->callback([&] { action = [&](const Context& c) { return cmd_fetch(c, fetch); }; });

    SynthArgs synth;
    auto* s_synth = sub("synth", "Write a synthetic zone into the cache");
    s_synth->add_option("--zone", synth.zone);
    s_synth->add_option("--start", synth.start);
    s_synth->add_option("--end", synth.end);
    s_synth->add_option("--coupling", synth.coupling);
    s_synth->add_option("--base", synth.base);
    s_synth->callback([&] { action = [&](const Context& c) { return cmd_synth(c, synth); }; });

    FeaturizeArgs feat;
    auto* s_feat = sub("featurize", "Write the feature frame of a zone");
    s_feat->add_option("--zone", feat.zone);
    s_feat->add_option("--groups", feat.groups, "Comma-separated groups, e.g. r1,r3");
    s_feat->add_option("--out", feat.out);
    s_feat->callback([&] { action = [&](const Context& c) { return cmd_featurize(c, feat); }; });

    BaselineArgs base;
    auto* s_base = sub("baseline", "Run a statistical baseline over daily origins");
    s_base->add_option("--method", base.method, "same-hour-28d|7d-12m|bootstrap-price|bootstrap-synthetic");
    s_base->add_option("--split", base.split);
    s_base->add_option("--out", base.out);
    s_base->callback([&] { action = [&](const Context& c) { return cmd_baseline(c, base); }; });

    TrainArgs train;
    auto* s_train = sub("train-nhits", "Train NHITS and write a checkpoint");
    s_train->add_option("--strategy", train.strategy, "full|zero-shot|one-shot|few-shot");
    s_train->add_option("--out", train.out);
    s_train->callback([&] { action = [&](const Context& c) { return cmd_train(c, train); }; });

    EnsembleArgs ens;
    auto* s_ens = sub("ensemble", "Sample NHITS ensembles over a split");
    s_ens->add_option("--model", ens.model);
    s_ens->add_option("--split", ens.split, "qra|validation|test");
    s_ens->add_option("--kind", ens.kind, "mc-dropout|swag");
    s_ens->add_option("--samples", ens.samples);
    s_ens->add_option("--out", ens.out);
    s_ens->callback([&] { action = [&](const Context& c) { return cmd_ensemble(c, ens); }; });

    QraFitArgs qfit;
    auto* s_qfit = sub("qra-fit", "Fit the quantile-lasso head on ensembles");
    s_qfit->add_option("--model", qfit.model);
    s_qfit->add_option("--ensembles", qfit.ensembles);
    s_qfit->add_option("--out", qfit.out);
    s_qfit->callback([&] { action = [&](const Context& c) { return cmd_qra_fit(c, qfit); }; });

    PredictArgs pred;
    auto* s_pred = sub("predict", "Quantile forecasts from ensembles and a QRA model");
    s_pred->add_option("--model", pred.model);
    s_pred->add_option("--qra", pred.qra);
    s_pred->add_option("--ensembles", pred.ensembles);
    s_pred->add_option("--split", pred.split);
    s_pred->add_option("--out", pred.out);
    s_pred->callback([&] { action = [&](const Context& c) { return cmd_predict(c, pred); }; });

    ScoreArgs score;
    auto* s_score = sub("score", "Score an ensemble or quantile CSV against cached prices");
    s_score->add_option("--forecasts", score.forecasts)->required();
    s_score->add_option("--kind", score.kind, "auto|ensemble|quantile");
    s_score->add_option("--out", score.out);
    s_score->callback([&] { action = [&](const Context& c) { return cmd_score(c, score); }; });

    DmArgs dm;
    auto* s_dm = sub("dm-test", "Diebold-Mariano test between two score files");
    s_dm->add_option("--a", dm.a)->required();
    s_dm->add_option("--b", dm.b)->required();
    s_dm->add_option("--metric", dm.metric);
    s_dm->add_option("--out", dm.out);
    s_dm->callback([&] { action = [&](const Context& c) { return cmd_dm(c, dm); }; });

    SelectArgs sel;
    auto* s_sel = sub("select-features", "Forward selection over feature groups");
    s_sel->add_option("--candidates", sel.candidates);
    s_sel->add_option("--base", sel.base);
    s_sel->add_option("--out", sel.out);
    s_sel->callback([&] { action = [&](const Context& c) { return cmd_select(c, sel); }; });

    XshotArgs xs;
    auto* s_xs = sub("xshot", "Train on donor zones and forecast the target zone");
    s_xs->add_option("--strategy", xs.strategy, "zero-shot|one-shot|few-shot|full");
    s_xs->add_option("--out-dir", xs.out_dir);
    s_xs->callback([&] { action = [&](const Context& c) { return cmd_xshot(c, xs); }; });

    ImportArgs imp;
    auto* s_imp = sub("import-forecasts", "Validate and import external ensemble or quantile forecasts");
    s_imp->add_option("--file", imp.file)->required();
    s_imp->add_option("--kind", imp.kind, "auto|ensemble|quantile");
    s_imp->add_option("--name", imp.name);
    s_imp->callback([&] { action = [&](const Context& c) { return cmd_import(c, imp); }; });

    ReportArgs rep;
    auto* s_rep = sub("report", "Score tables and SVG fan charts");
    s_rep->add_flag("--fan-chart", rep.fan_chart);
    s_rep->add_option("--forecasts", rep.forecasts);
    s_rep->add_option("--origin", rep.origin);
    s_rep->add_option("--scores", rep.scores, "name=path of a score CSV (repeatable)");
    s_rep->add_option("--out", rep.out);
    s_rep->callback([&] { action = [&](const Context& c) { return cmd_report(c, rep); }; });

    CarbonArgs carbon;
    auto* s_carbon = sub("carbon", "Energy and CO2e of a run");
    s_carbon->add_option("--hours", carbon.hours);
    s_carbon->add_option("--power-kw", carbon.power_kw);
    s_carbon->add_option("--energy-kwh", carbon.energy_kwh);
    s_carbon->add_option("--power-log", carbon.power_log, "CSV timestamp_utc,power_kw");
    s_carbon->add_option("--intensity", carbon.intensity);
    s_carbon->add_option("--pue", carbon.pue);
    s_carbon->add_option("--out", carbon.out);
    s_carbon->callback([&] { action = [&](const Context& c) { return cmd_carbon(c, carbon); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::string unknown;
        for (int i = 1; i < argc && unknown.empty(); ++i) {
            const std::string a = argv[i];
            if (a.rfind('-', 0) == 0) {
                if (a.find('=') == std::string::npos &&
                    (a == "-w" || a == "--workspace" || a == "-c" || a == "--config" || a == "--seed" ||
                     a == "--target-zone" || a == "--preset"))
                    ++i;
                continue;
            }
            try {
                (void)app.get_subcommand(a);
                break;
            } catch (const CLI::OptionNotFound&) {
                unknown = a;
            }
        }
        if (!unknown.empty())
            std::cerr << "error: unknown subcommand '" << unknown << "'\n\n" << app.help();
        else
            std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        Context c;
        c.cfg = load_run_config(g);
        c.subcommand = app.get_subcommands().front()->get_name();
        c.verbose = g.verbose;
        bool after = false;
        for (int i = 1; i < argc; ++i) {
            if (after) c.arguments.emplace_back(argv[i]);
            if (argv[i] == c.subcommand) after = true;
        }
        return action(c);
    } catch (const Error& e) {
        std::cerr << "error: " << error_kind(e) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
