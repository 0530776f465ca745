#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "epf/config.hpp"
#include "epf/csv.hpp"
#include "epf/error.hpp"
#include "epf/pipeline.hpp"
#include "epf/synthetic.hpp"

using namespace epf;
namespace fs = std::filesystem;

namespace {

DatasetSplits short_splits() {
    DatasetSplits sp;
    sp.train = {parse_instant("2023-01-01"), parse_instant("2023-03-01")};
    sp.validation = {sp.train.end, parse_instant("2023-04-01")};
    sp.test = {sp.validation.end, parse_instant("2023-04-15")};
    return sp;
}

std::map<std::string, ZoneSeries> zones(const std::vector<std::string>& codes) {
    std::map<std::string, ZoneSeries> out;
    std::uint64_t seed = 1;
    for (const auto& z : codes) {
        SyntheticOptions so;
        so.zone = z;
        so.start = parse_instant("2023-01-01");
        so.hours = Interval{so.start, parse_instant("2023-04-15")}.hours();
        so.seed = seed++;
        so.base = 50.0 + 10.0 * double(seed);
        const SyntheticData d = make_synthetic(so);
        out[z] = {d.price, d.covariates};
    }
    return out;
}

PipelineOptions quick_options() {
    PipelineOptions o = PipelineOptions::from_preset("tiny-default", 3);
    o.nhits.n_epochs = 3;
    o.nhits.swag.enabled = false;
    o.nhits.mc_samples = 8;
    o.qra.fit.n_epochs = 20;
    o.qra.uniform_levels = 20;
    o.max_train_windows = 300;
    return o;
}

}  // namespace

TEST_CASE("synthetic data is reproducible and carries every covariate") {
    SyntheticOptions so;
    so.hours = 24 * 10;
    const SyntheticData a = make_synthetic(so), b = make_synthetic(so);
    CHECK(a.price.values == b.price.values);
    CHECK(a.price.size() == std::size_t(so.hours));
    for (const char* v : {"co2", "load", "gas", "gen_nonrenewable", "gen_renewable", "cross_border"})
        CHECK(a.covariates.count(v) == 1);
    so.seed = 2;
    CHECK(make_synthetic(so).price.values != a.price.values);
}

TEST_CASE("prepared data for the full and few-shot strategies") {
    const auto z = zones({"A", "B"});
    const DatasetSplits sp = short_splits();
    const PipelineOptions o = quick_options();
    const auto full = prepare_data(z, "A", sp, SplitStrategy::Full, FrameOptions{}, o);
    CHECK(full->train.size == o.max_train_windows);
    CHECK(full->test.size == 14);
    CHECK(full->val.size == 31);
    CHECK(full->target == "price");
    // Standardized target over the training rows has mean 0.
    const auto& col = full->frames.at("A").columns[0];
    const auto first = *full->frames.at("A").row_of(sp.train.begin), last = *full->frames.at("A").row_of(sp.train.end);
    double mean = 0.0;
    for (std::size_t r = first; r < last; ++r) mean += col.values[r];
    CHECK(mean / double(last - first) == doctest::Approx(0.0).epsilon(1e-9));

    const auto few = prepare_data(z, "A", sp, SplitStrategy::FewShot, FrameOptions{}, o);
    // Thinned donor windows plus the unthinned few-shot target windows.
    CHECK(few->train.size == o.max_train_windows + std::size_t(sp.few_shot_days - 7));
    CHECK(few->test.size == 14);
    CHECK_THROWS(prepare_data(zones({"A"}), "A", sp, SplitStrategy::ZeroShot, FrameOptions{}, o));
}

TEST_CASE("end-to-end run is deterministic and yields monotone quantiles") {
    const auto z = zones({"A"});
    const DatasetSplits sp = short_splits();
    const PipelineOptions o = quick_options();
    const PipelineResult a = run_pipeline(z, "A", sp, SplitStrategy::Full, FrameOptions{}, o);
    REQUIRE(a.test_quantiles.size() == 14);
    CHECK(a.test_obs.size() == 14);
    CHECK(a.test_ensembles.size() == 14);
    for (const auto& q : a.test_quantiles) {
        CHECK(q.monotone());
        CHECK(q.levels.size() == 20);
    }
    CHECK(a.test_scores.mean("crps") > 0.0);
    CHECK(a.train.epochs_run == 3);
    // Observations are in EUR/MWh, matching the raw series.
    const Observation& first = a.test_obs.front();
    CHECK(first.values(0) == doctest::Approx(*z.at("A").target.at(first.origin)));

    const PipelineResult b = run_pipeline(z, "A", sp, SplitStrategy::Full, FrameOptions{}, o);
    CHECK(b.test_quantiles.front().values == a.test_quantiles.front().values);
    CHECK(b.model.parameters() == a.model.parameters());

    const EnsembleForecast e = a.test_ensembles.front();
    const EnsembleForecast round = unstandardize(standardize_ensemble(e, a.standardizer, "price"), a.standardizer, "price");
    CHECK(round.samples.isApprox(e.samples));
}

TEST_CASE("ensemble kinds and window source concatenation") {
    CHECK(parse_ensemble_kind(to_string(EnsembleKind::Swag)) == EnsembleKind::Swag);
    CHECK(parse_ensemble_kind(to_string(EnsembleKind::McDropout)) == EnsembleKind::McDropout);
    CHECK_THROWS(parse_ensemble_kind("bagging"));
    auto counting = [](std::size_t n, int tag) {
        return WindowSource{n, [tag](std::size_t i) {
                                SampleWindow w;
                                w.origin = from_unix(3600LL * (tag * 1000 + long(i)));
                                return w;
                            }};
    };
    const WindowSource all = concat_sources({counting(3, 1), counting(2, 2)});
    CHECK(all.size == 5);
    CHECK(all.get(3).origin == from_unix(3600LL * 2000));
    const WindowSource thin = concat_sources({counting(10, 1)}, 4);
    CHECK(thin.size == 4);
    CHECK(thin.get(0).origin == from_unix(3600LL * 1000));
}

TEST_CASE("configuration parsing and manifests") {
    const fs::path ws = fs::temp_directory_path() / "epf_pipeline_cfg";
    fs::remove_all(ws);
    fs::create_directories(ws);
    const nlohmann::json j = {
        {"seed", 7},
        {"target_zone", "FR"},
        {"cache_dir", "cache"},
        {"zones", {{{"zone", "FR"}, {"utc_offset", 1}, {"holidays", {"2024-07-14"}}}, {{"zone", "BE"}}}},
        {"splits",
         {{"train", {"2023-01-01", "2023-06-01"}}, {"validation", {"2023-06-01", "2023-09-01"}},
          {"test", {"2023-09-01", "2024-01-01"}}}},
        {"nhits", {{"preset", "tiny-tuned"}, {"n_epochs", 4}}},
        {"qra", {{"quantiles", {0.1, 0.5, 0.9}}}},
        {"pipeline", {{"groups", {"R1"}}, {"ensemble", "swag"}}}};
    const RunConfig c = parse_config(j, ws.string());
    CHECK(c.seed == 7);
    CHECK(c.zones.size() == 2);
    CHECK(c.zone("FR").holidays.size() == 1);
    CHECK(c.zone("BE").cache_dir == (ws / "cache").string());
    CHECK(c.splits.test.begin == parse_instant("2023-09-01"));
    CHECK(c.pipeline.nhits.n_epochs == 4);
    CHECK(c.pipeline.nhits.mlp_units == nhits_preset("tiny-tuned").mlp_units);
    CHECK(c.pipeline.qra.fit.levels == std::vector<double>{0.1, 0.5, 0.9});
    CHECK(c.pipeline.groups == std::vector<FeatureGroup>{FeatureGroup::R1});
    CHECK(c.pipeline.ensemble == EnsembleKind::Swag);
    CHECK(c.path("x/y.csv") == (ws / "x/y.csv").string());
    CHECK(c.path("/abs/p") == "/abs/p");
    CHECK_THROWS((void)c.zone("NL"));

    CHECK_THROWS_AS(parse_config({{"splits", {{"train", {"2024-01-01", "2023-01-01"}}}}}), Error);
    CHECK_THROWS(parse_config({{"zones", {{{"zone", "FR"}, {"features", {"sunshine"}}}}}}));
    CHECK_THROWS(parse_config({{"pipeline", {{"groups", {"R9"}}}}}));

    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    csv::write_file((ws / "in.txt").string(), "abc");
    CHECK(file_sha256((ws / "in.txt").string()) == sha256_hex("abc"));

    const auto m = make_manifest("predict", c, {(ws / "in.txt").string()}, {(ws / "out.csv").string()});
    CHECK(m["subcommand"] == "predict");
    CHECK(m["seed"] == 7);
    CHECK(m["config_sha256"] == sha256_hex(c.json.dump()));
    CHECK(m["inputs"][0]["path"] == "in.txt");
    CHECK(m["inputs"][0]["sha256"] == sha256_hex("abc"));
    CHECK(m["outputs"][0]["sha256"] == "missing");
    CHECK(make_manifest("predict", c, {(ws / "in.txt").string()}, {}).dump() ==
          make_manifest("predict", c, {(ws / "in.txt").string()}, {}).dump());
    CHECK_FALSE(git_describe().empty());

    std::ofstream(ws / "bad.json") << "{ not json";
    CHECK_THROWS_AS(load_config((ws / "bad.json").string()), ParseError);
    fs::remove_all(ws);
}

TEST_CASE("zone series load from the cache") {
    const fs::path ws = fs::temp_directory_path() / "epf_pipeline_zone";
    fs::remove_all(ws);
    ZoneConfig z;
    z.zone = "NL";
    z.cache_dir = ws.string();
    CHECK_THROWS_WITH(load_zone_series(z), doctest::Contains("fetch or synth"));
    SyntheticOptions so;
    so.zone = "NL";
    so.hours = 48;
    const SyntheticData d = make_synthetic(so);
    const SeriesCache cache(ws.string());
    HourlySeries p = d.price;
    p.zone = "NL";
    cache.save(p);
    HourlySeries load = d.covariates.at("load");
    load.zone = "NL";
    cache.save(load);
    const ZoneSeries s = load_zone_series(z);
    CHECK(s.target.size() == 48);
    CHECK(s.covariates.size() == 1);
    CHECK(s.covariates.count("load") == 1);
    fs::remove_all(ws);
}
