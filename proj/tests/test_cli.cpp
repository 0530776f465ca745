#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "epf/config.hpp"
#include "epf/csv.hpp"
#include "epf/forecast.hpp"
#include "epf/ingest.hpp"
#include "epf/scoring.hpp"

using namespace epf;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
};

/// Runs the CLI in `ws`; stdout and stderr are captured together.
RunResult run(const fs::path& ws, const std::string& args) {
    const std::string cmd = std::string("\"") + EPF_CLI_PATH + "\" -w \"" + ws.string() + "\" " + args + " 2>&1";
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    RunResult r;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_workspace(const std::string& name) {
    const fs::path ws = fs::temp_directory_path() / name;
    fs::remove_all(ws);
    fs::create_directories(ws);
    return ws;
}

const nlohmann::json kConfig = {
    {"seed", 11},
    {"target_zone", "BE"},
    {"splits",
     {{"train", {"2023-01-01", "2023-03-01"}},
      {"validation", {"2023-03-01", "2023-04-01"}},
      {"test", {"2023-04-01", "2023-04-15"}}}},
    {"nhits", {{"n_epochs", 2}, {"swag", {{"enabled", false}}}}},
    {"qra", {{"n_epochs", 10}, {"mc_samples", 8}, {"uniform_levels", 10}}},
    {"pipeline", {{"max_train_windows", 200}}},
    {"baseline", {{"samples", 20}}}};

void write_config(const fs::path& ws) { std::ofstream(ws / "config.json") << kConfig.dump(2); }

}  // namespace

TEST_CASE("exit codes for usage and runtime errors") {
    const fs::path ws = fresh_workspace("epf_cli_codes");
    const RunResult unknown = run(ws, "frobnicate");
    CHECK(unknown.code == 2);
    CHECK(unknown.out.find("unknown subcommand 'frobnicate'") != std::string::npos);
    CHECK(run(ws, "score").code == 2);  // missing required --forecasts
    CHECK(run(ws, "").code == 2);

    const RunResult missing = run(ws, "score --forecasts nope.csv");
    CHECK(missing.code == 1);
    CHECK(missing.out.rfind("error: ", 0) == 0);

    std::ofstream(ws / "bad.json") << "{ nope";
    const RunResult bad = run(ws, "-c bad.json carbon --hours 1 --power-kw 1");
    CHECK(bad.code == 1);
    CHECK(bad.out.find("error: parse: ") != std::string::npos);

    const RunResult domain = run(ws, "carbon --hours -1 --power-kw 1");
    CHECK(domain.code == 1);
    CHECK(domain.out.find("error: domain: ") != std::string::npos);
    fs::remove_all(ws);
}

TEST_CASE("carbon subcommand writes the hand-computed figures") {
    const fs::path ws = fresh_workspace("epf_cli_carbon");
    REQUIRE(run(ws, "carbon --hours 10 --power-kw 2 --out c.json").code == 0);
    const auto j = nlohmann::json::parse(slurp(ws / "c.json"));
    CHECK(j["energy_kwh"].get<double>() == doctest::Approx(20.0));
    CHECK(j["co2e_kg"].get<double>() == doctest::Approx(6.56));
    CHECK(j["co2e_pue_kg"].get<double>() == doctest::Approx(7.872));
    CHECK(fs::exists(ws / "c.json.manifest.json"));

    std::ofstream(ws / "power.csv") << "timestamp_utc,power_kw\n2024-01-01T00:00:00Z,1\n2024-01-01T02:00:00Z,3\n";
    REQUIRE(run(ws, "carbon --power-log power.csv --intensity 0.5 --pue 1 --out p.json").code == 0);
    const auto p = nlohmann::json::parse(slurp(ws / "p.json"));
    CHECK(p["time_hours"].get<double>() == doctest::Approx(2.0));
    CHECK(p["energy_kwh"].get<double>() == doctest::Approx(4.0));
    CHECK(p["co2e_pue_kg"].get<double>() == doctest::Approx(2.0));
    fs::remove_all(ws);
}

TEST_CASE("baseline on a constant price scores zero CRPS") {
    const fs::path ws = fresh_workspace("epf_cli_const");
    write_config(ws);
    HourlySeries s;
    s.zone = "BE";
    s.variable = "price";
    for (Instant t = parse_instant("2022-06-01"); t < parse_instant("2023-04-15"); t += Hours{1}) {
        s.timestamps.push_back(t);
        s.values.push_back(42.5);
        s.filled.push_back(false);
    }
    SeriesCache((ws / "data").string()).save(s);
    const RunResult b = run(ws, "-c config.json baseline --method same-hour-28d");
    REQUIRE_MESSAGE(b.code == 0, b.out);
    const RunResult sc = run(ws, "-c config.json score --forecasts forecasts/baseline-same-hour-28d.csv");
    REQUIRE_MESSAGE(sc.code == 0, sc.out);
    const ScoreReport rep = read_score_csv((ws / "scores/baseline-same-hour-28d.csv").string());
    CHECK(rep.series("crps").values.size() == 14);
    CHECK(rep.mean("crps") == 0.0);
    CHECK(rep.mean("energy_score") == 0.0);
    const auto summary = nlohmann::json::parse(slurp(ws / "scores/baseline-same-hour-28d.summary.json"));
    CHECK(summary.dump().find("crps") != std::string::npos);
    fs::remove_all(ws);
}

TEST_CASE("synthetic workflow is byte-reproducible and imports score identically") {
    const fs::path ws = fresh_workspace("epf_cli_flow");
    write_config(ws);
    REQUIRE(run(ws, "-c config.json synth").code == 0);
    CHECK(fs::exists(ws / "data/BE/price.csv"));
    CHECK(fs::exists(ws / "data/BE/price.csv.manifest.json"));

    const RunResult b1 = run(ws, "-c config.json baseline --method 7d-12m --out f/a.csv");
    REQUIRE_MESSAGE(b1.code == 0, b1.out);
    REQUIRE(run(ws, "-c config.json baseline --method 7d-12m --out f/b.csv").code == 0);
    CHECK(slurp(ws / "f/a.csv") == slurp(ws / "f/b.csv"));
    CHECK_FALSE(slurp(ws / "f/a.csv").empty());
    REQUIRE(run(ws, "-c config.json baseline --method bootstrap-price --out f/boot.csv").code == 0);

    // Model workflow: each stage reads the previous stage's artifacts.
    const RunResult tr = run(ws, "-c config.json train-nhits");
    REQUIRE_MESSAGE(tr.code == 0, tr.out);
    REQUIRE(run(ws, "-c config.json ensemble --split qra").code == 0);
    REQUIRE(run(ws, "-c config.json ensemble --split test").code == 0);
    const RunResult qf = run(ws, "-c config.json qra-fit");
    REQUIRE_MESSAGE(qf.code == 0, qf.out);
    const RunResult pr = run(ws, "-c config.json predict");
    REQUIRE_MESSAGE(pr.code == 0, pr.out);
    const std::string first = slurp(ws / "forecasts/nhits-qra.csv");
    const auto q = read_quantile_csv((ws / "forecasts/nhits-qra.csv").string());
    REQUIRE(q.size() == 14);
    for (const auto& f : q) CHECK(f.monotone());

    // Re-running the model stages reproduces every artifact byte for byte.
    const std::string ckpt = slurp(ws / "models/nhits.json"), qra = slurp(ws / "models/qra.json");
    REQUIRE(run(ws, "-c config.json train-nhits").code == 0);
    REQUIRE(run(ws, "-c config.json ensemble --split qra").code == 0);
    REQUIRE(run(ws, "-c config.json ensemble --split test").code == 0);
    REQUIRE(run(ws, "-c config.json qra-fit").code == 0);
    REQUIRE(run(ws, "-c config.json predict").code == 0);
    CHECK(slurp(ws / "models/nhits.json") == ckpt);
    CHECK(slurp(ws / "models/qra.json") == qra);
    CHECK(slurp(ws / "forecasts/nhits-qra.csv") == first);
    const auto manifest = nlohmann::json::parse(slurp(ws / "forecasts/nhits-qra.csv.manifest.json"));
    CHECK(manifest["subcommand"] == "predict");
    CHECK(manifest["seed"] == 11);
    CHECK(manifest["outputs"][0]["sha256"] == sha256_hex(first));

    // An imported copy of the forecasts scores exactly like the original.
    fs::copy_file(ws / "forecasts/nhits-qra.csv", ws / "external.csv");
    const RunResult im = run(ws, "-c config.json import-forecasts --file external.csv --name ext");
    REQUIRE_MESSAGE(im.code == 0, im.out);
    REQUIRE(run(ws, "-c config.json score --forecasts forecasts/nhits-qra.csv").code == 0);
    REQUIRE(run(ws, "-c config.json score --forecasts forecasts/imported-ext.csv").code == 0);
    CHECK(slurp(ws / "scores/nhits-qra.csv") == slurp(ws / "scores/imported-ext.csv"));

    // Crossing quantiles are refused at import.
    std::string crossing = first;
    const auto line_end = crossing.find('\n', crossing.find('\n') + 1);
    const auto comma = crossing.rfind(',', line_end);
    crossing.replace(comma + 1, line_end - comma - 1, "1e9");
    std::ofstream(ws / "crossing.csv") << crossing;
    const RunResult bad = run(ws, "-c config.json import-forecasts --file crossing.csv");
    CHECK(bad.code == 1);
    CHECK(bad.out.find("error: domain: ") != std::string::npos);

    REQUIRE(run(ws, "-c config.json score --forecasts f/a.csv").code == 0);
    const RunResult dm = run(ws, "-c config.json dm-test --a scores/nhits-qra.csv --b scores/a.csv");
    REQUIRE_MESSAGE(dm.code == 0, dm.out);
    const auto dj = nlohmann::json::parse(slurp(ws / "dm/nhits-qra-vs-a.json"));
    CHECK(dj["test"]["T"] == 14);

    const RunResult rep =
        run(ws, "-c config.json report --fan-chart --forecasts forecasts/nhits-qra.csv --scores nhits=scores/nhits-qra.csv "
                "--scores seasonal=scores/a.csv");
    REQUIRE_MESSAGE(rep.code == 0, rep.out);
    CHECK(fs::exists(ws / "reports/fan-nhits-qra-2023-04-01T00.svg"));
    const std::string md = slurp(ws / "reports/scores.md");
    CHECK(md.rfind("| run | crps |", 0) == 0);
    CHECK(md.find("| nhits |") != std::string::npos);
    CHECK(md.find("| seasonal |") != std::string::npos);
    fs::remove_all(ws);
}
