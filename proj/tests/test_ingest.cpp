#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "epf/csv.hpp"
#include "epf/error.hpp"
#include "epf/ingest.hpp"

#include <httplib.h>

using namespace epf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("epf_ingest_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

HourlySeries hourly(const std::string& zone, Instant start, long hours, double offset = 0.0) {
    HourlySeries s{zone, "price", {}, {}, {}};
    for (long i = 0; i < hours; ++i) {
        s.timestamps.push_back(start + Hours{i});
        s.values.push_back(offset + 0.25 * double(i % 97) - 7.0);
        s.filled.push_back(false);
    }
    return s;
}

std::string payload(Instant start, long hours, double offset = 0.0) {
    nlohmann::json j;
    for (long i = 0; i < hours; ++i) {
        j["unix_seconds"].push_back(to_unix(start + Hours{i}));
        j["price"].push_back(offset + double(i));
    }
    return j.dump();
}

/// Local price endpoint that fails the first `failures` requests with 503.
struct FakeServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> hits{0};
    std::string last_query;

    FakeServer(int failures, std::string body) {
        server.Get("/api/price", [this, failures, body](const httplib::Request& req, httplib::Response& res) {
            const int n = ++hits;
            last_query = req.get_param_value("bzn") + "|" + req.get_param_value("start") + "|" +
                         req.get_param_value("end");
            if (n <= failures) {
                res.status = 503;
                return;
            }
            res.set_content(body, "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~FakeServer() {
        server.stop();
        thread.join();
    }
    [[nodiscard]] std::string url() const { return "http://127.0.0.1:" + std::to_string(port) + "/api"; }
};

FetchOptions quick(int attempts) {
    FetchOptions o;
    o.attempts = attempts;
    o.backoff = std::chrono::milliseconds{1};
    o.min_interval = std::chrono::milliseconds{0};
    o.timeout = std::chrono::seconds{5};
    return o;
}

}  // namespace

TEST_CASE("price payload decoding") {
    const Instant t0 = parse_instant("2024-05-01");
    const long long u = to_unix(t0);
    SUBCASE("nulls become forward-filled gaps") {
        const std::string body = "{\"unix_seconds\":[" + std::to_string(u) + "," + std::to_string(u + 3600) + "," +
                                 std::to_string(u + 7200) + "],\"price\":[10.5,null,-3.25]}";
        const HourlySeries s = parse_price_payload(body, "DE-LU");
        REQUIRE(s.size() == 3);
        CHECK(s.zone == "DE-LU");
        CHECK(s.values == std::vector<double>{10.5, 10.5, -3.25});
        CHECK(s.filled == std::vector<bool>{false, true, false});
    }
    SUBCASE("quarter-hour records average into their hour; repeats keep the first") {
        const std::string body = "{\"unix_seconds\":[" + std::to_string(u) + "," + std::to_string(u + 900) + "," +
                                 std::to_string(u + 1800) + "," + std::to_string(u + 2700) + "," +
                                 std::to_string(u + 2700) + "],\"price\":[1,2,3,6,100]}";
        const HourlySeries s = parse_price_payload(body, "AT");
        REQUIRE(s.size() == 1);
        CHECK(s.values[0] == doctest::Approx(3.0));
    }
    SUBCASE("malformed payloads name the problem") {
        CHECK_THROWS_AS(parse_price_payload("not json", "Z"), ParseError);
        CHECK_THROWS_AS(parse_price_payload("{\"price\":[]}", "Z"), ParseError);
        CHECK_THROWS_WITH_AS(parse_price_payload("{\"unix_seconds\":[1,2],\"price\":[1]}", "Z"),
                             doctest::Contains("record 1"), ParseError);
        CHECK_THROWS_WITH_AS(parse_price_payload("{\"unix_seconds\":[3600,\"x\"],\"price\":[1,2]}", "Z"),
                             doctest::Contains("record 1"), ParseError);
        CHECK_THROWS_WITH_AS(parse_price_payload("{\"unix_seconds\":[3600,7200],\"price\":[1,\"2\"]}", "Z"),
                             doctest::Contains("record 1"), ParseError);
    }
}

TEST_CASE("series CSV round-trips and rejects malformed files") {
    const fs::path dir = scratch("csv");
    const HourlySeries s = hourly("FR", parse_instant("2024-01-01"), 50);
    const std::string text = series_csv(s);
    CHECK(text.rfind("timestamp_utc,value\n2024-01-01T00:00:00Z,-7\n", 0) == 0);
    const std::string path = (dir / "fr.csv").string();
    save_series_csv(path, s);
    const HourlySeries back = load_series_csv(path, "FR", "price");
    CHECK(back.timestamps == s.timestamps);
    CHECK(back.values == s.values);

    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream(dir / name) << content;
        return (dir / name).string();
    };
    CHECK_THROWS_WITH_AS(load_series_csv(write("h.csv", "time,value\n")), doctest::Contains("time"), ParseError);
    CHECK_THROWS_WITH_AS(load_series_csv(write("c.csv", "timestamp_utc,value\n2024-01-01T00:00:00Z,abc\n")),
                         doctest::Contains("value"), ParseError);
    CHECK_THROWS_AS(load_series_csv(write("o.csv",
                                          "timestamp_utc,value\n2024-01-01T01:00:00Z,1\n2024-01-01T00:00:00Z,2\n")),
                    ParseError);
    fs::remove_all(dir);
}

TEST_CASE("cache coverage") {
    const fs::path dir = scratch("cache");
    const SeriesCache cache(dir.string());
    const Instant t0 = parse_instant("2024-01-01");
    CHECK_FALSE(cache.exists("NL", "price"));
    cache.save(hourly("NL", t0, 48));
    CHECK(cache.path("NL", "price") == (dir / "NL" / "price.csv").string());
    CHECK(cache.covers("NL", "price", {t0, t0 + Hours{48}}));
    CHECK_FALSE(cache.covers("NL", "price", {t0, t0 + Hours{49}}));
    CHECK_FALSE(cache.covers("NL", "price", {t0 - Hours{1}, t0 + Hours{2}}));
    CHECK(cache.load("NL", "price").size() == 48);
    CHECK_THROWS(cache.save(HourlySeries{}));
    fs::remove_all(dir);
}

TEST_CASE("fetch retries transient failures, then serves from the cache") {
    const fs::path dir = scratch("fetch");
    const Instant t0 = parse_instant("2024-03-01");
    FakeServer srv(2, payload(t0, 24, 40.0));
    ZoneConfig zone;
    zone.zone = "BE";
    zone.endpoint = srv.url();
    zone.cache_dir = dir.string();
    const Interval iv{t0, t0 + Hours{24}};

    const HourlySeries s = fetch_prices(zone, iv, quick(3));
    CHECK(srv.hits == 3);
    CHECK(srv.last_query == "BE|2024-03-01T00:00:00Z|2024-03-01T23:59:59Z");
    REQUIRE(s.size() == 24);
    CHECK(s.values.front() == 40.0);
    CHECK(s.values.back() == 63.0);
    CHECK(SeriesCache(dir.string()).covers("BE", "price", iv));

    const HourlySeries again = fetch_prices(zone, iv, quick(3));
    CHECK(srv.hits == 3);
    CHECK(again.values == s.values);
    fs::remove_all(dir);
}

TEST_CASE("fetch gives a transport error after the final attempt") {
    const fs::path dir = scratch("fail");
    FakeServer srv(100, "{}");
    PriceClient client(srv.url(), quick(2));
    const Instant t0 = parse_instant("2024-03-01");
    CHECK_THROWS_WITH_AS(client.get("BE", {t0, t0 + Hours{24}}), doctest::Contains("HTTP 503"), TransportError);
    CHECK(client.requests() == 2);

    PriceClient nobody("http://127.0.0.1:1", quick(1));
    CHECK_THROWS_AS(nobody.get("BE", {t0, t0 + Hours{24}}), TransportError);
    fs::remove_all(dir);
}

TEST_CASE("zone configuration validation") {
    ZoneConfig z;
    CHECK_THROWS_AS(z.validate(), DomainError);
    z.zone = "DE-LU";
    CHECK_NOTHROW(z.validate());
    z.features.push_back("sunshine");
    CHECK_THROWS_AS(z.validate(), DomainError);
}

TEST_CASE("dataset split periods") {
    const DatasetSplits d = DatasetSplits::defaults();
    CHECK(d.train.begin == parse_instant("2018-10-01"));
    CHECK(d.validation.begin == parse_instant("2023-01-01"));
    CHECK(d.test.begin == parse_instant("2024-01-01"));
    CHECK(d.test.end == parse_instant("2025-01-01"));
    CHECK_NOTHROW(d.validate());
    DatasetSplits bad = d;
    bad.validation.begin = parse_instant("2022-06-01");
    CHECK_THROWS_AS(bad.validate(), DomainError);
    for (auto s : {SplitStrategy::Full, SplitStrategy::ZeroShot, SplitStrategy::OneShot, SplitStrategy::FewShot})
        CHECK(parse_split_strategy(to_string(s)) == s);
    CHECK_THROWS(parse_split_strategy("two-shot"));
}

TEST_CASE("window counts per split strategy") {
    DatasetSplits d;
    d.train = {parse_instant("2024-01-01"), parse_instant("2024-02-01")};
    d.validation = {parse_instant("2024-02-01"), parse_instant("2024-03-15")};
    d.test = {parse_instant("2024-03-15"), parse_instant("2024-04-01")};
    const long hours = Interval{d.train.begin, d.test.end}.hours();
    std::map<std::string, FeatureFrame> frames;
    for (const std::string z : {"A", "B", "C"})
        frames[z] = build_frame(hourly(z, d.train.begin, hours), {}, {}, FrameOptions{});

    const long train_h = d.train.hours();
    const std::size_t val_days = std::size_t(d.validation.hours() / 24), test_days = std::size_t(d.test.hours() / 24);

    const SplitSet full = build_splits(d, SplitStrategy::Full, "A", frames);
    CHECK(full.zones.size() == 1);
    CHECK(full.train_windows("A") == std::size_t(train_h - 192 + 1));
    CHECK(full.zones.at("A").validation.size() == val_days);
    CHECK(full.zones.at("A").test.size() == test_days);
    CHECK(windows_within(full.zones.at("A").train, d.train));
    CHECK(windows_within(full.zones.at("A").validation, d.validation));
    CHECK(windows_within(full.zones.at("A").test, d.test));

    const SplitSet zero = build_splits(d, SplitStrategy::ZeroShot, "A", frames);
    CHECK(zero.train_windows("A") == 0);
    CHECK(zero.train_windows("B") == std::size_t(train_h - 192 + 1));
    CHECK(zero.zones.at("C").validation.size() == val_days);
    CHECK(zero.zones.at("B").test.size() == 0);
    CHECK(zero.zones.at("A").test.size() == test_days);

    const SplitSet one = build_splits(d, SplitStrategy::OneShot, "A", frames);
    REQUIRE(one.train_windows("A") == 1);
    CHECK(one.zones.at("A").train.origin(0) == d.validation.end - Hours{24});
    CHECK(windows_within(one.zones.at("A").train, d.validation));

    const SplitSet few = build_splits(d, SplitStrategy::FewShot, "A", frames);
    CHECK(few.train_windows("A") == std::size_t(d.few_shot_days - 7));
    CHECK(windows_within(few.zones.at("A").train, {d.validation.end - Hours{24L * d.few_shot_days}, d.validation.end}));
    CHECK(few.zones.at("A").train.origin(few.train_windows("A") - 1) == d.validation.end - Hours{24});

    CHECK_THROWS(build_splits(d, SplitStrategy::ZeroShot, "A", {{"A", frames.at("A")}}));
    CHECK_THROWS(build_splits(d, SplitStrategy::Full, "Q", frames));
    std::map<std::string, FeatureFrame> shortf{
        {"A", build_frame(hourly("A", d.train.begin, hours - 48), {}, {}, FrameOptions{})}};
    CHECK_THROWS_WITH(build_splits(d, SplitStrategy::Full, "A", shortf), doctest::Contains("A"));
}
