#include <doctest.h>

#include <algorithm>
#include <set>

#include "epf/baselines.hpp"
#include "epf/error.hpp"

using namespace epf;
using namespace std::chrono;

namespace {

/// Each hour's value is its own unix-hour index, so every draw names its source timestamp.
HourlySeries stamped(Instant start, Instant end) {
    HourlySeries s{"Z", "price", {}, {}, {}};
    for (Instant t = start; t < end; t += Hours{1}) {
        s.timestamps.push_back(t);
        s.values.push_back(double(to_unix(t) / 3600));
        s.filled.push_back(false);
    }
    return s;
}

double stamp(Instant t) { return double(to_unix(t) / 3600); }

}  // namespace

TEST_CASE("same-hour-28d draws the 28 prior same-hour days") {
    const Instant origin = parse_instant("2024-03-10");
    const HistoryIndex hist(stamped(parse_instant("2024-01-01"), parse_instant("2024-04-01")));
    const BaselineResult r = baseline_same_hour_28d(hist, origin);
    REQUIRE(r.forecast.has_value());
    CHECK(r.forecast->samples.rows() == 28);
    CHECK(r.forecast->samples.cols() == 24);
    for (int h = 0; h < 24; ++h) {
        std::multiset<double> got, want;
        for (int d = 1; d <= 28; ++d) {
            got.insert(r.forecast->samples(d - 1, h));
            want.insert(stamp(origin + Hours{h} - days{d}));
        }
        CHECK(got == want);
    }
    REQUIRE(r.latest_read.has_value());
    CHECK(*r.latest_read < origin);
    CHECK(*r.latest_read == origin - Hours{1});
}

TEST_CASE("same-hour-28d skips gaps and filled hours, and omits short histories") {
    const Instant origin = parse_instant("2024-03-10");
    HourlySeries s = stamped(parse_instant("2024-01-01"), parse_instant("2024-04-01"));
    const Instant gap = origin - days{3};
    const auto i = std::size_t((gap - s.timestamps.front()) / Hours{1});
    s.filled[i] = true;
    const BaselineResult r = baseline_same_hour_28d(HistoryIndex(s), origin);
    REQUIRE(r.forecast.has_value());
    std::vector<double> col(r.forecast->samples.col(0).data(), r.forecast->samples.col(0).data() + 28);
    CHECK(std::find(col.begin(), col.end(), stamp(gap)) == col.end());
    CHECK(std::find(col.begin(), col.end(), stamp(origin - days{29})) != col.end());

    const HistoryIndex short_hist(stamped(origin - days{20}, origin));
    const BaselineResult none = baseline_same_hour_28d(short_hist, origin);
    CHECK_FALSE(none.forecast.has_value());
    CHECK(none.omission.find("28") != std::string::npos);
}

TEST_CASE("7d-12m clamps to month end and steps back past gaps") {
    const Instant origin = parse_instant("2024-03-31");
    HourlySeries s = stamped(parse_instant("2023-01-01"), parse_instant("2024-04-05"));
    // Remove 2023-09-30 00:00 so the 6-month draw steps back to 2023-09-29.
    const Instant gap = parse_instant("2023-09-30");
    s.filled[std::size_t((gap - s.timestamps.front()) / Hours{1})] = true;
    const BaselineResult r = baseline_7d_12m(HistoryIndex(s), origin);
    REQUIRE(r.forecast.has_value());
    CHECK(r.forecast->samples.rows() == 19);
    std::multiset<double> got, want;
    for (int k = 0; k < 19; ++k) got.insert(r.forecast->samples(k, 0));
    for (int d = 1; d <= 7; ++d) want.insert(stamp(origin - days{d}));
    for (const char* day : {"2024-02-29", "2024-01-31", "2023-12-31", "2023-11-30", "2023-10-31", "2023-09-29",
                            "2023-08-31", "2023-07-31", "2023-06-30", "2023-05-31", "2023-04-30", "2023-03-31"})
        want.insert(stamp(parse_instant(day)));
    CHECK(got == want);
    CHECK(*r.latest_read < origin);

    const BaselineResult none = baseline_7d_12m(HistoryIndex(stamped(parse_instant("2024-01-01"), origin)), origin);
    CHECK_FALSE(none.forecast.has_value());
}

TEST_CASE("bootstrap residuals and forecasts") {
    const Instant start = parse_instant("2024-01-01"), train_end = parse_instant("2024-02-01");
    HourlySeries y = stamped(start, parse_instant("2024-03-01"));
    HourlySeries x = y;
    for (std::size_t i = 0; i < x.size(); ++i) x.values[i] = y.values[i] - 168.0 - double(i % 3);
    const auto pool = bootstrap_residuals(y, x, 168, train_end);
    // Lag-168 residual is y(t) - x(t - 168) = 336 + ((i - 168) mod 3), defined once t - 168 >= start;
    // at t = start + 167 h the +1 h fallback reads x(start), giving 167 + 168.
    REQUIRE(pool.size() == std::size_t(Interval{start, train_end}.hours() - 167));
    CHECK(pool[0] == 335.0);
    for (std::size_t k = 1; k < pool.size(); ++k) CHECK(pool[k] == 336.0 + double((k - 1) % 3));

    const HistoryIndex ref(x, HistoryIndex::Duplicates::Average);
    const Instant origin = parse_instant("2024-02-10");
    BootstrapOptions opt{168, 50, 7};
    const BaselineResult a = baseline_bootstrap(ref, pool, origin, opt);
    const BaselineResult b = baseline_bootstrap(ref, pool, origin, opt);
    REQUIRE(a.forecast.has_value());
    CHECK(a.forecast->samples == b.forecast->samples);
    CHECK(a.forecast->samples.rows() == 50);
    for (int h = 0; h < 24; ++h) {
        const double point = *ref.at(origin + Hours{h} - Hours{168});
        for (int m = 0; m < 50; ++m) {
            const double r = a.forecast->samples(m, h) - point;
            CHECK(std::find(pool.begin(), pool.end(), r) != pool.end());
        }
    }
    opt.seed = 8;
    CHECK(baseline_bootstrap(ref, pool, origin, opt).forecast->samples != a.forecast->samples);
    CHECK(*a.latest_read < origin);
    CHECK_THROWS(baseline_bootstrap(ref, {}, origin, opt));
    opt.samples = 0;
    CHECK_THROWS_AS(baseline_bootstrap(ref, pool, origin, opt), DomainError);
}

TEST_CASE("baseline runs over origins") {
    for (auto m : {BaselineMethod::SameHour28d, BaselineMethod::SevenDay12Month, BaselineMethod::BootstrapPrice,
                   BaselineMethod::BootstrapSynthetic})
        CHECK(parse_baseline_method(to_string(m)) == m);
    CHECK_THROWS_AS(parse_baseline_method("naive"), ParseError);

    const HourlySeries y = stamped(parse_instant("2024-01-01"), parse_instant("2024-03-01"));
    const std::vector<Instant> origins{parse_instant("2024-01-10"), parse_instant("2024-02-10"),
                                       parse_instant("2024-02-20")};
    const BaselineRun run = run_baseline(BaselineMethod::SameHour28d, y, nullptr, origins, parse_instant("2024-02-01"));
    CHECK(run.forecasts.size() == 2);
    REQUIRE(run.omitted.size() == 1);
    CHECK(run.omitted[0].first == origins[0]);
    CHECK_THROWS(run_baseline(BaselineMethod::BootstrapSynthetic, y, nullptr, origins, parse_instant("2024-02-01")));
    const BaselineRun boot =
        run_baseline(BaselineMethod::BootstrapPrice, y, nullptr, origins, parse_instant("2024-02-01"), {168, 10, 1});
    CHECK(boot.forecasts.size() == 3);
    // With the price as its own reference every residual is the lag itself (168, or 167 at the fallback hour).
    for (const auto& f : boot.forecasts)
        for (int h = 0; h < 24; ++h)
            for (int m = 0; m < 10; ++m) {
                const double r = f.samples(m, h) - (stamp(f.origin + Hours{h}) - 168.0);
                CHECK((r == 168.0 || r == 167.0));
            }
}
