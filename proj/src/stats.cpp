#include "epf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "epf/error.hpp"

namespace epf {

double newey_west_lrv(std::span<const double> d, int lags) {
    const std::size_t T = d.size();
    if (T < 2) throw DomainError("newey_west_lrv: need at least 2 observations");
    if (lags < 0 || static_cast<std::size_t>(lags) >= T) throw DomainError("newey_west_lrv: lags must lie in [0, T)");
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(T);
    auto autocov = [&](std::size_t j) {
        double acc = 0.0;
        for (std::size_t t = j; t < T; ++t) acc += (d[t] - mean) * (d[t - j] - mean);
        return acc / static_cast<double>(T);
    };
    double lrv = autocov(0);
    for (int j = 1; j <= lags; ++j) {
        const double w = 1.0 - static_cast<double>(j) / (lags + 1.0);
        lrv += 2.0 * w * autocov(static_cast<std::size_t>(j));
    }
    return std::max(lrv, 0.0);
}

std::string to_string(DmDirection d) {
    switch (d) {
        case DmDirection::FavorsA: return "favors_a";
        case DmDirection::FavorsB: return "favors_b";
        case DmDirection::None: break;
    }
    return "none";
}

DmResult dm_test(std::span<const double> a, std::span<const double> b, const DmOptions& opt) {
    if (a.size() != b.size()) throw DomainError("dm_test: loss series have different lengths");
    const std::size_t T = a.size();
    if (T < 10) throw DomainError("dm_test: need at least 10 aligned losses");
    std::vector<double> d(T);
    double dbar = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        d[t] = a[t] - b[t];
        dbar += d[t];
    }
    dbar /= static_cast<double>(T);

    DmResult r;
    r.T = T;
    r.mean_diff = dbar;
    r.lags = opt.lags.value_or(static_cast<int>(std::floor(std::pow(static_cast<double>(T), 0.25))));
    r.direction = dbar > 0.0 ? DmDirection::FavorsB : (dbar < 0.0 ? DmDirection::FavorsA : DmDirection::None);

    const double lrv = newey_west_lrv(d, r.lags);
    if (lrv <= 0.0) {
        if (dbar == 0.0) {
            r.no_decision = true;
            return r;
        }
        r.degenerate_variance = true;
        r.statistic = dbar > 0.0 ? HUGE_VAL : -HUGE_VAL;
        r.p_value = 0.0;
        r.reject = true;
        return r;
    }
    const double n = static_cast<double>(T);
    const double h = static_cast<double>(opt.harvey_horizon.value_or(r.lags + 1));
    const double adj = std::sqrt(std::max(0.0, (n + 1.0 - 2.0 * h + h * (h - 1.0) / n) / n));
    r.statistic = adj * dbar / std::sqrt(lrv / n);
    const boost::math::students_t dist(n - 1.0);
    r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.statistic)));
    r.reject = r.p_value < opt.alpha;
    return r;
}

DmResult dm_test(const ScoreSeries& a, const ScoreSeries& b, const DmOptions& opt) {
    if (a.origins != b.origins) throw DomainError("dm_test: score series are not aligned on origins");
    return dm_test(a.values, b.values, opt);
}

namespace {

// Index of the group to adopt among one step's entries, or -1.
int choose(const std::vector<const SelectionStep*>& entries, const std::vector<FeatureGroup>& order) {
    int best = -1;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto* e = entries[i];
        if (!e->skipped.empty() || !e->significant || !(e->mean_diff < 0.0)) continue;
        if (best < 0) {
            best = static_cast<int>(i);
            continue;
        }
        const auto* cur = entries[static_cast<std::size_t>(best)];
        const double gain = -e->mean_diff, best_gain = -cur->mean_diff;
        auto rank = [&](FeatureGroup g) { return std::find(order.begin(), order.end(), g) - order.begin(); };
        if (gain > best_gain || (gain == best_gain && rank(e->candidate) < rank(cur->candidate)))
            best = static_cast<int>(i);
    }
    return best;
}

const std::vector<FeatureGroup>& canonical_order() {
    static const std::vector<FeatureGroup> order{FeatureGroup::Calendar, FeatureGroup::R1, FeatureGroup::R2,
                                                 FeatureGroup::R3,       FeatureGroup::R4, FeatureGroup::R5};
    return order;
}

}  // namespace

SelectionResult forward_select(const SelectionRunner& runner, const std::vector<FeatureGroup>& groups,
                               const std::vector<FeatureGroup>& base, const SelectionOptions& opt) {
    SelectionResult res;
    res.selected = base;
    if (groups.empty()) return res;

    ScoreSeries current = runner(res.selected);
    std::vector<FeatureGroup> remaining;
    for (auto g : groups)
        if (std::find(base.begin(), base.end(), g) == base.end()) remaining.push_back(g);

    for (int step = 1; !remaining.empty(); ++step) {
        std::vector<std::future<ScoreSeries>> jobs;
        for (auto g : remaining) {
            auto set = res.selected;
            set.push_back(g);
            jobs.push_back(std::async(opt.parallel ? std::launch::async : std::launch::deferred,
                                      [&runner, set] { return runner(set); }));
        }
        std::vector<SelectionStep> entries;
        std::vector<ScoreSeries> losses(remaining.size());
        for (std::size_t i = 0; i < remaining.size(); ++i) {
            SelectionStep e;
            e.step = step;
            e.candidate = remaining[i];
            try {
                losses[i] = jobs[i].get();
                const DmResult dm = dm_test(losses[i], current, opt.dm);
                ++res.dm_calls;
                e.dm_statistic = dm.statistic;
                e.p_value = dm.p_value;
                e.mean_diff = dm.mean_diff;
                e.significant = dm.reject;
            } catch (const std::exception& ex) {
                e.skipped = ex.what();
            }
            entries.push_back(std::move(e));
        }
        std::vector<const SelectionStep*> view;
        for (const auto& e : entries) view.push_back(&e);
        const int pick = choose(view, canonical_order());
        if (pick >= 0) entries[static_cast<std::size_t>(pick)].adopted = true;
        res.trail.insert(res.trail.end(), entries.begin(), entries.end());
        if (pick < 0) break;
        const FeatureGroup g = remaining[static_cast<std::size_t>(pick)];
        res.selected.push_back(g);
        current = losses[static_cast<std::size_t>(pick)];
        remaining.erase(remaining.begin() + pick);
    }
    return res;
}

std::vector<FeatureGroup> replay_selection(const std::vector<SelectionStep>& trail,
                                           const std::vector<FeatureGroup>& base) {
    std::vector<FeatureGroup> selected = base;
    std::map<int, std::vector<const SelectionStep*>> by_step;
    for (const auto& e : trail) by_step[e.step].push_back(&e);
    for (const auto& [step, entries] : by_step) {
        const int pick = choose(entries, canonical_order());
        if (pick < 0) break;
        selected.push_back(entries[static_cast<std::size_t>(pick)]->candidate);
    }
    return selected;
}

std::string selection_json(const SelectionResult& r) {
    nlohmann::ordered_json j;
    j["selected"] = nlohmann::json::array();
    for (auto g : r.selected) j["selected"].push_back(to_string(g));
    j["dm_calls"] = r.dm_calls;
    j["trail"] = nlohmann::json::array();
    for (const auto& e : r.trail) {
        nlohmann::ordered_json t;
        t["step"] = e.step;
        t["candidate"] = to_string(e.candidate);
        t["dm_statistic"] = e.dm_statistic;
        t["p_value"] = e.p_value;
        t["mean_diff"] = e.mean_diff;
        t["significant"] = e.significant;
        t["adopted"] = e.adopted;
        if (!e.skipped.empty()) t["skipped"] = e.skipped;
        j["trail"].push_back(std::move(t));
    }
    return j.dump(2) + "\n";
}

}  // namespace epf
