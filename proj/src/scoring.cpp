#include "epf/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "epf/csv.hpp"
#include "epf/error.hpp"

namespace epf {

namespace {

// Shared by crps_ensemble and the m == 1, beta == 1 energy score so that
// both produce identical bits.
template <typename Dist>
double kernel_score(std::size_t S, Dist&& dist_to_obs, auto&& dist_pair) {
    double first = 0.0;
    for (std::size_t i = 0; i < S; ++i) first += dist_to_obs(i);
    double second = 0.0;
    for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < S; ++j) second += dist_pair(i, j);
    const double s = static_cast<double>(S);
    return first / s - second / (2.0 * s * s);
}

}  // namespace

double crps_ensemble(std::span<const double> x, double y) {
    if (x.empty()) throw DomainError("crps_ensemble: empty ensemble");
    return kernel_score(
        x.size(), [&](std::size_t i) { return std::abs(x[i] - y); },
        [&](std::size_t i, std::size_t j) { return std::abs(x[i] - x[j]); });
}

double crps_quantile(std::span<const double> levels, std::span<const double> values, double obs) {
    if (levels.empty() || levels.size() != values.size())
        throw DomainError("crps_quantile: levels and values must be non-empty and equally long");
    for (std::size_t k = 1; k < values.size(); ++k) {
        if (values[k] < values[k - 1]) throw DomainError("crps_quantile: crossing quantiles (repair first)");
        if (levels[k] <= levels[k - 1]) throw DomainError("crps_quantile: levels must increase");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < levels.size(); ++k) acc += pinball(obs - values[k], levels[k]);
    return 2.0 * acc / static_cast<double>(levels.size());
}

double energy_score(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double beta) {
    if (X.rows() < 1) throw DomainError("energy_score: empty ensemble");
    if (X.cols() != y.size()) throw DomainError("energy_score: dimension mismatch");
    if (!(beta > 0.0 && beta < 2.0)) throw DomainError("energy_score: beta must lie in (0, 2)");
    const auto S = static_cast<std::size_t>(X.rows());
    auto norm = [&](auto&& diff) {
        const double n = X.cols() == 1 ? std::abs(diff(0)) : diff.norm();
        return beta == 1.0 ? n : std::pow(n, beta);
    };
    return kernel_score(
        S, [&](std::size_t i) { return norm((X.row(Eigen::Index(i)).transpose() - y).eval()); },
        [&](std::size_t i, std::size_t j) {
            return norm((X.row(Eigen::Index(i)) - X.row(Eigen::Index(j))).transpose().eval());
        });
}

Eigen::VectorXd pit_values(const EnsembleForecast& f, const Eigen::VectorXd& obs) {
    if (f.size() < 1) throw DomainError("pit_values: empty ensemble");
    Eigen::VectorXd out(f.horizon());
    for (Eigen::Index h = 0; h < f.horizon(); ++h) {
        double below = 0.0, equal = 0.0;
        for (Eigen::Index s = 0; s < f.size(); ++s) {
            if (f.samples(s, h) < obs(h)) below += 1.0;
            else if (f.samples(s, h) == obs(h)) equal += 1.0;
        }
        out(h) = (below + 0.5 * equal) / static_cast<double>(f.size());
    }
    return out;
}

double pit_quantile(std::span<const double> levels, std::span<const double> values, double obs) {
    const std::size_t Q = levels.size();
    if (obs <= values[0]) return levels[0];
    if (obs >= values[Q - 1]) return levels[Q - 1];
    for (std::size_t k = 0; k + 1 < Q; ++k) {
        if (obs >= values[k] && obs < values[k + 1]) {
            const double w = (obs - values[k]) / (values[k + 1] - values[k]);
            return levels[k] + w * (levels[k + 1] - levels[k]);
        }
    }
    return levels[Q - 1];
}

Eigen::VectorXd pit_values(const QuantileForecast& f, const Eigen::VectorXd& obs) {
    Eigen::VectorXd out(f.horizon());
    std::vector<double> col(f.levels.size());
    for (Eigen::Index h = 0; h < f.horizon(); ++h) {
        for (std::size_t q = 0; q < col.size(); ++q) col[q] = f.values(Eigen::Index(q), h);
        out(h) = pit_quantile(f.levels, col, obs(h));
    }
    return out;
}

std::vector<double> default_ece_levels() {
    std::vector<double> out;
    for (int i = 1; i <= 99; ++i) out.push_back(i / 100.0);
    return out;
}

double ece(std::span<const double> pit, std::span<const double> levels) {
    if (pit.empty()) throw DomainError("ece: empty PIT set");
    if (levels.empty()) throw DomainError("ece: no levels");
    std::vector<double> sorted(pit.begin(), pit.end());
    std::sort(sorted.begin(), sorted.end());
    double acc = 0.0;
    for (double p : levels) {
        if (!(p > 0.0 && p < 1.0)) throw DomainError("ece: levels must lie in (0, 1)");
        const auto n_le = std::upper_bound(sorted.begin(), sorted.end(), p) - sorted.begin();
        acc += std::abs(static_cast<double>(n_le) / static_cast<double>(sorted.size()) - p);
    }
    return acc / static_cast<double>(levels.size());
}

double ks_uniform(std::vector<double> pit) {
    if (pit.empty()) return 0.0;
    std::sort(pit.begin(), pit.end());
    const double n = static_cast<double>(pit.size());
    double d = 0.0;
    for (std::size_t i = 0; i < pit.size(); ++i) {
        const double u = std::clamp(pit[i], 0.0, 1.0);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n});
    }
    return d;
}

double ScoreSeries::mean() const {
    if (values.empty()) return 0.0;
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
}

ScoreSeries ScoreReport::series(const std::string& metric) const {
    ScoreSeries out{metric, {}, {}};
    std::vector<double> counts;
    for (const auto& r : rows) {
        if (r.metric != metric) continue;
        if (out.origins.empty() || out.origins.back() != r.origin) {
            out.origins.push_back(r.origin);
            out.values.push_back(0.0);
            counts.push_back(0.0);
        }
        out.values.back() += r.value;
        counts.back() += 1.0;
    }
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] /= counts[i];
    return out;
}

double ScoreReport::mean(const std::string& metric) const { return series(metric).mean(); }

std::string ScoreReport::csv() const {
    std::ostringstream out;
    out << "origin,horizon,metric,value\n";
    for (const auto& r : rows) {
        out << format_instant(r.origin) << ',';
        if (r.horizon >= 0) out << r.horizon;
        out << ',' << r.metric << ',' << csv::exact(r.value) << '\n';
    }
    std::size_t k = 0;
    for (const auto& r : rows) {
        if (r.metric != "crps" || k >= pit.size()) continue;
        out << format_instant(r.origin) << ',' << r.horizon << ",pit," << csv::exact(pit[k++]) << '\n';
    }
    return out.str();
}

std::string ScoreReport::summary_json() const {
    nlohmann::ordered_json j;
    std::vector<std::string> metrics;
    for (const auto& r : rows)
        if (std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end()) metrics.push_back(r.metric);
    for (const auto& m : metrics) {
        const auto s = series(m);
        j["metrics"][m] = {{"mean", s.mean()}, {"origins", s.values.size()}};
    }
    if (!pit.empty()) {
        const auto levels = default_ece_levels();
        j["ece"] = ece(pit, levels);
        j["pit_ks"] = ks_uniform(pit);
    }
    j["omitted_origins"] = omitted;
    return j.dump(2) + "\n";
}

namespace {

std::map<Instant, const Observation*> by_origin(const std::vector<Observation>& obs) {
    std::map<Instant, const Observation*> m;
    for (const auto& o : obs) m[o.origin] = &o;
    return m;
}

}  // namespace

ScoreReport score_ensembles(const std::vector<EnsembleForecast>& forecasts, const std::vector<Observation>& obs) {
    ScoreReport rep;
    const auto lookup = by_origin(obs);
    std::vector<double> col;
    for (const auto& f : forecasts) {
        auto it = lookup.find(f.origin);
        if (it == lookup.end()) {
            ++rep.omitted;
            continue;
        }
        const Eigen::VectorXd& y = it->second->values;
        if (y.size() != f.horizon()) throw Error("observation horizon mismatch at " + format_instant(f.origin));
        col.resize(static_cast<std::size_t>(f.size()));
        for (Eigen::Index h = 0; h < f.horizon(); ++h) {
            for (Eigen::Index s = 0; s < f.size(); ++s) col[std::size_t(s)] = f.samples(s, h);
            rep.rows.push_back({f.origin, int(h), "crps", crps_ensemble(col, y(h))});
        }
        rep.rows.push_back({f.origin, -1, "energy_score", energy_score(f.samples, y)});
        const Eigen::VectorXd p = pit_values(f, y);
        rep.pit.insert(rep.pit.end(), p.data(), p.data() + p.size());
    }
    return rep;
}

ScoreReport score_quantiles(const std::vector<QuantileForecast>& forecasts, const std::vector<Observation>& obs) {
    ScoreReport rep;
    const auto lookup = by_origin(obs);
    std::vector<double> col;
    for (const auto& f : forecasts) {
        auto it = lookup.find(f.origin);
        if (it == lookup.end()) {
            ++rep.omitted;
            continue;
        }
        const Eigen::VectorXd& y = it->second->values;
        if (y.size() != f.horizon()) throw Error("observation horizon mismatch at " + format_instant(f.origin));
        col.resize(f.levels.size());
        for (Eigen::Index h = 0; h < f.horizon(); ++h) {
            for (std::size_t q = 0; q < col.size(); ++q) col[q] = f.values(Eigen::Index(q), h);
            rep.rows.push_back({f.origin, int(h), "crps", crps_quantile(f.levels, col, y(h))});
        }
        const Eigen::VectorXd p = pit_values(f, y);
        rep.pit.insert(rep.pit.end(), p.data(), p.data() + p.size());
    }
    return rep;
}

ScoreReport read_score_csv(const std::string& path) {
    const auto lines = csv::read_lines(path);
    if (lines.empty() || lines.front() != "origin,horizon,metric,value")
        throw ParseError(path + ": expected header 'origin,horizon,metric,value'");
    ScoreReport rep;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        if (lines[r].empty()) continue;
        const auto f = csv::split(lines[r]);
        if (f.size() != 4) throw ParseError(path + ": row " + std::to_string(r) + " must have 4 fields");
        ScoreRow row;
        row.origin = parse_instant(f[0]);
        row.horizon = f[1].empty() ? -1 : int(csv::parse_int(f[1], "horizon", r));
        row.metric = std::string(f[2]);
        row.value = csv::parse_double(f[3], "value", r);
        if (row.metric == "pit")
            rep.pit.push_back(row.value);
        else
            rep.rows.push_back(std::move(row));
    }
    return rep;
}

}  // namespace epf
