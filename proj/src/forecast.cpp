#include "epf/forecast.hpp"

#include <map>
#include <sstream>

#include "epf/csv.hpp"
#include "epf/error.hpp"

namespace epf {

bool QuantileForecast::monotone() const {
    for (Eigen::Index h = 0; h < values.cols(); ++h)
        for (Eigen::Index q = 1; q < values.rows(); ++q)
            if (values(q, h) < values(q - 1, h)) return false;
    return true;
}

namespace {

std::string horizon_header(Eigen::Index H) {
    std::string s;
    for (Eigen::Index h = 0; h < H; ++h) s += ",h" + std::to_string(h);
    return s;
}

void expect_header(const std::vector<std::string>& lines, const std::string& prefix, const std::string& path) {
    if (lines.empty()) throw ParseError(path + ": empty file");
    if (lines.front().rfind(prefix, 0) != 0)
        throw ParseError(path + ": header must start with '" + prefix + "', got '" + lines.front() + "'");
}

}  // namespace

std::string ensemble_csv(const std::vector<EnsembleForecast>& forecasts) {
    const Eigen::Index H = forecasts.empty() ? 24 : forecasts.front().horizon();
    std::ostringstream out;
    out << "origin,sample_idx" << horizon_header(H) << '\n';
    for (const auto& f : forecasts) {
        for (Eigen::Index s = 0; s < f.size(); ++s) {
            out << format_instant(f.origin) << ',' << s;
            for (Eigen::Index h = 0; h < f.horizon(); ++h) out << ',' << csv::exact(f.samples(s, h));
            out << '\n';
        }
    }
    return out.str();
}

std::vector<EnsembleForecast> read_ensemble_csv(const std::string& path) {
    const auto lines = csv::read_lines(path);
    expect_header(lines, "origin,sample_idx,h0", path);
    const auto header = csv::split(lines.front());
    const std::size_t H = header.size() - 2;
    std::vector<EnsembleForecast> out;
    std::vector<std::vector<double>> rows;
    auto flush = [&] {
        if (rows.empty()) return;
        auto& f = out.back();
        f.samples.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(H));
        for (std::size_t s = 0; s < rows.size(); ++s)
            for (std::size_t h = 0; h < H; ++h) f.samples(Eigen::Index(s), Eigen::Index(h)) = rows[s][h];
        rows.clear();
    };
    for (std::size_t r = 1; r < lines.size(); ++r) {
        if (lines[r].empty()) continue;
        const auto f = csv::split(lines[r]);
        if (f.size() != header.size())
            throw ParseError(path + ": row " + std::to_string(r) + " has " + std::to_string(f.size()) +
                             " fields, expected " + std::to_string(header.size()));
        const Instant origin = parse_instant(f[0]);
        if (out.empty() || out.back().origin != origin) {
            flush();
            out.push_back({origin, {}});
        }
        std::vector<double> row(H);
        for (std::size_t h = 0; h < H; ++h) row[h] = csv::parse_double(f[h + 2], header[h + 2], r);
        rows.push_back(std::move(row));
    }
    flush();
    return out;
}

std::string quantile_csv(const std::vector<QuantileForecast>& forecasts) {
    std::ostringstream out;
    out << "origin,horizon,level,value\n";
    for (const auto& f : forecasts) {
        const std::string o = format_instant(f.origin);
        for (Eigen::Index h = 0; h < f.horizon(); ++h)
            for (std::size_t q = 0; q < f.levels.size(); ++q)
                out << o << ',' << h << ',' << csv::exact(f.levels[q]) << ','
                    << csv::exact(f.values(Eigen::Index(q), h)) << '\n';
    }
    return out.str();
}

std::vector<QuantileForecast> read_quantile_csv(const std::string& path) {
    const auto lines = csv::read_lines(path);
    expect_header(lines, "origin,horizon,level,value", path);
    // origin -> horizon -> (level, value)
    std::map<Instant, std::map<long long, std::vector<std::pair<double, double>>>> acc;
    std::vector<Instant> order;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        if (lines[r].empty()) continue;
        const auto f = csv::split(lines[r]);
        if (f.size() != 4) throw ParseError(path + ": row " + std::to_string(r) + " must have 4 fields");
        const Instant o = parse_instant(f[0]);
        if (!acc.count(o)) order.push_back(o);
        acc[o][csv::parse_int(f[1], "horizon", r)].emplace_back(csv::parse_double(f[2], "level", r),
                                                                csv::parse_double(f[3], "value", r));
    }
    std::vector<QuantileForecast> out;
    for (Instant o : order) {
        const auto& by_h = acc.at(o);
        QuantileForecast q;
        q.origin = o;
        const auto& first = by_h.begin()->second;
        for (const auto& [lvl, v] : first) q.levels.push_back(lvl);
        q.values.resize(static_cast<Eigen::Index>(q.levels.size()), static_cast<Eigen::Index>(by_h.size()));
        Eigen::Index h = 0;
        for (const auto& [hh, pairs] : by_h) {
            if (hh != h) throw ParseError(path + ": horizons for " + format_instant(o) + " are not 0..H-1");
            if (pairs.size() != q.levels.size())
                throw ParseError(path + ": inconsistent level count at " + format_instant(o));
            for (std::size_t k = 0; k < pairs.size(); ++k) {
                if (pairs[k].first != q.levels[k])
                    throw ParseError(path + ": inconsistent levels at " + format_instant(o));
                q.values(Eigen::Index(k), h) = pairs[k].second;
            }
            ++h;
        }
        out.push_back(std::move(q));
    }
    return out;
}

std::string observation_csv(const std::vector<Observation>& obs) {
    const Eigen::Index H = obs.empty() ? 24 : obs.front().values.size();
    std::ostringstream out;
    out << "origin" << horizon_header(H) << '\n';
    for (const auto& o : obs) {
        out << format_instant(o.origin);
        for (Eigen::Index h = 0; h < o.values.size(); ++h) out << ',' << csv::exact(o.values(h));
        out << '\n';
    }
    return out.str();
}

std::vector<Observation> read_observation_csv(const std::string& path) {
    const auto lines = csv::read_lines(path);
    expect_header(lines, "origin,h0", path);
    const auto header = csv::split(lines.front());
    std::vector<Observation> out;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        if (lines[r].empty()) continue;
        const auto f = csv::split(lines[r]);
        if (f.size() != header.size()) throw ParseError(path + ": row " + std::to_string(r) + " field count");
        Observation o{parse_instant(f[0]), Eigen::VectorXd(Eigen::Index(f.size() - 1))};
        for (std::size_t h = 1; h < f.size(); ++h) o.values(Eigen::Index(h - 1)) = csv::parse_double(f[h], header[h], r);
        out.push_back(std::move(o));
    }
    return out;
}

}  // namespace epf
