#include "epf/report.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include "epf/error.hpp"
#include "epf/isotonic.hpp"

namespace epf {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s(buf);
    return s == "-0.00" ? "0.00" : s;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string fan_chart_svg(const QuantileForecast& f, const std::optional<Eigen::VectorXd>& observed,
                          const std::string& title) {
    const Eigen::Index H = f.horizon();
    if (H < 1 || f.levels.empty()) throw Error("fan chart: empty forecast");
    if (!f.monotone()) throw Error("fan chart: quantiles cross at " + format_instant(f.origin));
    if (observed && observed->size() != H) throw Error("fan chart: observation length mismatch");

    // Band edges per coverage, interpolated from the forecast levels.
    std::vector<double> targets;
    for (double c : fan_coverages()) {
        targets.push_back((1.0 - c) / 2.0);
        targets.push_back((1.0 + c) / 2.0);
    }
    targets.push_back(0.5);
    std::vector<std::vector<double>> at(targets.size(), std::vector<double>(std::size_t(H)));
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Eigen::Index h = 0; h < H; ++h) {
        std::vector<double> col(f.levels.size());
        for (std::size_t q = 0; q < col.size(); ++q) col[q] = f.values(Eigen::Index(q), h);
        const auto v = interpolate_levels(f.levels, col, targets);
        for (std::size_t k = 0; k < v.size(); ++k) at[k][std::size_t(h)] = v[k];
        lo = std::min(lo, col.front());
        hi = std::max(hi, col.back());
        if (observed) {
            lo = std::min(lo, (*observed)(h));
            hi = std::max(hi, (*observed)(h));
        }
    }
    if (hi - lo < 1e-9) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    constexpr double W = 720, Ht = 360, L = 60, R = 20, T = 40, B = 40;
    auto x = [&](Eigen::Index h) { return L + (H == 1 ? 0.0 : (W - L - R) * double(h) / double(H - 1)); };
    auto y = [&](double v) { return T + (Ht - T - B) * (hi - v) / (hi - lo); };

    std::ostringstream s;
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W << "\" height=\"" << Ht
      << "\" viewBox=\"0 0 " << W << ' ' << Ht << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << Ht << "\" fill=\"white\"/>\n";
    s << "<text x=\"" << L << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">"
      << escape(title.empty() ? "Forecast " + format_instant(f.origin) : title) << "</text>\n";
    // Axes and ticks.
    s << "<g stroke=\"#444\" stroke-width=\"1\" fill=\"none\">\n"
      << "<line x1=\"" << L << "\" y1=\"" << Ht - B << "\" x2=\"" << W - R << "\" y2=\"" << Ht - B << "\"/>\n"
      << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << Ht - B << "\"/>\n</g>\n";
    s << "<g font-family=\"sans-serif\" font-size=\"10\" fill=\"#444\">\n";
    for (Eigen::Index h = 0; h < H; ++h)
        s << "<text class=\"hour\" x=\"" << num(x(h)) << "\" y=\"" << Ht - B + 14 << "\" text-anchor=\"middle\">" << h
          << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = lo + (hi - lo) * k / 4.0;
        s << "<text x=\"" << L - 6 << "\" y=\"" << num(y(v) + 3) << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
    }
    s << "<text x=\"" << W / 2 << "\" y=\"" << Ht - 6 << "\" text-anchor=\"middle\">hour</text>\n"
      << "<text x=\"14\" y=\"" << Ht / 2 << "\" transform=\"rotate(-90 14 " << Ht / 2
      << ")\" text-anchor=\"middle\">EUR/MWh</text>\n</g>\n";

    const auto& cov = fan_coverages();
    for (std::size_t b = 0; b < cov.size(); ++b) {
        const auto& lower = at[2 * b];
        const auto& upper = at[2 * b + 1];
        s << "<polygon class=\"band\" data-coverage=\"" << num(cov[b]) << "\" fill=\"#1f77b4\" fill-opacity=\""
          << num(0.15 + 0.15 * double(b)) << "\" stroke=\"none\" points=\"";
        for (Eigen::Index h = 0; h < H; ++h) s << num(x(h)) << ',' << num(y(upper[std::size_t(h)])) << ' ';
        for (Eigen::Index h = H - 1; h >= 0; --h)
            s << num(x(h)) << ',' << num(y(lower[std::size_t(h)])) << (h > 0 ? " " : "");
        s << "\"/>\n";
    }
    s << "<polyline class=\"median\" fill=\"none\" stroke=\"#08306b\" stroke-width=\"2\" points=\"";
    for (Eigen::Index h = 0; h < H; ++h) s << num(x(h)) << ',' << num(y(at.back()[std::size_t(h)])) << (h + 1 < H ? " " : "");
    s << "\"/>\n";
    if (observed) {
        s << "<polyline class=\"observed\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" points=\"";
        for (Eigen::Index h = 0; h < H; ++h) s << num(x(h)) << ',' << num(y((*observed)(h))) << (h + 1 < H ? " " : "");
        s << "\"/>\n";
    }
    s << "</svg>\n";
    return s.str();
}

std::string score_table_markdown(const std::vector<std::pair<std::string, ScoreReport>>& runs) {
    std::vector<std::string> metrics;
    for (const auto& [name, rep] : runs)
        for (const auto& r : rep.rows)
            if (std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end()) metrics.push_back(r.metric);
    std::ostringstream s;
    s << "| run |";
    for (const auto& m : metrics) s << ' ' << m << " |";
    s << " ECE | origins | omitted |\n|---|";
    for (std::size_t i = 0; i < metrics.size(); ++i) s << "---:|";
    s << "---:|---:|---:|\n";
    char buf[64];
    for (const auto& [name, rep] : runs) {
        s << "| " << name << " |";
        std::set<Instant> origins;
        for (const auto& r : rep.rows) origins.insert(r.origin);
        for (const auto& m : metrics) {
            const ScoreSeries ser = rep.series(m);
            if (ser.values.empty()) {
                s << " - |";
                continue;
            }
            std::snprintf(buf, sizeof buf, "%.4f", ser.mean());
            s << ' ' << buf << " |";
        }
        if (rep.pit.empty()) {
            s << " - |";
        } else {
            std::snprintf(buf, sizeof buf, "%.4f", ece(rep.pit, default_ece_levels()));
            s << ' ' << buf << " |";
        }
        s << ' ' << origins.size() << " | " << rep.omitted << " |\n";
    }
    return s.str();
}

}  // namespace epf
