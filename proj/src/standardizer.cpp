#include "epf/standardizer.hpp"

#include <algorithm>
#include <cmath>

#include "epf/error.hpp"

namespace epf {

Standardizer::Standardizer(std::vector<std::string> names, std::vector<double> mean, std::vector<double> stdev)
    : names_(std::move(names)), mean_(std::move(mean)), std_(std::move(stdev)) {
    if (mean_.size() != std_.size()) throw Error("standardizer: mean/std size mismatch");
    for (double& s : std_) s = std::max(s, kStdFloor);
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& rows, std::vector<std::string> names) {
    if (rows.rows() == 0 || rows.cols() == 0) throw Error("standardizer: empty training range");
    const auto n = static_cast<double>(rows.rows());
    std::vector<double> mean(rows.cols()), sd(rows.cols());
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
        const double m = rows.col(j).sum() / n;
        const double var = (rows.col(j).array() - m).square().sum() / n;
        mean[j] = m;
        sd[j] = std::sqrt(var);
    }
    if (names.empty())
        for (Eigen::Index j = 0; j < rows.cols(); ++j) names.push_back("x" + std::to_string(j));
    return Standardizer(std::move(names), std::move(mean), std::move(sd));
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
    if (static_cast<std::size_t>(x.cols()) != size()) throw Error("standardizer: column count mismatch");
    Eigen::MatrixXd z(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) z.col(j) = (x.col(j).array() - mean_[j]) / std_[j];
    return z;
}

Eigen::MatrixXd Standardizer::invert(const Eigen::MatrixXd& z) const {
    if (static_cast<std::size_t>(z.cols()) != size()) throw Error("standardizer: column count mismatch");
    Eigen::MatrixXd x(z.rows(), z.cols());
    for (Eigen::Index j = 0; j < z.cols(); ++j) x.col(j) = z.col(j).array() * std_[j] + mean_[j];
    return x;
}

std::size_t Standardizer::index_of(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw Error("standardizer has no column '" + name + "'");
    return static_cast<std::size_t>(it - names_.begin());
}

Standardizer fit_frame_standardizer(const FeatureFrame& frame, Interval train) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < frame.rows(); ++i)
        if (train.contains(frame.time[i])) rows.push_back(i);
    std::vector<std::size_t> cols;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < frame.width(); ++j) {
        if (frame.columns[j].role == FeatureRole::Calendar) continue;
        cols.push_back(j);
        names.push_back(frame.columns[j].name);
    }
    Eigen::MatrixXd m(rows.size(), cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c) m(r, c) = frame.columns[cols[c]].values[rows[r]];
    return Standardizer::fit(m, std::move(names));
}

FeatureFrame standardize(const FeatureFrame& frame, const Standardizer& s) {
    FeatureFrame out = frame;
    for (auto& col : out.columns) {
        if (col.role == FeatureRole::Calendar) continue;
        const std::size_t k = s.index_of(col.name);
        for (double& v : col.values) v = s.apply(k, v);
    }
    return out;
}

nlohmann::json to_json(const Standardizer& s) {
    return {{"names", s.names()}, {"mean", s.mean()}, {"std", s.stdev()}};
}

Standardizer standardizer_from_json(const nlohmann::json& j) {
    try {
        return Standardizer(j.at("names").get<std::vector<std::string>>(), j.at("mean").get<std::vector<double>>(),
                            j.at("std").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("standardizer: ") + e.what());
    }
}

}  // namespace epf
