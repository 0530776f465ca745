#include "epf/qra.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <thread>

#include "epf/error.hpp"
#include "epf/isotonic.hpp"

namespace epf {

// ---------------------------------------------------------------------------
// Design

std::pair<Eigen::VectorXd, Eigen::MatrixXd> fit_pca(const Eigen::MatrixXd& draws, double pca_var, double* explained) {
    if (draws.rows() == 0) throw Error("pca: no rows");
    if (!(pca_var > 0.0 && pca_var <= 1.0)) throw DomainError("pca: explained-variance target must lie in (0, 1]");
    const Eigen::VectorXd mean = draws.colwise().mean().transpose();
    const Eigen::MatrixXd centered = draws.rowwise() - mean.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(draws.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const Eigen::VectorXd ev = es.eigenvalues().reverse().cwiseMax(0.0);
    const Eigen::MatrixXd vecs = es.eigenvectors().rowwise().reverse();
    const double total = ev.sum();
    Eigen::Index k = 1;
    double acc = ev.size() > 0 ? ev(0) : 0.0;
    if (total > 0.0) {
        while (k < ev.size() && acc / total < pca_var - 1e-12) acc += ev(k++);
    }
    if (explained != nullptr) *explained = total > 0.0 ? acc / total : 1.0;
    Eigen::MatrixXd comps = vecs.leftCols(k);
    // Sign convention: largest-magnitude loading positive, for reproducible output.
    for (Eigen::Index c = 0; c < k; ++c) {
        Eigen::Index arg = 0;
        comps.col(c).cwiseAbs().maxCoeff(&arg);
        if (comps(arg, c) < 0.0) comps.col(c) *= -1.0;
    }
    return {mean, comps};
}

QraDesign build_design(const std::vector<EnsembleForecast>& ensembles, const std::vector<SampleWindow>& windows,
                       const QraDesignOptions& options, const QraPca* pca) {
    QraDesign d;
    if (ensembles.empty()) return d;
    if (options.sample_k < 0) throw DomainError("qra: sample_k must be >= 0");
    const Eigen::Index S = ensembles.front().size();
    const Eigen::Index H = ensembles.front().horizon();
    d.draws = static_cast<int>(S);

    std::map<Instant, const SampleWindow*> by_origin;
    for (const auto& w : windows) {
        if (!by_origin.emplace(w.origin, &w).second)
            throw Error("qra design: duplicate window origin " + format_instant(w.origin));
    }
    std::vector<const SampleWindow*> aligned;
    for (const auto& e : ensembles) {
        if (e.size() != S || e.horizon() != H)
            throw Error("qra design: ensemble at " + format_instant(e.origin) + " has a different shape");
        auto it = by_origin.find(e.origin);
        if (it == by_origin.end()) throw Error("qra design: no window for origin " + format_instant(e.origin));
        aligned.push_back(it->second);
        d.origins.push_back(e.origin);
    }
    const auto N = static_cast<Eigen::Index>(ensembles.size());

    std::vector<Eigen::Index> kept;
    const Eigen::Index step = options.sample_k >= 1 ? options.sample_k : 1;
    for (Eigen::Index s = 0; s < S; s += step) kept.push_back(s);
    const auto Sk = static_cast<Eigen::Index>(kept.size());

    std::vector<std::size_t> fut_cols;
    std::vector<std::string> fut_names;
    if (options.future_covariates) {
        const SampleWindow& w0 = *aligned.front();
        for (std::size_t c = 0; c < w0.roles.size(); ++c) {
            if (is_future_known(w0.roles[c])) {
                fut_cols.push_back(c);
                fut_names.push_back(w0.feature_names[c]);
            }
        }
    }

    d.y.resize(N, H);
    for (Eigen::Index i = 0; i < N; ++i) {
        const auto& t = aligned[std::size_t(i)]->target;
        for (Eigen::Index h = 0; h < H; ++h)
            d.y(i, h) = h < t.size() ? t(h) : std::numeric_limits<double>::quiet_NaN();
    }

    const bool fit_new_pca = options.use_pca && pca == nullptr;
    if (options.use_pca && !fit_new_pca) {
        if (pca->components.size() != std::size_t(H)) throw Error("qra design: PCA basis does not match horizon");
        d.pca = *pca;
    }

    for (Eigen::Index h = 0; h < H; ++h) {
        Eigen::MatrixXd draws(N, Sk);
        for (Eigen::Index i = 0; i < N; ++i)
            for (Eigen::Index s = 0; s < Sk; ++s) draws(i, s) = ensembles[std::size_t(i)].samples(kept[std::size_t(s)], h);

        std::vector<std::string> names;
        Eigen::MatrixXd block;
        if (options.use_pca) {
            if (fit_new_pca) {
                double expl = 0.0;
                auto [mu, comps] = fit_pca(draws, options.pca_var, &expl);
                d.pca.mean.push_back(mu);
                d.pca.components.push_back(comps);
                d.pca.explained.push_back(expl);
            }
            const auto& mu = d.pca.mean[std::size_t(h)];
            const auto& comps = d.pca.components[std::size_t(h)];
            if (comps.rows() != Sk) throw Error("qra design: PCA basis does not match draw count");
            block = (draws.rowwise() - mu.transpose()) * comps;
            for (Eigen::Index c = 0; c < comps.cols(); ++c) names.push_back("pc" + std::to_string(c));
        } else {
            block = draws;
            for (Eigen::Index s : kept) names.push_back("draw" + std::to_string(s));
        }
        const Eigen::Index nd = block.cols();
        const Eigen::Index F = nd + (options.use_mean_sd ? 2 : 0) + Eigen::Index(fut_cols.size()) +
                               Eigen::Index(options.statics.size());
        Eigen::MatrixXd X(N, F);
        X.leftCols(nd) = block;
        Eigen::Index at = nd;
        if (options.use_mean_sd) {
            const Eigen::VectorXd mean = draws.rowwise().mean();
            const Eigen::VectorXd sd =
                ((draws.colwise() - mean).cwiseAbs2().rowwise().sum() / static_cast<double>(Sk)).cwiseSqrt();
            X.col(at++) = mean;
            X.col(at++) = sd;
            names.emplace_back("mean");
            names.emplace_back("sd");
        }
        for (std::size_t c = 0; c < fut_cols.size(); ++c) {
            for (Eigen::Index i = 0; i < N; ++i) X(i, at) = aligned[std::size_t(i)]->horizon(h, Eigen::Index(fut_cols[c]));
            ++at;
            names.push_back(fut_names[c]);
        }
        for (const auto& [name, value] : options.statics) {
            X.col(at++).setConstant(value);
            names.push_back(name);
        }
        d.X.push_back(std::move(X));
        d.columns.push_back(std::move(names));
        d.draw_columns.push_back(std::size_t(nd));
    }
    return d;
}

// ---------------------------------------------------------------------------
// Solver

double mean_pinball(const Eigen::VectorXd& y, const Eigen::VectorXd& pred, double tau) {
    if (y.size() == 0) return 0.0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double u = y(i) - pred(i);
        acc += u * (tau - (u < 0.0 ? 1.0 : 0.0));
    }
    return acc / static_cast<double>(y.size());
}

namespace {

double empirical_quantile(std::vector<double> v, double tau) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const auto n = static_cast<double>(v.size());
    auto k = static_cast<std::size_t>(std::ceil(tau * n));
    k = std::clamp<std::size_t>(k, 1, v.size());
    return v[k - 1];
}

std::uint64_t fit_seed(std::uint64_t seed, std::size_t h, std::size_t q, std::size_t l) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(q), static_cast<std::uint32_t>(l)};
    std::array<std::uint32_t, 2> words{};
    seq.generate(words.begin(), words.end());
    return (std::uint64_t(words[0]) << 32) | words[1];
}

}  // namespace

QraCoefficients fit_pinball_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::MatrixXd& Xh,
                                  const Eigen::VectorXd& yh, double tau, double lambda, const QraFitOptions& opt,
                                  const Eigen::VectorXd& beta0, std::uint64_t seed) {
    const Eigen::Index n = X.rows();
    const Eigen::Index F = X.cols();
    QraCoefficients out;
    out.lambda = lambda;

    Eigen::VectorXd beta = beta0.size() == F ? beta0 : Eigen::VectorXd::Zero(F);
    const Eigen::VectorXd resid = y - X * beta;
    double b = empirical_quantile(std::vector<double>(resid.data(), resid.data() + resid.size()), tau);

    // Validation falls back to the training rows when there is no holdout.
    const bool has_holdout = Xh.rows() > 0;
    auto holdout_loss = [&](const Eigen::VectorXd& bt, double bb) {
        if (has_holdout) return mean_pinball(yh, (Xh * bt).array() + bb, tau);
        return mean_pinball(y, (X * bt).array() + bb, tau);
    };

    std::mt19937_64 rng(seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const auto B = static_cast<Eigen::Index>(std::max(1, opt.batch_size));
    const double shrink = opt.lr * lambda;

    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_beta = beta;
    double best_b = b;
    int since = 0;
    for (int epoch = 0; epoch < opt.n_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (Eigen::Index start = 0; start < n; start += B) {
            const Eigen::Index m = std::min(B, n - start);
            Eigen::VectorXd gb = Eigen::VectorXd::Zero(F);
            double gi = 0.0;
            for (Eigen::Index k = 0; k < m; ++k) {
                const Eigen::Index i = order[std::size_t(start + k)];
                const double u = y(i) - X.row(i).dot(beta) - b;
                const double g = u >= 0.0 ? tau : tau - 1.0;  // d rho / d u
                gb.noalias() += g * X.row(i).transpose();
                gi += g;
            }
            beta += opt.lr * gb / static_cast<double>(m);
            b += opt.lr * gi / static_cast<double>(m);
            if (shrink > 0.0) {
                for (Eigen::Index j = 0; j < F; ++j) {
                    const double a = std::abs(beta(j)) - shrink;
                    beta(j) = a > 0.0 ? std::copysign(a, beta(j)) : 0.0;
                }
            }
        }
        out.epochs = epoch + 1;
        const double loss = holdout_loss(beta, b);
        if (!std::isfinite(loss)) break;
        if (loss < best) {
            best = loss;
            best_beta = beta;
            best_b = b;
            out.checkpoints.push_back(loss);
            since = 0;
        } else if (++since >= opt.patience && opt.patience > 0) {
            out.converged = true;
            break;
        }
    }
    if (opt.n_epochs == 0) best = holdout_loss(beta, b);
    out.beta = best_beta;
    out.intercept = best_b;
    out.holdout_loss = best;
    return out;
}

QraModel fit_quantile_lasso(const QraDesign& design, const QraFitOptions& opt) {
    if (opt.levels.empty()) throw DomainError("qra: no quantile levels");
    for (std::size_t i = 0; i < opt.levels.size(); ++i) {
        if (!(opt.levels[i] > 0.0 && opt.levels[i] < 1.0)) throw DomainError("qra: levels must lie in (0, 1)");
        if (i > 0 && !(opt.levels[i] > opt.levels[i - 1])) throw DomainError("qra: levels must be strictly increasing");
    }
    if (opt.lambda_grid.empty()) throw DomainError("qra: empty lambda grid");
    for (double l : opt.lambda_grid)
        if (!(l >= 0.0)) throw DomainError("qra: lambda must be >= 0");
    if (opt.subsample_stride < 1) throw DomainError("qra: subsample_stride must be >= 1");

    QraModel model;
    model.levels = opt.levels;
    model.pca = design.pca;
    model.draws = design.draws;
    model.columns = design.columns;
    const int H = design.horizon();
    model.coef.assign(std::size_t(H), {});
    std::vector<int> unconverged(std::size_t(H), 0);

    auto fit_horizon = [&](int h) {
        const Eigen::MatrixXd& Xall = design.X[std::size_t(h)];
        std::vector<Eigen::Index> rows;
        for (Eigen::Index i = 0; i < Xall.rows(); ++i)
            if (std::isfinite(design.y(i, h))) rows.push_back(i);
        if (rows.size() < 2)
            throw Error("qra: horizon " + std::to_string(h) + " has fewer than 2 observed rows");
        auto n_hold = static_cast<std::size_t>(std::floor(opt.holdout_fraction * double(rows.size())));
        if (n_hold >= rows.size()) n_hold = rows.size() - 1;
        const std::size_t n_fit = rows.size() - n_hold;
        std::vector<Eigen::Index> fit_rows;
        for (std::size_t k = 0; k < n_fit; k += std::size_t(opt.subsample_stride)) fit_rows.push_back(rows[k]);

        const auto F = Xall.cols();
        const auto n_rows = static_cast<Eigen::Index>(fit_rows.size());
        const auto n_h = static_cast<Eigen::Index>(n_hold);
        Eigen::MatrixXd X(n_rows, F), Xh(n_h, F);
        Eigen::VectorXd y(n_rows), yh(n_h);
        for (std::size_t k = 0; k < fit_rows.size(); ++k) {
            X.row(Eigen::Index(k)) = Xall.row(fit_rows[k]);
            y(Eigen::Index(k)) = design.y(fit_rows[k], h);
        }
        for (std::size_t k = 0; k < n_hold; ++k) {
            Xh.row(Eigen::Index(k)) = Xall.row(rows[n_fit + k]);
            yh(Eigen::Index(k)) = design.y(rows[n_fit + k], h);
        }

        // Warm start: the equally weighted ensemble mean.
        Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(F);
        const auto nd = static_cast<Eigen::Index>(design.draw_columns[std::size_t(h)]);
        if (nd > 0) {
            if (!design.pca.empty()) {
                const auto& comps = design.pca.components[std::size_t(h)];
                beta0.head(nd) = comps.transpose() * Eigen::VectorXd::Constant(comps.rows(), 1.0 / double(comps.rows()));
            } else {
                beta0.head(nd).setConstant(1.0 / static_cast<double>(nd));
            }
        }

        auto& out = model.coef[std::size_t(h)];
        for (std::size_t q = 0; q < opt.levels.size(); ++q) {
            QraCoefficients best;
            best.holdout_loss = std::numeric_limits<double>::infinity();
            for (std::size_t l = 0; l < opt.lambda_grid.size(); ++l) {
                QraCoefficients c = fit_pinball_lasso(X, y, Xh, yh, opt.levels[q], opt.lambda_grid[l], opt, beta0,
                                                      fit_seed(opt.seed, std::size_t(h), q, l));
                if (c.holdout_loss < best.holdout_loss || l == 0) best = std::move(c);
            }
            if (!best.converged && opt.n_epochs > 0) ++unconverged[std::size_t(h)];
            if (!best.beta.allFinite() || !std::isfinite(best.intercept))
                throw NumericError("qra: non-finite coefficients at horizon " + std::to_string(h));
            out.push_back(std::move(best));
        }
    };

    const unsigned threads = opt.parallel ? std::max(1u, std::thread::hardware_concurrency()) : 1u;
    if (threads <= 1) {
        for (int h = 0; h < H; ++h) fit_horizon(h);
    } else {
        std::vector<std::future<void>> jobs;
        for (int h = 0; h < H; ++h) jobs.push_back(std::async(std::launch::async, fit_horizon, h));
        for (auto& j : jobs) j.get();
    }
    const int total = std::accumulate(unconverged.begin(), unconverged.end(), 0);
    if (total > 0)
        model.warnings.push_back("qra: " + std::to_string(total) +
                                 " (horizon, level) fits ran all n_epochs without early stopping; best iterate kept");
    return model;
}

std::vector<Eigen::MatrixXd> predict_quantiles(const QraModel& model, const QraDesign& design) {
    if (design.horizon() != model.horizon()) throw Error("qra predict: horizon mismatch");
    const auto Q = static_cast<Eigen::Index>(model.levels.size());
    std::vector<Eigen::MatrixXd> out(design.rows(), Eigen::MatrixXd(Q, model.horizon()));
    for (int h = 0; h < model.horizon(); ++h) {
        const auto& X = design.X[std::size_t(h)];
        for (Eigen::Index q = 0; q < Q; ++q) {
            const auto& c = model.coef[std::size_t(h)][std::size_t(q)];
            if (X.cols() != c.beta.size())
                throw Error("qra predict: design has " + std::to_string(X.cols()) + " columns at horizon " +
                            std::to_string(h) + ", model expects " + std::to_string(c.beta.size()));
            const Eigen::VectorXd v = (X * c.beta).array() + c.intercept;
            for (Eigen::Index i = 0; i < v.size(); ++i) out[std::size_t(i)](q, h) = v(i);
        }
    }
    return out;
}

std::vector<QuantileForecast> finalize_quantiles(const std::vector<Eigen::MatrixXd>& raw,
                                                 const std::vector<Instant>& origins,
                                                 const std::vector<double>& levels,
                                                 const std::vector<double>& targets, double scale, double shift) {
    if (raw.size() != origins.size()) throw Error("finalize_quantiles: origin count mismatch");
    if (!(scale > 0.0)) throw DomainError("finalize_quantiles: scale must be positive");
    std::vector<QuantileForecast> out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const Eigen::MatrixXd& r = raw[i];
        QuantileForecast f{origins[i], targets, Eigen::MatrixXd(Eigen::Index(targets.size()), r.cols())};
        for (Eigen::Index h = 0; h < r.cols(); ++h) {
            std::vector<double> col(std::size_t(r.rows()));
            for (Eigen::Index q = 0; q < r.rows(); ++q) col[std::size_t(q)] = r(q, h);
            const auto repaired = isotonic_repair(col);
            const auto dense = interpolate_levels(levels, repaired, targets);
            for (std::size_t q = 0; q < dense.size(); ++q) f.values(Eigen::Index(q), h) = dense[q] * scale + shift;
        }
        if (!f.monotone()) throw NumericError("finalize_quantiles: crossing quantiles at " + format_instant(f.origin));
        out.push_back(std::move(f));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::vector<double> vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }
Eigen::VectorXd vec(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size())); }

}  // namespace

nlohmann::json to_json(const QraModel& m) {
    nlohmann::json j;
    j["format"] = "epf-qra";
    j["version"] = 1;
    j["levels"] = m.levels;
    j["draws"] = m.draws;
    nlohmann::json statics = nlohmann::json::array();
    for (const auto& [k, v] : m.design.statics) statics.push_back({{"name", k}, {"value", v}});
    j["design"] = {{"use_mean_sd", m.design.use_mean_sd}, {"use_pca", m.design.use_pca},
                   {"pca_var", m.design.pca_var},         {"sample_k", m.design.sample_k},
                   {"future_covariates", m.design.future_covariates}, {"statics", statics}};
    if (!m.pca.empty()) {
        nlohmann::json p = nlohmann::json::array();
        for (std::size_t h = 0; h < m.pca.components.size(); ++h) {
            const auto& c = m.pca.components[h];
            p.push_back({{"mean", vec(m.pca.mean[h])},
                         {"rows", c.rows()},
                         {"cols", c.cols()},
                         {"components", std::vector<double>(c.data(), c.data() + c.size())},
                         {"explained", m.pca.explained[h]}});
        }
        j["pca"] = p;
    }
    j["columns"] = m.columns;
    nlohmann::json coef = nlohmann::json::array();
    for (const auto& per_h : m.coef) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& c : per_h)
            row.push_back({{"beta", vec(c.beta)}, {"intercept", c.intercept}, {"lambda", c.lambda},
                           {"holdout_loss", c.holdout_loss}, {"epochs", c.epochs}});
        coef.push_back(row);
    }
    j["coefficients"] = coef;
    return j;
}

QraModel qra_model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "epf-qra") throw ParseError("not a QRA model file");
    QraModel m;
    j.at("levels").get_to(m.levels);
    j.at("draws").get_to(m.draws);
    const auto& d = j.at("design");
    d.at("use_mean_sd").get_to(m.design.use_mean_sd);
    d.at("use_pca").get_to(m.design.use_pca);
    d.at("pca_var").get_to(m.design.pca_var);
    d.at("sample_k").get_to(m.design.sample_k);
    d.at("future_covariates").get_to(m.design.future_covariates);
    for (const auto& s : d.at("statics")) m.design.statics.emplace_back(s.at("name").get<std::string>(), s.at("value").get<double>());
    if (j.contains("pca")) {
        for (const auto& p : j.at("pca")) {
            m.pca.mean.push_back(vec(p.at("mean").get<std::vector<double>>()));
            const auto data = p.at("components").get<std::vector<double>>();
            m.pca.components.push_back(
                Eigen::Map<const Eigen::MatrixXd>(data.data(), p.at("rows").get<Eigen::Index>(), p.at("cols").get<Eigen::Index>()));
            m.pca.explained.push_back(p.at("explained").get<double>());
        }
    }
    j.at("columns").get_to(m.columns);
    for (const auto& row : j.at("coefficients")) {
        std::vector<QraCoefficients> per_h;
        for (const auto& c : row) {
            QraCoefficients k;
            k.beta = vec(c.at("beta").get<std::vector<double>>());
            c.at("intercept").get_to(k.intercept);
            c.at("lambda").get_to(k.lambda);
            c.at("holdout_loss").get_to(k.holdout_loss);
            c.at("epochs").get_to(k.epochs);
            per_h.push_back(std::move(k));
        }
        m.coef.push_back(std::move(per_h));
    }
    return m;
}

QraPreset qra_preset(const std::string& name) {
    QraPreset p;
    if (name == "tiny-default") {
        p.design.use_pca = true;
        p.design.pca_var = 0.95;
        p.design.sample_k = 0;
        p.fit.levels = {0.01, 0.10, 0.50, 0.90, 0.99};
        p.fit.lambda_grid = {0.0, 1e-4, 1e-3};
        p.fit.n_epochs = 200;
        p.fit.batch_size = 512;
        p.fit.lr = 1e-4;
        p.fit.patience = 10;
        p.fit.subsample_stride = 4;
        p.mc_samples = 64;
        return p;
    }
    if (name == "tiny-tuned") {
        p.design.use_pca = false;
        p.design.sample_k = 1;
        p.fit.levels = {0.01, 0.10, 0.50, 0.90, 0.99};
        p.fit.lambda_grid = {0.0, 1e-3};
        p.fit.n_epochs = 200;
        p.fit.batch_size = 512;
        p.fit.lr = 1.02e-4;
        p.fit.patience = 10;
        p.fit.subsample_stride = 2;
        p.mc_samples = 8;
        return p;
    }
    const std::vector<double> nine{0.01, 0.03, 0.05, 0.10, 0.50, 0.90, 0.95, 0.97, 0.99};
    if (name == "small-default" || name == "base-default") {
        const bool base = name == "base-default";
        p.design.use_pca = true;
        p.fit.levels = nine;
        p.fit.batch_size = base ? 1024 : 512;
        p.fit.patience = 20;
        p.fit.subsample_stride = base ? 1 : 2;
        p.mc_samples = base ? 512 : 128;
        return p;
    }
    if (name == "small-tuned") {
        p.design.sample_k = 1;
        p.fit.levels = nine;
        p.fit.lambda_grid = {0.0, 1e-3};
        p.fit.batch_size = 1024;
        p.fit.lr = 1.6597e-4;
        p.fit.patience = 20;
        p.fit.subsample_stride = 2;
        p.mc_samples = 48;
        return p;
    }
    if (name == "base-tuned") {
        p.design.sample_k = 1;
        p.fit.levels = nine;
        p.fit.n_epochs = 100;
        p.fit.batch_size = 256;
        p.fit.lr = 9.16241e-5;
        p.fit.patience = 30;
        p.fit.subsample_stride = 1;
        p.mc_samples = 128;
        return p;
    }
    throw DomainError("unknown QRA preset '" + name + "'");
}

}  // namespace epf
