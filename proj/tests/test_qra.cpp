#include <doctest.h>

#include <cmath>
#include <random>

#include "epf/error.hpp"
#include "epf/qra.hpp"
#include "test_support.hpp"

using namespace epf;

namespace {

const Instant kT0 = parse_instant("2024-01-01");

/// Window with a target column, one market column and one calendar column over a 2-hour horizon.
SampleWindow window_at(Instant origin, double level) {
    SampleWindow w;
    w.origin = origin;
    w.feature_names = {"price", "load", "hour_sin"};
    w.roles = {FeatureRole::Target, FeatureRole::Market, FeatureRole::Calendar};
    w.inputs = Eigen::MatrixXd::Zero(4, 3);
    w.horizon = Eigen::MatrixXd::Zero(2, 3);
    w.horizon(0, 2) = 0.25;
    w.horizon(1, 2) = -0.5;
    w.horizon(0, 1) = 99.0;
    w.target = Eigen::Vector2d(level, level + 1.0);
    return w;
}

EnsembleForecast ensemble_at(Instant origin, double offset) {
    EnsembleForecast e{origin, Eigen::MatrixXd(5, 2)};
    for (Eigen::Index s = 0; s < 5; ++s) {
        e.samples(s, 0) = offset + double(s);
        e.samples(s, 1) = offset - double(s);
    }
    return e;
}

}  // namespace

TEST_CASE("design columns: draws, summary statistics, future covariates, statics") {
    const std::vector<EnsembleForecast> ens{ensemble_at(kT0, 10.0), ensemble_at(kT0 + Hours{24}, 20.0)};
    // Windows in a different order than the ensembles; matching is by origin.
    const std::vector<SampleWindow> win{window_at(kT0 + Hours{24}, 7.0), window_at(kT0, 3.0)};
    QraDesignOptions o;
    o.use_mean_sd = true;
    o.statics = {{"zone_DE", 1.0}};
    const QraDesign d = build_design(ens, win, o);
    REQUIRE(d.rows() == 2);
    REQUIRE(d.horizon() == 2);
    CHECK(d.columns[0] == std::vector<std::string>{"draw0", "draw1", "draw2", "draw3", "draw4", "mean", "sd",
                                                   "hour_sin", "zone_DE"});
    CHECK(d.draw_columns[0] == 5);
    CHECK(d.X[0].row(0).head(5) == ens[0].samples.col(0).transpose());
    CHECK(d.X[0](0, 5) == doctest::Approx(12.0));
    CHECK(d.X[0](0, 6) == doctest::Approx(std::sqrt(2.0)));  // population sd of 0..4
    CHECK(d.X[1](1, 7) == -0.5);
    CHECK(d.X[1](1, 8) == 1.0);
    CHECK(d.y(0, 0) == 3.0);
    CHECK(d.y(1, 1) == 8.0);

    QraDesignOptions k2;
    k2.sample_k = 2;
    k2.future_covariates = false;
    const QraDesign dk = build_design(ens, win, k2);
    CHECK(dk.columns[0] == std::vector<std::string>{"draw0", "draw2", "draw4"});
    CHECK(dk.draws == 5);

    CHECK_THROWS_WITH(build_design(ens, {win[0]}, o), doctest::Contains("2024-01-01T00:00:00Z"));
    CHECK_THROWS(build_design(ens, {win[0], win[0], win[1]}, o));
    std::vector<EnsembleForecast> odd = ens;
    odd[1].samples = Eigen::MatrixXd::Zero(4, 2);
    CHECK_THROWS(build_design(odd, win, o));
    k2.sample_k = -1;
    CHECK_THROWS_AS(build_design(ens, win, k2), DomainError);
}

TEST_CASE("PCA keeps the fewest components reaching the variance target") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n;
    Eigen::MatrixXd x(400, 3);
    for (Eigen::Index i = 0; i < 400; ++i) {
        const double t = 3.0 * n(rng);
        x.row(i) << t + 0.05 * n(rng), 2.0 * t + 0.05 * n(rng), 0.05 * n(rng);
    }
    double explained = 0.0;
    const auto [mean, comps] = fit_pca(x, 0.95, &explained);
    CHECK(mean.isApprox(x.colwise().mean().transpose()));
    REQUIRE(comps.cols() == 1);
    CHECK(explained >= 0.95);
    const Eigen::Vector3d dir = Eigen::Vector3d(1.0, 2.0, 0.0) / std::sqrt(5.0);
    CHECK(comps.col(0).dot(dir) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(comps(1, 0) > 0.0);

    const auto [m2, all] = fit_pca(x, 1.0);
    CHECK(all.cols() == 3);
    CHECK((all.transpose() * all).isApprox(Eigen::Matrix3d::Identity(), 1e-10));
    CHECK_THROWS_AS(fit_pca(x, 0.0), DomainError);

    std::vector<EnsembleForecast> ens;
    std::vector<SampleWindow> win;
    for (int i = 0; i < 30; ++i) {
        EnsembleForecast e{kT0 + Hours{24L * i}, Eigen::MatrixXd(3, 2)};
        for (Eigen::Index s = 0; s < 3; ++s) e.samples.row(s) = x.row(i * 3 + s).head(2);
        ens.push_back(e);
        win.push_back(window_at(e.origin, 0.0));
    }
    QraDesignOptions o;
    o.use_pca = true;
    const QraDesign d = build_design(ens, win, o);
    CHECK(d.pca.components.size() == 2);
    CHECK(d.columns[0][0] == "pc0");
    const QraDesign reuse = build_design(ens, win, o, &d.pca);
    CHECK(reuse.X[1] == d.X[1]);
}

TEST_CASE("pinball loss") {
    const Eigen::Vector3d y(1.0, 2.0, 3.0), pred(2.0, 2.0, 2.0);
    CHECK(mean_pinball(y, pred, 0.25) == doctest::Approx((0.75 + 0.0 + 0.25) / 3.0));
}

TEST_CASE("quantile lasso recovers a linear conditional quantile") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int N = 600;
    QraDesign d;
    d.X.push_back(Eigen::MatrixXd(N, 2));
    d.y.resize(N, 1);
    d.columns = {{"x", "noise"}};
    d.draw_columns = {0};
    for (int i = 0; i < N; ++i) {
        d.origins.push_back(kT0 + Hours{24L * i});
        const double x = 2.0 * u(rng);
        d.X[0](i, 0) = x;
        d.X[0](i, 1) = u(rng);
        d.y(i, 0) = 1.0 + 2.0 * x + 0.5 * u(rng);
    }
    QraFitOptions o;
    o.levels = {0.1, 0.5, 0.9};
    o.lambda_grid = {0.0};
    o.lr = 0.02;
    o.n_epochs = 400;
    o.batch_size = 64;
    o.patience = 50;
    const QraModel m = fit_quantile_lasso(d, o);
    REQUIRE(m.horizon() == 1);
    for (std::size_t q = 0; q < 3; ++q) {
        const auto& c = m.coef[0][q];
        // y | x is uniform on 1 + 2x +- 0.5, so the tau-quantile is 1 + 2x + (tau - 0.5).
        CHECK(c.beta(0) == doctest::Approx(2.0).epsilon(0.05));
        CHECK(std::abs(c.beta(1)) < 0.1);
        CHECK(c.intercept == doctest::Approx(1.0 + (o.levels[q] - 0.5)).epsilon(0.1));
    }

    QraFitOptions heavy = o;
    heavy.lambda_grid = {100.0};
    const QraModel zero = fit_quantile_lasso(d, heavy);
    for (const auto& c : zero.coef[0]) CHECK(c.beta.cwiseAbs().maxCoeff() == 0.0);

    const auto raw = predict_quantiles(m, d);
    REQUIRE(raw.size() == std::size_t(N));
    CHECK(raw[0](1, 0) == doctest::Approx(d.X[0].row(0).dot(m.coef[0][1].beta) + m.coef[0][1].intercept));

    const QraModel back = qra_model_from_json(nlohmann::json::parse(to_json(m).dump()));
    const auto raw_back = predict_quantiles(back, d);
    CHECK(raw_back[5] == raw[5]);
    CHECK(back.levels == m.levels);

    QraFitOptions bad = o;
    bad.levels = {0.5, 0.1};
    CHECK_THROWS_AS(fit_quantile_lasso(d, bad), DomainError);
    bad.levels = {0.0, 0.5};
    CHECK_THROWS_AS(fit_quantile_lasso(d, bad), DomainError);
    QraDesign tiny = d;
    tiny.y.setConstant(std::numeric_limits<double>::quiet_NaN());
    tiny.y(0, 0) = 1.0;
    CHECK_THROWS(fit_quantile_lasso(tiny, o));
}

TEST_CASE("finalized quantiles are repaired, interpolated and unstandardized") {
    Eigen::MatrixXd raw(3, 2);
    raw << 1.0, -1.0,  //
        0.0, 0.0,      //
        2.0, 1.0;
    const std::vector<double> levels{0.1, 0.5, 0.9}, targets{0.1, 0.3, 0.7, 0.95};
    const auto out = finalize_quantiles({raw}, {kT0}, levels, targets, 10.0, 50.0);
    REQUIRE(out.size() == 1);
    const auto& f = out[0];
    CHECK(f.levels == targets);
    CHECK(f.monotone());
    // Column 0 repairs to (0.5, 0.5, 2); interpolation at 0.3 gives 0.5 and at 0.7 gives 1.25.
    CHECK(f.values(0, 0) == doctest::Approx(55.0));
    CHECK(f.values(1, 0) == doctest::Approx(55.0));
    CHECK(f.values(2, 0) == doctest::Approx(62.5));
    CHECK(f.values(3, 0) == doctest::Approx(70.0));
    CHECK(f.values(1, 1) == doctest::Approx(45.0));
    CHECK_THROWS_AS(finalize_quantiles({raw}, {kT0}, levels, targets, 0.0, 0.0), DomainError);
    CHECK_THROWS(finalize_quantiles({raw, raw}, {kT0}, levels, targets));
}

TEST_CASE("QRA presets") {
    const QraPreset d = qra_preset("tiny-default");
    CHECK(d.design.use_pca);
    CHECK(d.fit.levels == std::vector<double>{0.01, 0.10, 0.50, 0.90, 0.99});
    const QraPreset t = qra_preset("tiny-tuned");
    CHECK_FALSE(t.design.use_pca);
    CHECK_THROWS(qra_preset("nope"));
}
