#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "epf/autodiff.hpp"
#include "epf/error.hpp"
#include "epf/nhits.hpp"
#include "test_support.hpp"

using namespace epf;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, scale);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

/// Central differences of `loss` with respect to every entry of `p`.
Eigen::VectorXd numeric_gradient(Eigen::VectorXd p, const std::function<double(const Eigen::VectorXd&)>& loss) {
    Eigen::VectorXd g(p.size());
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double keep = p(i);
        p(i) = keep + h;
        const double up = loss(p);
        p(i) = keep - h;
        const double down = loss(p);
        p(i) = keep;
        g(i) = (up - down) / (2.0 * h);
    }
    return g;
}

double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a(i) - b(i)) / std::max(1e-6, std::abs(a(i)) + std::abs(b(i))));
    return worst;
}

/// A graph touching every tape operation; parameters are two dense layers.
struct ToyGraph {
    Eigen::MatrixXd x = random_matrix(5, 6, 1);
    Eigen::MatrixXd side = random_matrix(5, 2, 2);
    Eigen::MatrixXd a = random_matrix(4, 3, 3);
    Eigen::MatrixXd w = random_matrix(5, 3, 4);
    Eigen::MatrixXd mask = (random_matrix(5, 3, 5).array() > 0.0).cast<double>() * 2.0;
    Eigen::MatrixXd target = random_matrix(5, 3, 6);
    // dense1: 6 -> 8, dense2: (3 + 2) -> 3
    static constexpr Eigen::Index P = 6 * 8 + 8 + 5 * 3 + 3;

    double run(const Eigen::VectorXd& p, Eigen::VectorXd* grads, bool use_mae) const {
        Eigen::VectorXd scratch = Eigen::VectorXd::Zero(P);
        Eigen::VectorXd& g = grads ? *grads : scratch;
        ad::Tape t;
        const ad::Var in = t.constant(x);
        ad::Var h = t.dense(in, p.data(), p.data() + 48, 6, 8, g.data(), g.data() + 48);
        h = t.relu(h);
        const ad::Var pooled = t.max_pool(h, 3);                   // 5 x 3 (kernels 3, 3, 2)
        const ad::Var mixed = t.linear(t.concat({pooled, t.cols(h, 0, 1)}), a);  // 5 x 3
        const ad::Var d = t.dense({mixed, t.constant(side)}, p.data() + 56, p.data() + 71, 5, 3, g.data() + 56,
                                  g.data() + 71);
        const ad::Var y = t.mask(t.sub(t.add(d, mixed), t.cols(h, 2, 3)), mask);
        const ad::Var loss = use_mae ? t.mae(y, target) : t.weighted_sum(y, w);
        if (grads) t.backward(loss);
        return t.value(loss)(0, 0);
    }
};

NhitsConfig small_config(PoolMode mode) {
    NhitsConfig c;
    c.n_blocks = {1, 1};
    c.mlp_units = {{6}, {5, 4}};
    c.n_pool_kernel_size = {3, 2};
    c.n_freq_downsample = {4, 2};
    c.pool_mode = mode;
    c.dropout_prob_theta = 0.2;
    return c;
}

InputLayout small_layout() {
    // target, one market column, one proxy; 12 context hours, 6 horizon hours.
    return InputLayout::from_roles({FeatureRole::Target, FeatureRole::Market, FeatureRole::FutureProxy}, 12, 6);
}

}  // namespace

TEST_CASE("tape gradients match central differences") {
    const ToyGraph g;
    const Eigen::VectorXd p = random_matrix(ToyGraph::P, 1, 9, 0.5);
    for (bool use_mae : {false, true}) {
        Eigen::VectorXd analytic = Eigen::VectorXd::Zero(ToyGraph::P);
        g.run(p, &analytic, use_mae);
        const Eigen::VectorXd numeric =
            numeric_gradient(p, [&](const Eigen::VectorXd& q) { return g.run(q, nullptr, use_mae); });
        CHECK(max_relative_error(analytic, numeric) < 1e-5);
    }
}

TEST_CASE("tape rejects out-of-range column slices") {
    ad::Tape t;
    const ad::Var x = t.constant(Eigen::MatrixXd::Zero(2, 3));
    CHECK_THROWS(t.cols(x, 1, 3));
    CHECK_NOTHROW(t.cols(x, 1, 2));
}

TEST_CASE("max pooling routes the adjoint to the window maximum") {
    ad::Tape t;
    Eigen::VectorXd grads = Eigen::VectorXd::Zero(5 * 5 + 5);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(30);
    for (int i = 0; i < 5; ++i) p(i * 5 + i) = 1.0;  // identity weights, zero bias
    Eigen::MatrixXd x(1, 5);
    x << 1.0, 4.0, -2.0, 7.0, 3.0;
    const ad::Var y = t.max_pool(t.dense(t.constant(x), p.data(), p.data() + 25, 5, 5, grads.data(), grads.data() + 25), 2);
    CHECK(t.value(y) == (Eigen::MatrixXd(1, 3) << 4.0, 7.0, 3.0).finished());
    t.backward(t.weighted_sum(y, Eigen::MatrixXd::Ones(1, 3)));
    // d/d bias_j is 1 exactly for the window maxima (positions 1, 3, 4).
    CHECK(grads.tail(5) == (Eigen::VectorXd(5) << 0.0, 1.0, 0.0, 1.0, 1.0).finished());
}

TEST_CASE("pooling and interpolation matrices") {
    const Eigen::MatrixXd pool = average_pool_matrix(7, 3);
    REQUIRE(pool.rows() == 7);
    REQUIRE(pool.cols() == 3);
    Eigen::RowVectorXd x(7);
    x << 1, 2, 3, 4, 5, 6, 10;
    CHECK((x * pool).isApprox((Eigen::RowVectorXd(3) << 2.0, 5.0, 10.0).finished()));

    const Eigen::MatrixXd interp = interpolation_matrix(3, 5);
    Eigen::RowVectorXd knots(3);
    knots << 0.0, 10.0, 30.0;
    CHECK((knots * interp).isApprox((Eigen::RowVectorXd(5) << 0.0, 5.0, 10.0, 20.0, 30.0).finished()));
    for (Eigen::Index j = 0; j < interp.cols(); ++j) CHECK(interp.col(j).sum() == doctest::Approx(1.0));
    CHECK(interpolation_matrix(1, 4).isApprox(Eigen::MatrixXd::Ones(1, 4)));
}

TEST_CASE("parameter count follows the block layout") {
    const InputLayout l = small_layout();
    CHECK(l.past_columns == std::vector<std::size_t>{1, 2});
    CHECK(l.future_columns == std::vector<std::size_t>{2});
    CHECK(l.covariate_width() == 12 * 2 + 6 * 1);
    CHECK(l.width() == 12 + 30);
    // Stack 0: pooled ceil(12/3)=4 + 30 inputs -> 6 -> theta ceil(12/4)+ceil(6/4)=5.
    // Stack 1: pooled 6 + 30 -> 5 -> 4 -> theta 6+3=9.
    const std::size_t expected = (34 * 6 + 6) + (6 * 5 + 5) + (36 * 5 + 5) + (5 * 4 + 4) + (4 * 9 + 9);
    const NhitsModel m(small_config(PoolMode::Average), l);
    CHECK(m.parameter_count() == expected);
    CHECK(nhits_parameter_count(small_config(PoolMode::Average), l) == expected);
    CHECK_THROWS(InputLayout::from_roles({FeatureRole::Calendar}));
}

TEST_CASE("model gradients match central differences for both pooling modes") {
    for (PoolMode mode : {PoolMode::Average, PoolMode::Max}) {
        NhitsModel m(small_config(mode), small_layout());
        m.initialize(3);
        const Eigen::MatrixXd x = random_matrix(4, small_layout().width(), 21);
        const Eigen::MatrixXd w = random_matrix(4, 6, 22);
        auto loss = [&](const Eigen::VectorXd& p, Eigen::VectorXd* grads) {
            NhitsModel copy = m;
            copy.set_parameters(p);
            ad::Tape t;
            Eigen::VectorXd scratch = Eigen::VectorXd::Zero(p.size());
            Eigen::VectorXd& g = grads ? *grads : scratch;
            const ad::Var out = t.weighted_sum(copy.forward(t, t.constant(x), g, nullptr), w);
            if (grads) t.backward(out);
            return t.value(out)(0, 0);
        };
        Eigen::VectorXd analytic = Eigen::VectorXd::Zero(m.parameters().size());
        loss(m.parameters(), &analytic);
        const Eigen::VectorXd numeric =
            numeric_gradient(m.parameters(), [&](const Eigen::VectorXd& q) { return loss(q, nullptr); });
        CHECK(max_relative_error(analytic, numeric) < 1e-4);

        ad::Tape t;
        Eigen::VectorXd g = Eigen::VectorXd::Zero(m.parameters().size());
        CHECK(t.value(m.forward(t, t.constant(x), g, nullptr)).isApprox(m.forward(x)));
    }
}

TEST_CASE("presets and configuration JSON") {
    const auto names = nhits_preset_names();
    CHECK(names.size() == 6);
    for (const auto& n : names) {
        const NhitsConfig c = nhits_preset(n);
        CHECK_NOTHROW(c.validate());
        const NhitsConfig back = nhits_config_from_json(to_json(c));
        CHECK(to_json(back) == to_json(c));
    }
    const NhitsConfig tiny = nhits_preset("tiny-default");
    CHECK(tiny.n_blocks == std::vector<int>{2, 2});
    CHECK(tiny.swag.enabled);
    CHECK(nhits_preset("tiny-tuned").mc_samples == 8);
    CHECK_THROWS(nhits_preset("huge"));
    NhitsConfig bad = tiny;
    bad.n_freq_downsample = {4};
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = tiny;
    bad.n_pool_kernel_size = {0, 2};
    CHECK_THROWS_AS(bad.validate(), DomainError);
    CHECK_THROWS_AS(nhits_config_from_json({{"pool_mode", "median"}}), ParseError);
}

TEST_CASE("warm-up then cosine learning rate") {
    NhitsConfig c;
    c.lr = 1e-3;
    c.warmup_epochs = 2;
    c.n_epochs = 12;
    CHECK(lr_schedule(c, 0.0) == 0.0);
    CHECK(lr_schedule(c, 1.0) == doctest::Approx(5e-4));
    CHECK(lr_schedule(c, 2.0) == doctest::Approx(1e-3));
    CHECK(lr_schedule(c, 7.0) == doctest::Approx(5e-4));
    CHECK(lr_schedule(c, 12.0) == doctest::Approx(0.0));
    CHECK(lr_schedule(c, 4.5) == doctest::Approx(0.5e-3 * (1.0 + std::cos(std::numbers::pi * 0.25))));
}

TEST_CASE("SWAG moments, deviation buffer and sampling") {
    SwagConfig cfg;
    cfg.start_epoch = 2;
    cfg.collect_every = 2;
    cfg.max_rank = 2;
    SwagState s(cfg, 3);
    CHECK_FALSE(s.should_collect(1));
    CHECK(s.should_collect(2));
    CHECK_FALSE(s.should_collect(3));
    CHECK(s.should_collect(6));

    const std::vector<Eigen::Vector3d> iterates{{1.0, 0.0, 2.0}, {3.0, 1.0, 2.0}, {2.0, 5.0, 2.0}};
    std::mt19937_64 rng(1);
    CHECK_FALSE(s.collect(iterates[0], 1));
    CHECK(s.collect(iterates[0], 2));
    CHECK_THROWS((void)s.sample(rng));
    CHECK(s.collect(iterates[1], 4));
    CHECK(s.collect(iterates[2], 6));
    CHECK(s.collected() == 3);
    CHECK(s.epochs() == std::vector<int>{2, 4, 6});

    const Eigen::Vector3d mean = (iterates[0] + iterates[1] + iterates[2]) / 3.0;
    CHECK(s.mean().isApprox(mean));
    Eigen::Vector3d var = Eigen::Vector3d::Zero();
    for (const auto& p : iterates) var += (p - mean).cwiseAbs2() / 3.0;
    CHECK(s.diagonal().head(2).isApprox(var.head(2)));
    CHECK(s.diagonal()(2) == cfg.var_clamp);
    // Rank 2 keeps the deviations of iterates 2 and 3 from the running means.
    REQUIRE(s.deviations().cols() == 2);
    CHECK(s.deviations().col(0).isApprox(iterates[1] - (iterates[0] + iterates[1]) / 2.0));
    CHECK(s.deviations().col(1).isApprox(iterates[2] - mean));

    // Empirical covariance of many draws against diag + D D^T / (2 (K - 1)).
    const Eigen::Matrix3d expected = Eigen::Matrix3d(s.diagonal().asDiagonal()) +
                                     s.deviations() * s.deviations().transpose() / 2.0;
    Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
    const int draws = 40000;
    for (int k = 0; k < draws; ++k) {
        const Eigen::Vector3d d = s.sample(rng) - mean;
        acc += d * d.transpose();
    }
    acc /= draws;
    CHECK((acc - expected).cwiseAbs().maxCoeff() < 0.06 * expected.cwiseAbs().maxCoeff());

    SwagConfig zero = cfg;
    zero.scale = 0.0;
    SwagState z = SwagState::from_json(s.to_json());
    CHECK(z.mean() == s.mean());
    CHECK(z.deviations() == s.deviations());
    CHECK(z.epochs() == s.epochs());
    SwagState s0(zero, 3);
    s0.collect(iterates[0], 2);
    s0.collect(iterates[1], 4);
    CHECK(s0.sample(rng) == s0.mean());
    CHECK_THROWS_AS(SwagState(SwagConfig{true, 0, 0, 5, 1e-30, 1.0}, 3), DomainError);
}

TEST_CASE("checkpoints restore the model exactly") {
    NhitsModel m(small_config(PoolMode::Max), small_layout());
    m.initialize(11);
    SwagState s(SwagConfig{true, 0, 1, 3, 1e-30, 1.0}, Eigen::Index(m.parameter_count()));
    s.collect(m.parameters(), 0);
    s.collect(m.parameters() * 1.01, 1);
    const nlohmann::json std_json = {{"names", {"price"}}, {"mean", {50.0}}, {"std", {10.0}}};
    const nlohmann::json ck = checkpoint_json(m, &s, std_json);
    const NhitsModel back = model_from_checkpoint(nlohmann::json::parse(ck.dump()));
    CHECK(back.parameters() == m.parameters());
    CHECK(back.layout().past_columns == m.layout().past_columns);
    const Eigen::MatrixXd x = random_matrix(3, small_layout().width(), 5);
    CHECK(back.forward(x) == m.forward(x));
    CHECK(ck.at("standardizer") == std_json);
}

TEST_CASE("training reduces the error and MC dropout is reproducible") {
    const FeatureFrame frame = test::seasonal_frame(parse_instant("2023-01-01"), 24 * 30);
    const WindowIndex idx = index_windows(frame, {kContextHours, kHorizonHours, 24});
    REQUIRE(idx.size() == 23);
    NhitsConfig c = nhits_preset("tiny-default");
    c.n_epochs = 30;
    c.swag = {true, 10, 5, 20, 1e-30, 1.0};
    NhitsModel m(c, InputLayout::from_roles(idx.get(0).roles));
    m.initialize(1);
    SwagState swag(c.swag, Eigen::Index(m.parameter_count()));
    std::vector<int> epochs;
    const TrainReport rep = nhits_train(m, as_source(idx), WindowSource{0, {}}, &swag,
                                        {[&](int e, double, double) { epochs.push_back(e); }, 0.0});
    CHECK(rep.epochs_run == 30);
    CHECK(int(epochs.size()) == 30);
    CHECK(rep.train_mae.back() < 0.5 * rep.train_mae.front());
    CHECK(swag.epochs() == std::vector<int>{10, 15, 20, 25});

    const SampleWindow w = idx.get(5);
    const EnsembleForecast a = mc_dropout_ensemble(m, w, 16, 7);
    const EnsembleForecast b = mc_dropout_ensemble(m, w, 16, 7);
    CHECK(a.samples == b.samples);
    CHECK(a.samples.rows() == 16);
    CHECK(a.origin == w.origin);
    CHECK(mc_dropout_ensemble(m, w, 16, 8).samples != a.samples);
    CHECK((a.samples.row(0) - a.samples.row(1)).norm() > 0.0);
    CHECK_THROWS_AS(mc_dropout_ensemble(m, w, 0, 7), DomainError);

    const auto sw = swag_ensembles(m, swag, as_source(idx), 4, 3);
    REQUIRE(sw.size() == idx.size());
    CHECK(sw[0].samples.rows() == 4);
    CHECK(nhits_forward(m, w).size() == 24);
}
