#include "epf/nhits.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "epf/error.hpp"

namespace epf {

// ---------------------------------------------------------------------------
// Configuration

void NhitsConfig::validate() const {
    const std::size_t s = n_blocks.size();
    if (s == 0) throw DomainError("nhits: at least one stack required");
    if (mlp_units.size() != s || n_pool_kernel_size.size() != s || n_freq_downsample.size() != s)
        throw DomainError("nhits: per-stack lists must have equal length");
    for (std::size_t i = 0; i < s; ++i) {
        if (n_blocks[i] < 1) throw DomainError("nhits: n_blocks must be >= 1");
        if (n_pool_kernel_size[i] < 1) throw DomainError("nhits: pool kernel must be >= 1");
        if (n_freq_downsample[i] < 1) throw DomainError("nhits: downsample factor must be >= 1");
        if (mlp_units[i].empty()) throw DomainError("nhits: each stack needs at least one hidden layer");
        for (int u : mlp_units[i])
            if (u < 1) throw DomainError("nhits: hidden units must be >= 1");
    }
    if (!(dropout_prob_theta >= 0.0 && dropout_prob_theta < 1.0)) throw DomainError("nhits: dropout must lie in [0, 1)");
    if (batch_size < 1 || n_epochs < 0 || warmup_epochs < 0) throw DomainError("nhits: bad training settings");
}

NhitsConfig nhits_preset(const std::string& name) {
    NhitsConfig c;
    auto units = [](std::size_t stacks, std::vector<int> layer) {
        return std::vector<std::vector<int>>(stacks, std::move(layer));
    };
    if (name == "tiny-default") {
        c.swag = {true, 5, 1, 20, 1e-30, 1.0};
        return c;
    }
    if (name == "tiny-tuned") {
        c.n_blocks = {1, 1};
        c.mlp_units = units(2, {32, 32});
        c.dropout_prob_theta = 0.154;
        c.n_pool_kernel_size = {2, 2};
        c.n_freq_downsample = {2, 2};
        c.lr = 5.552e-5;
        c.mc_samples = 8;
        c.swag.enabled = false;
        return c;
    }
    if (name == "small-default") {
        c.n_blocks = {2, 2, 2};
        c.mlp_units = units(3, {96, 96});
        c.n_pool_kernel_size = {4, 2, 1};
        c.n_freq_downsample = {4, 2, 1};
        c.mc_samples = 128;
        c.swag = {true, 5, 1, 20, 1e-30, 1.0};
        return c;
    }
    if (name == "base-default") {
        c.n_blocks = {3, 3, 3};
        c.mlp_units = units(3, {256, 256, 256});
        c.n_pool_kernel_size = {4, 2, 1};
        c.n_freq_downsample = {4, 2, 1};
        c.mc_samples = 512;
        c.swag = {true, 5, 1, 20, 1e-30, 1.0};
        return c;
    }
    if (name == "small-tuned") {
        c.n_blocks = {2, 2, 2, 2};
        c.mlp_units = units(4, {96, 96});
        c.dropout_prob_theta = 0.141;
        c.n_pool_kernel_size = {8, 4, 2, 2};
        c.n_freq_downsample = {4, 2, 2, 1};
        c.lr = 1.1929e-4;
        c.mc_samples = 48;
        c.swag = {true, 5, 4, 10, 1e-30, 0.5};
        return c;
    }
    if (name == "base-tuned") {
        c.n_blocks = {2, 2, 2, 2};
        c.mlp_units = units(4, {256, 256, 256});
        c.dropout_prob_theta = 0.1183;
        c.n_pool_kernel_size = {16, 8, 4, 2};
        c.n_freq_downsample = {16, 8, 4, 2};
        c.lr = 6.1802e-5;
        c.mc_samples = 128;
        c.swag = {true, 5, 4, 10, 1e-30, 0.5};
        return c;
    }
    throw DomainError("unknown NHITS preset '" + name + "'");
}

std::vector<std::string> nhits_preset_names() {
    return {"tiny-default", "tiny-tuned", "small-default", "small-tuned", "base-default", "base-tuned"};
}

nlohmann::json to_json(const NhitsConfig& c) {
    return {
        {"n_blocks", c.n_blocks},
        {"mlp_units", c.mlp_units},
        {"dropout_prob_theta", c.dropout_prob_theta},
        {"n_pool_kernel_size", c.n_pool_kernel_size},
        {"n_freq_downsample", c.n_freq_downsample},
        {"pool_mode", c.pool_mode == PoolMode::Average ? "average" : "max"},
        {"lr", c.lr},
        {"warmup_epochs", c.warmup_epochs},
        {"n_epochs", c.n_epochs},
        {"batch_size", c.batch_size},
        {"gradient_clip", c.gradient_clip},
        {"weight_decay", c.weight_decay},
        {"beta1", c.beta1},
        {"beta2", c.beta2},
        {"patience", c.patience},
        {"seed", c.seed},
        {"mc_samples", c.mc_samples},
        {"swag",
         {{"enabled", c.swag.enabled},
          {"start_epoch", c.swag.start_epoch},
          {"collect_every", c.swag.collect_every},
          {"max_rank", c.swag.max_rank},
          {"var_clamp", c.swag.var_clamp},
          {"scale", c.swag.scale}}},
    };
}

NhitsConfig nhits_config_from_json(const nlohmann::json& j) {
    NhitsConfig c = j.contains("preset") ? nhits_preset(j.at("preset").get<std::string>()) : NhitsConfig{};
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    get("n_blocks", c.n_blocks);
    get("mlp_units", c.mlp_units);
    get("dropout_prob_theta", c.dropout_prob_theta);
    get("n_pool_kernel_size", c.n_pool_kernel_size);
    get("n_freq_downsample", c.n_freq_downsample);
    if (j.contains("pool_mode")) {
        const auto m = j.at("pool_mode").get<std::string>();
        if (m != "average" && m != "max") throw ParseError("pool_mode must be 'average' or 'max'");
        c.pool_mode = m == "max" ? PoolMode::Max : PoolMode::Average;
    }
    get("lr", c.lr);
    get("warmup_epochs", c.warmup_epochs);
    get("n_epochs", c.n_epochs);
    get("batch_size", c.batch_size);
    get("gradient_clip", c.gradient_clip);
    get("weight_decay", c.weight_decay);
    get("beta1", c.beta1);
    get("beta2", c.beta2);
    get("patience", c.patience);
    get("seed", c.seed);
    get("mc_samples", c.mc_samples);
    if (j.contains("swag")) {
        const auto& s = j.at("swag");
        auto sget = [&](const char* key, auto& field) {
            if (s.contains(key)) s.at(key).get_to(field);
        };
        sget("enabled", c.swag.enabled);
        sget("start_epoch", c.swag.start_epoch);
        sget("collect_every", c.swag.collect_every);
        sget("max_rank", c.swag.max_rank);
        sget("var_clamp", c.swag.var_clamp);
        sget("scale", c.swag.scale);
    }
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Input layout

InputLayout InputLayout::from_roles(const std::vector<FeatureRole>& roles, int context, int horizon) {
    InputLayout l;
    l.context = context;
    l.horizon = horizon;
    bool have_target = false;
    for (std::size_t j = 0; j < roles.size(); ++j) {
        if (roles[j] == FeatureRole::Target) {
            l.target_column = j;
            have_target = true;
            continue;
        }
        l.past_columns.push_back(j);
        if (is_future_known(roles[j])) l.future_columns.push_back(j);
    }
    if (!have_target) throw Error("input layout: window has no target column");
    return l;
}

void InputLayout::encode(const SampleWindow& w, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out) const {
    if (w.inputs.rows() != context || w.horizon.rows() != horizon)
        throw Error("input layout: window shape does not match layout");
    Eigen::Index at = 0;
    const auto tc = static_cast<Eigen::Index>(target_column);
    for (Eigen::Index i = 0; i < context; ++i) out(at++) = w.inputs(i, tc);
    for (std::size_t c : past_columns)
        for (Eigen::Index i = 0; i < context; ++i) out(at++) = w.inputs(i, Eigen::Index(c));
    for (std::size_t c : future_columns)
        for (Eigen::Index i = 0; i < horizon; ++i) out(at++) = w.horizon(i, Eigen::Index(c));
}

// ---------------------------------------------------------------------------
// Fixed linear maps

Eigen::MatrixXd interpolation_matrix(Eigen::Index n, Eigen::Index len) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, len);
    if (n == 1) {
        m.setOnes();
        return m;
    }
    for (Eigen::Index j = 0; j < len; ++j) {
        // Knot k sits at position k * (len - 1) / (n - 1).
        const double pos = len == 1 ? 0.0 : static_cast<double>(j) * static_cast<double>(n - 1) / static_cast<double>(len - 1);
        const auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(pos)), n - 2);
        const double w = pos - static_cast<double>(k);
        m(k, j) += 1.0 - w;
        m(k + 1, j) += w;
    }
    return m;
}

Eigen::MatrixXd average_pool_matrix(Eigen::Index len, Eigen::Index kernel) {
    const Eigen::Index n = (len + kernel - 1) / kernel;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(len, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        const Eigen::Index lo = c * kernel, hi = std::min(len, lo + kernel);
        for (Eigen::Index r = lo; r < hi; ++r) m(r, c) = 1.0 / static_cast<double>(hi - lo);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Model

namespace {

Eigen::Index ceil_div(Eigen::Index a, Eigen::Index b) { return (a + b - 1) / b; }

}  // namespace

NhitsModel::NhitsModel(NhitsConfig config, InputLayout layout) : config_(std::move(config)), layout_(std::move(layout)) {
    config_.validate();
    const Eigen::Index C = layout_.context, H = layout_.horizon;
    const Eigen::Index cov = layout_.covariate_width();
    Eigen::Index offset = 0;
    for (std::size_t s = 0; s < config_.stacks(); ++s) {
        const Eigen::Index k = config_.n_pool_kernel_size[s];
        const Eigen::Index r = config_.n_freq_downsample[s];
        pool_.push_back(average_pool_matrix(C, k));
        interp_back_.push_back(interpolation_matrix(ceil_div(C, r), C));
        interp_fore_.push_back(interpolation_matrix(ceil_div(H, r), H));
        for (int b = 0; b < config_.n_blocks[s]; ++b) {
            Block blk{static_cast<int>(s), k, ceil_div(C, k), ceil_div(C, r), ceil_div(H, r), {}};
            Eigen::Index in = blk.pooled_len + cov;
            std::vector<Eigen::Index> widths(config_.mlp_units[s].begin(), config_.mlp_units[s].end());
            widths.push_back(blk.n_backcast + blk.n_forecast);
            for (Eigen::Index out : widths) {
                blk.layers.push_back({in, out, offset, offset + in * out});
                offset += in * out + out;
                in = out;
            }
            blocks_.push_back(std::move(blk));
        }
    }
    params_.setZero(offset);
}

void NhitsModel::set_parameters(const Eigen::VectorXd& p) {
    if (p.size() != params_.size()) throw Error("nhits: parameter vector size mismatch");
    params_ = p;
}

void NhitsModel::initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (const auto& blk : blocks_) {
        for (const auto& d : blk.layers) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(d.in));
            std::uniform_real_distribution<double> u(-bound, bound);
            for (Eigen::Index i = 0; i < d.in * d.out; ++i) params_(d.w_offset + i) = u(rng);
            for (Eigen::Index i = 0; i < d.out; ++i) params_(d.b_offset + i) = u(rng);
        }
    }
}

ad::Var NhitsModel::forward(ad::Tape& tape, ad::Var inputs, Eigen::VectorXd& grads, std::mt19937_64* rng) const {
    const Eigen::Index C = layout_.context, H = layout_.horizon;
    const Eigen::Index B = tape.value(inputs).rows();
    if (tape.value(inputs).cols() != layout_.width()) throw Error("nhits: input width does not match layout");
    const bool with_grads = grads.size() == params_.size();
    const double p = config_.dropout_prob_theta;

    ad::Var residual = tape.cols(inputs, 0, C);
    const Eigen::Index cov_w = layout_.covariate_width();
    const bool has_cov = cov_w > 0;
    ad::Var cov = has_cov ? tape.cols(inputs, C, cov_w) : ad::Var{};
    ad::Var forecast = tape.constant(Eigen::MatrixXd::Zero(B, H));

    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
        const Block& blk = blocks_[bi];
        const auto s = static_cast<std::size_t>(blk.stack);
        ad::Var pooled = config_.pool_mode == PoolMode::Average ? tape.linear(residual, pool_[s])
                                                                : tape.max_pool(residual, blk.pool_kernel);
        ad::Var h = pooled;
        for (std::size_t li = 0; li < blk.layers.size(); ++li) {
            const Dense& d = blk.layers[li];
            std::vector<ad::Var> in{h};
            if (li == 0 && has_cov) in.push_back(cov);
            h = tape.dense(in, params_.data() + d.w_offset, params_.data() + d.b_offset, d.in, d.out,
                           with_grads ? grads.data() + d.w_offset : nullptr,
                           with_grads ? grads.data() + d.b_offset : nullptr);
            if (li + 1 == blk.layers.size()) break;  // theta projection: no activation
            h = tape.relu(h);
            if (rng != nullptr && p > 0.0) {
                std::bernoulli_distribution keep(1.0 - p);
                Eigen::MatrixXd m(B, d.out);
                for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = keep(*rng) ? 1.0 / (1.0 - p) : 0.0;
                h = tape.mask(h, std::move(m));
            }
        }
        ad::Var back = tape.linear(tape.cols(h, 0, blk.n_backcast), interp_back_[s]);
        ad::Var fore = tape.linear(tape.cols(h, blk.n_backcast, blk.n_forecast), interp_fore_[s]);
        if (!tape.value(fore).allFinite() || !tape.value(back).allFinite())
            throw NumericError("nhits: non-finite activations in block " + std::to_string(bi));
        residual = tape.sub(residual, back);
        forecast = tape.add(forecast, fore);
    }
    return forecast;
}

Eigen::MatrixXd NhitsModel::forward(const Eigen::MatrixXd& inputs, std::mt19937_64* rng) const {
    ad::Tape tape;
    Eigen::VectorXd no_grads;
    const ad::Var out = forward(tape, tape.constant(inputs), no_grads, rng);
    return tape.value(out);
}

std::size_t nhits_parameter_count(const NhitsConfig& config, const InputLayout& layout) {
    return NhitsModel(config, layout).parameter_count();
}

Eigen::VectorXd nhits_forward(const NhitsModel& model, const SampleWindow& window) {
    Eigen::MatrixXd x(1, model.layout().width());
    model.layout().encode(window, x.row(0));
    return model.forward(x).row(0).transpose();
}

double lr_schedule(const NhitsConfig& c, double t) {
    if (t < 0.0) return 0.0;
    if (c.warmup_epochs > 0 && t < c.warmup_epochs) return c.lr * t / c.warmup_epochs;
    const double span = static_cast<double>(c.n_epochs - c.warmup_epochs);
    if (span <= 0.0) return c.lr;
    const double progress = std::clamp((t - c.warmup_epochs) / span, 0.0, 1.0);
    return 0.5 * c.lr * (1.0 + std::cos(std::numbers::pi * progress));
}

// ---------------------------------------------------------------------------
// SWAG

SwagState::SwagState(SwagConfig config, Eigen::Index dim)
    : config_(config), mean_(Eigen::VectorXd::Zero(dim)), sq_mean_(Eigen::VectorXd::Zero(dim)), dev_(dim, 0) {
    if (config_.collect_every < 1) throw DomainError("swag: collect_every must be >= 1");
    if (config_.max_rank < 1) throw DomainError("swag: max_rank must be >= 1");
}

bool SwagState::should_collect(int epoch) const {
    return epoch >= config_.start_epoch && (epoch - config_.start_epoch) % config_.collect_every == 0;
}

bool SwagState::collect(const Eigen::VectorXd& params, int epoch) {
    if (!should_collect(epoch)) return false;
    if (params.size() != mean_.size()) throw Error("swag: parameter dimension mismatch");
    const double n = static_cast<double>(count_);
    mean_ = (n * mean_ + params) / (n + 1.0);
    sq_mean_ = (n * sq_mean_ + params.cwiseAbs2()) / (n + 1.0);
    ++count_;
    const Eigen::VectorXd dev = params - mean_;
    if (dev_.cols() < config_.max_rank) {
        dev_.conservativeResize(Eigen::NoChange, dev_.cols() + 1);
    } else {
        // FIFO: drop the oldest column.
        for (Eigen::Index c = 1; c < dev_.cols(); ++c) dev_.col(c - 1) = dev_.col(c);
    }
    dev_.col(dev_.cols() - 1) = dev;
    epochs_.push_back(epoch);
    return true;
}

Eigen::VectorXd SwagState::diagonal() const {
    return (sq_mean_ - mean_.cwiseAbs2()).cwiseMax(config_.var_clamp);
}

Eigen::VectorXd SwagState::sample(std::mt19937_64& rng) const {
    if (count_ < 2) throw Error("swag: need at least two collected iterates before sampling");
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::VectorXd z1(mean_.size());
    for (Eigen::Index i = 0; i < z1.size(); ++i) z1(i) = z(rng);
    Eigen::VectorXd draw = diagonal().cwiseSqrt().cwiseProduct(z1);
    const Eigen::Index K = dev_.cols();
    if (K >= 2) {
        Eigen::VectorXd z2(K);
        for (Eigen::Index i = 0; i < K; ++i) z2(i) = z(rng);
        draw += dev_ * z2 / std::sqrt(2.0 * static_cast<double>(K - 1));
    }
    if (config_.scale == 0.0) return mean_;
    return mean_ + config_.scale * draw;
}

nlohmann::json SwagState::to_json() const {
    nlohmann::json j;
    j["config"] = {{"enabled", config_.enabled},         {"start_epoch", config_.start_epoch},
                   {"collect_every", config_.collect_every}, {"max_rank", config_.max_rank},
                   {"var_clamp", config_.var_clamp},       {"scale", config_.scale}};
    j["count"] = count_;
    j["epochs"] = epochs_;
    j["mean"] = std::vector<double>(mean_.data(), mean_.data() + mean_.size());
    j["sq_mean"] = std::vector<double>(sq_mean_.data(), sq_mean_.data() + sq_mean_.size());
    j["rank"] = dev_.cols();
    j["deviations"] = std::vector<double>(dev_.data(), dev_.data() + dev_.size());
    return j;
}

SwagState SwagState::from_json(const nlohmann::json& j) {
    SwagConfig c;
    const auto& cj = j.at("config");
    cj.at("enabled").get_to(c.enabled);
    cj.at("start_epoch").get_to(c.start_epoch);
    cj.at("collect_every").get_to(c.collect_every);
    cj.at("max_rank").get_to(c.max_rank);
    cj.at("var_clamp").get_to(c.var_clamp);
    cj.at("scale").get_to(c.scale);
    const auto mean = j.at("mean").get<std::vector<double>>();
    SwagState s(c, static_cast<Eigen::Index>(mean.size()));
    s.count_ = j.at("count").get<int>();
    s.epochs_ = j.at("epochs").get<std::vector<int>>();
    s.mean_ = Eigen::Map<const Eigen::VectorXd>(mean.data(), Eigen::Index(mean.size()));
    const auto sq = j.at("sq_mean").get<std::vector<double>>();
    s.sq_mean_ = Eigen::Map<const Eigen::VectorXd>(sq.data(), Eigen::Index(sq.size()));
    const auto rank = j.at("rank").get<Eigen::Index>();
    const auto dev = j.at("deviations").get<std::vector<double>>();
    s.dev_ = Eigen::Map<const Eigen::MatrixXd>(dev.data(), s.mean_.size(), rank);
    return s;
}

// ---------------------------------------------------------------------------
// Training

WindowSource as_source(const WindowIndex& idx) {
    return {idx.size(), [&idx](std::size_t i) { return idx.get(i); }};
}

WindowSource as_source(const std::vector<SampleWindow>& windows) {
    return {windows.size(), [&windows](std::size_t i) { return windows[i]; }};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> encode_batch(const InputLayout& layout, const WindowSource& src,
                                                         const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd x(Eigen::Index(rows.size()), layout.width());
    Eigen::MatrixXd y(Eigen::Index(rows.size()), layout.horizon);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const SampleWindow w = src.get(rows[r]);
        layout.encode(w, x.row(Eigen::Index(r)));
        y.row(Eigen::Index(r)) = w.target.transpose();
    }
    return {std::move(x), std::move(y)};
}

namespace {

double evaluate_mae(const NhitsModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    if (x.rows() == 0) return 0.0;
    constexpr Eigen::Index kChunk = 1024;
    double acc = 0.0;
    for (Eigen::Index r = 0; r < x.rows(); r += kChunk) {
        const Eigen::Index n = std::min(kChunk, x.rows() - r);
        acc += (model.forward(x.middleRows(r, n)) - y.middleRows(r, n)).cwiseAbs().sum();
    }
    return acc / static_cast<double>(y.size());
}

std::vector<std::size_t> iota_n(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

}  // namespace

TrainReport nhits_train(NhitsModel& model, const WindowSource& train, const WindowSource& val, SwagState* swag,
                        const TrainOptions& opt) {
    if (train.size == 0) throw Error("nhits_train: empty training set");
    const NhitsConfig& cfg = model.config();
    const InputLayout& layout = model.layout();
    std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);

    // Cache encoded inputs when they fit comfortably in memory.
    constexpr std::size_t kCacheBytes = std::size_t{256} << 20;
    const bool cache_train = train.size * static_cast<std::size_t>(layout.width()) * sizeof(double) <= kCacheBytes;
    Eigen::MatrixXd train_x, train_y;
    if (cache_train) std::tie(train_x, train_y) = encode_batch(layout, train, iota_n(train.size));
    auto [val_x, val_y] = encode_batch(layout, val, iota_n(val.size));

    const Eigen::Index P = static_cast<Eigen::Index>(model.parameter_count());
    Eigen::VectorXd grads(P), m1 = Eigen::VectorXd::Zero(P), m2 = Eigen::VectorXd::Zero(P);
    Eigen::VectorXd best = model.parameters();
    TrainReport rep;
    rep.best_val_mae = std::numeric_limits<double>::infinity();
    int since_best = 0;
    long step = 0;
    constexpr double kEps = 1e-8;

    std::vector<std::size_t> order = iota_n(train.size);
    const auto B = static_cast<std::size_t>(cfg.batch_size);
    const std::size_t n_batches = (train.size + B - 1) / B;

    for (int epoch = 0; epoch < cfg.n_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < n_batches; ++b) {
            const std::vector<std::size_t> rows(order.begin() + long(b * B),
                                                order.begin() + long(std::min(train.size, (b + 1) * B)));
            Eigen::MatrixXd bx, by;
            if (cache_train) {
                bx.resize(Eigen::Index(rows.size()), train_x.cols());
                by.resize(Eigen::Index(rows.size()), train_y.cols());
                for (std::size_t r = 0; r < rows.size(); ++r) {
                    bx.row(Eigen::Index(r)) = train_x.row(Eigen::Index(rows[r]));
                    by.row(Eigen::Index(r)) = train_y.row(Eigen::Index(rows[r]));
                }
            } else {
                std::tie(bx, by) = encode_batch(layout, train, rows);
            }
            ad::Tape tape;
            grads.setZero();
            const ad::Var out = model.forward(tape, tape.constant(std::move(bx)), grads, &rng);
            const ad::Var loss = tape.mae(out, by);
            const double lv = tape.value(loss)(0, 0);
            if (!std::isfinite(lv))
                throw NumericError("nhits_train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(b) + " (lr " + std::to_string(lr_schedule(cfg, epoch)) + ")");
            tape.backward(loss);
            loss_sum += lv * static_cast<double>(rows.size());

            const double norm = grads.norm();
            if (cfg.gradient_clip > 0.0 && norm > cfg.gradient_clip) grads *= cfg.gradient_clip / norm;

            const double lr = lr_schedule(cfg, epoch + static_cast<double>(b) / static_cast<double>(n_batches));
            ++step;
            m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * grads;
            m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * grads.cwiseAbs2();
            const double c1 = 1.0 - std::pow(cfg.beta1, double(step));
            const double c2 = 1.0 - std::pow(cfg.beta2, double(step));
            Eigen::VectorXd& theta = model.mutable_parameters();
            theta *= 1.0 - lr * cfg.weight_decay;
            theta.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + kEps);
        }
        const double train_mae = loss_sum / static_cast<double>(train.size);
        const double val_mae = val.size > 0 ? evaluate_mae(model, val_x, val_y) : train_mae;
        rep.train_mae.push_back(train_mae);
        rep.val_mae.push_back(val_mae);
        rep.epochs_run = epoch + 1;
        if (swag != nullptr) swag->collect(model.parameters(), epoch);
        if (opt.on_epoch) opt.on_epoch(epoch, train_mae, val_mae);

        if (val_mae < rep.best_val_mae) {
            rep.best_val_mae = val_mae;
            rep.best_epoch = epoch;
            best = model.parameters();
            since_best = 0;
        } else if (++since_best >= cfg.patience && cfg.patience > 0) {
            rep.early_stopped = true;
            break;
        }
        if (opt.target_train_mae > 0.0 && train_mae < opt.target_train_mae) break;
    }
    if (rep.best_epoch >= 0) model.set_parameters(best);
    return rep;
}

// ---------------------------------------------------------------------------
// Ensembles

namespace {

std::uint64_t mix(std::uint64_t seed, Instant origin) {
    std::uint64_t x = seed ^ (static_cast<std::uint64_t>(to_unix(origin)) * 0x9E3779B97F4A7C15ULL);
    x ^= x >> 31;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    return x;
}

}  // namespace

EnsembleForecast mc_dropout_ensemble(const NhitsModel& model, const SampleWindow& window, int samples,
                                     std::uint64_t seed) {
    if (samples < 1) throw DomainError("mc_dropout_ensemble: need at least one sample");
    Eigen::RowVectorXd row(model.layout().width());
    model.layout().encode(window, row);
    const Eigen::MatrixXd x = row.replicate(samples, 1);
    std::mt19937_64 rng(mix(seed, window.origin));
    return {window.origin, model.forward(x, &rng)};
}

std::vector<EnsembleForecast> swag_ensembles(const NhitsModel& model, const SwagState& swag,
                                             const WindowSource& windows, int samples, std::uint64_t seed) {
    if (samples < 1) throw DomainError("swag_ensembles: need at least one sample");
    std::vector<std::size_t> rows(windows.size);
    std::iota(rows.begin(), rows.end(), 0);
    auto [x, y] = encode_batch(model.layout(), windows, rows);
    std::vector<EnsembleForecast> out(windows.size);
    for (std::size_t i = 0; i < windows.size; ++i) {
        out[i].origin = windows.get(i).origin;
        out[i].samples.resize(samples, model.layout().horizon);
    }
    NhitsModel draw = model;
    std::mt19937_64 rng(seed);
    for (int s = 0; s < samples; ++s) {
        draw.set_parameters(swag.sample(rng));
        const Eigen::MatrixXd f = draw.forward(x);
        for (std::size_t i = 0; i < windows.size; ++i) out[i].samples.row(s) = f.row(Eigen::Index(i));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

nlohmann::json checkpoint_json(const NhitsModel& model, const SwagState* swag, const nlohmann::json& standardizer) {
    nlohmann::json j;
    j["format"] = "epf-nhits";
    j["version"] = 1;
    j["config"] = to_json(model.config());
    const auto& l = model.layout();
    j["layout"] = {{"context", l.context},
                   {"horizon", l.horizon},
                   {"target_column", l.target_column},
                   {"past_columns", l.past_columns},
                   {"future_columns", l.future_columns}};
    const auto& p = model.parameters();
    j["parameters"] = std::vector<double>(p.data(), p.data() + p.size());
    if (swag != nullptr && swag->collected() > 0) j["swag"] = swag->to_json();
    j["standardizer"] = standardizer;
    return j;
}

NhitsModel model_from_checkpoint(const nlohmann::json& j) {
    if (j.value("format", "") != "epf-nhits") throw ParseError("not an NHITS checkpoint");
    if (j.value("version", 0) != 1) throw ParseError("unsupported checkpoint version");
    InputLayout l;
    const auto& lj = j.at("layout");
    lj.at("context").get_to(l.context);
    lj.at("horizon").get_to(l.horizon);
    lj.at("target_column").get_to(l.target_column);
    lj.at("past_columns").get_to(l.past_columns);
    lj.at("future_columns").get_to(l.future_columns);
    NhitsModel m(nhits_config_from_json(j.at("config")), l);
    const auto p = j.at("parameters").get<std::vector<double>>();
    m.set_parameters(Eigen::Map<const Eigen::VectorXd>(p.data(), Eigen::Index(p.size())));
    return m;
}

}  // namespace epf
