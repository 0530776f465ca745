#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "epf/autodiff.hpp"
#include "epf/forecast.hpp"
#include "epf/window.hpp"

namespace epf {

enum class PoolMode { Average, Max };

struct SwagConfig {
    bool enabled = false;
    int start_epoch = 5;
    int collect_every = 1;
    int max_rank = 20;
    double var_clamp = 1e-30;
    double scale = 1.0;
};

struct NhitsConfig {
    std::vector<int> n_blocks{2, 2};
    std::vector<std::vector<int>> mlp_units{{16, 16}, {16, 16}};
    double dropout_prob_theta = 0.1;
    std::vector<int> n_pool_kernel_size{4, 2};
    std::vector<int> n_freq_downsample{4, 2};
    PoolMode pool_mode = PoolMode::Average;

    double lr = 1e-3;
    int warmup_epochs = 2;
    int n_epochs = 100;
    int batch_size = 128;
    double gradient_clip = 1.0;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    int patience = 10;
    std::uint64_t seed = 1;

    int mc_samples = 64;
    SwagConfig swag;

    /// Throws DomainError when stack lists disagree in length or hold
    /// non-positive kernels/factors.
    void validate() const;
    [[nodiscard]] std::size_t stacks() const { return n_blocks.size(); }
};

/// `tiny-default` and `tiny-tuned` plus the larger tables' `small`/`base`.
NhitsConfig nhits_preset(const std::string& name);
std::vector<std::string> nhits_preset_names();

nlohmann::json to_json(const NhitsConfig& c);
NhitsConfig nhits_config_from_json(const nlohmann::json& j);

/// How a window is flattened into one network input row:
/// [target history (context) | past covariates (context x P) | future-known (horizon x K)].
struct InputLayout {
    int context = kContextHours;
    int horizon = kHorizonHours;
    std::vector<std::size_t> past_columns;    ///< all non-target columns
    std::vector<std::size_t> future_columns;  ///< calendar and week-lag proxies
    std::size_t target_column = 0;

    [[nodiscard]] Eigen::Index covariate_width() const {
        return Eigen::Index(context) * Eigen::Index(past_columns.size()) +
               Eigen::Index(horizon) * Eigen::Index(future_columns.size());
    }
    [[nodiscard]] Eigen::Index width() const { return context + covariate_width(); }

    static InputLayout from_roles(const std::vector<FeatureRole>& roles, int context = kContextHours,
                                  int horizon = kHorizonHours);
    /// Writes one window into row `r` of `out`.
    void encode(const SampleWindow& w, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out) const;
};

/// Piecewise-linear interpolation from `n` equally spaced knots spanning
/// positions 0..len-1 (endpoints anchored) as an (n x len) matrix.
Eigen::MatrixXd interpolation_matrix(Eigen::Index n, Eigen::Index len);
/// Average pooling with stride = kernel over `len` inputs, (len x ceil(len/kernel)).
Eigen::MatrixXd average_pool_matrix(Eigen::Index len, Eigen::Index kernel);

/// NHITS: stacks of MLP blocks over multi-rate pooled inputs whose
/// coefficients are interpolated back to the context and horizon grids,
/// combined with doubly residual connections.
class NhitsModel {
public:
    NhitsModel() = default;
    NhitsModel(NhitsConfig config, InputLayout layout);

    [[nodiscard]] const NhitsConfig& config() const { return config_; }
    [[nodiscard]] const InputLayout& layout() const { return layout_; }
    [[nodiscard]] std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }
    [[nodiscard]] const Eigen::VectorXd& parameters() const { return params_; }
    void set_parameters(const Eigen::VectorXd& p);
    Eigen::VectorXd& mutable_parameters() { return params_; }

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
    void initialize(std::uint64_t seed);

    /// Dropout masks are drawn from `rng` when given; deterministic otherwise.
    /// Returns (batch x horizon) forecasts. Throws NumericError on non-finite
    /// block outputs, naming the block.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs, std::mt19937_64* rng = nullptr) const;

    /// Records the forward graph on `tape` and returns the forecast node.
    /// Parameter gradients accumulate into `grads` (same size as parameters).
    ad::Var forward(ad::Tape& tape, ad::Var inputs, Eigen::VectorXd& grads, std::mt19937_64* rng) const;

    struct Dense {
        Eigen::Index in, out, w_offset, b_offset;
    };
    struct Block {
        int stack;
        Eigen::Index pool_kernel, pooled_len, n_backcast, n_forecast;
        std::vector<Dense> layers;  // hidden layers followed by the theta projection
    };
    [[nodiscard]] const std::vector<Block>& blocks() const { return blocks_; }

private:
    NhitsConfig config_;
    InputLayout layout_;
    std::vector<Block> blocks_;
    Eigen::VectorXd params_;
    // Per stack: pooling and interpolation matrices.
    std::vector<Eigen::MatrixXd> pool_;
    std::vector<Eigen::MatrixXd> interp_back_;
    std::vector<Eigen::MatrixXd> interp_fore_;
};

/// Parameter count of a configuration for a given input layout.
std::size_t nhits_parameter_count(const NhitsConfig& config, const InputLayout& layout);

/// Single window, dropout disabled.
Eigen::VectorXd nhits_forward(const NhitsModel& model, const SampleWindow& window);

/// Learning rate at fractional epoch `t`: linear warm-up from 0, then
/// cosine decay to 0 at `n_epochs`.
double lr_schedule(const NhitsConfig& c, double t);

/// Gaussian over weights from SGD iterates: running mean, running second
/// moment and the last `max_rank` deviations from the running mean.
class SwagState {
public:
    SwagState() = default;
    SwagState(SwagConfig config, Eigen::Index dim);

    /// True when `epoch` is a collection epoch under the configured schedule.
    [[nodiscard]] bool should_collect(int epoch) const;
    /// Collects `params` if `epoch` is on the schedule; returns whether it did.
    bool collect(const Eigen::VectorXd& params, int epoch);
    /// theta_swa + scale * (sqrt(diag) .* z1 + D z2 / sqrt(2 (K - 1))).
    /// Throws Error before two collections.
    [[nodiscard]] Eigen::VectorXd sample(std::mt19937_64& rng) const;

    [[nodiscard]] int collected() const { return count_; }
    [[nodiscard]] const Eigen::VectorXd& mean() const { return mean_; }
    [[nodiscard]] Eigen::VectorXd diagonal() const;
    [[nodiscard]] const Eigen::MatrixXd& deviations() const { return dev_; }
    [[nodiscard]] const SwagConfig& config() const { return config_; }
    [[nodiscard]] const std::vector<int>& epochs() const { return epochs_; }

    nlohmann::json to_json() const;
    static SwagState from_json(const nlohmann::json& j);

private:
    SwagConfig config_;
    int count_ = 0;
    Eigen::VectorXd mean_;
    Eigen::VectorXd sq_mean_;
    Eigen::MatrixXd dev_;  // dim x K, oldest first
    std::vector<int> epochs_;
};

struct TrainReport {
    int epochs_run = 0;
    int best_epoch = -1;
    double best_val_mae = 0.0;
    std::vector<double> train_mae;
    std::vector<double> val_mae;
    bool early_stopped = false;
};

/// Any indexed source of masked, standardized windows.
struct WindowSource {
    std::size_t size = 0;
    std::function<SampleWindow(std::size_t)> get;
};
WindowSource as_source(const WindowIndex& idx);
WindowSource as_source(const std::vector<SampleWindow>& windows);

struct TrainOptions {
    /// Called after each epoch with (epoch, train MAE, val MAE).
    std::function<void(int, double, double)> on_epoch;
    /// Stop once train MAE drops below this value (0 disables).
    double target_train_mae = 0.0;
};

/// AdamW on the MAE with warm-up + cosine learning rate, global-norm
/// gradient clipping and early stopping on validation MAE (best parameters
/// restored). Collects SWAG iterates when enabled. Throws NumericError on a
/// non-finite loss.
TrainReport nhits_train(NhitsModel& model, const WindowSource& train, const WindowSource& val,
                        SwagState* swag = nullptr, const TrainOptions& opt = {});

/// Encodes windows into (N x layout.width()) inputs and (N x horizon) targets.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> encode_batch(const InputLayout& layout, const WindowSource& src,
                                                         const std::vector<std::size_t>& rows);

/// S stochastic forward passes with dropout active. Deterministic for a
/// given (seed, origin). Throws DomainError for S < 1.
EnsembleForecast mc_dropout_ensemble(const NhitsModel& model, const SampleWindow& window, int samples,
                                     std::uint64_t seed);

/// One forecast per SWAG weight draw for each window.
std::vector<EnsembleForecast> swag_ensembles(const NhitsModel& model, const SwagState& swag,
                                             const WindowSource& windows, int samples, std::uint64_t seed);

/// Checkpoint: config, layout, flat parameters, optional SWAG state and the
/// standardizer that produced the training inputs.
nlohmann::json checkpoint_json(const NhitsModel& model, const SwagState* swag, const nlohmann::json& standardizer);
NhitsModel model_from_checkpoint(const nlohmann::json& j);

}  // namespace epf
