#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "epf/forecast.hpp"
#include "epf/window.hpp"

namespace epf {

struct QraDesignOptions {
    bool use_mean_sd = false;
    bool use_pca = false;
    double pca_var = 0.95;
    /// Keep every k-th draw column; 0 keeps all.
    int sample_k = 0;
    bool future_covariates = true;
    /// Constant per-run features appended to every row (e.g. a zone indicator).
    std::vector<std::pair<std::string, double>> statics;
};

/// Principal components of the draw columns, one basis per horizon hour.
struct QraPca {
    std::vector<Eigen::VectorXd> mean;        // per horizon, S
    std::vector<Eigen::MatrixXd> components;  // per horizon, S x k
    std::vector<double> explained;            // per horizon, retained variance fraction
    [[nodiscard]] bool empty() const { return components.empty(); }
};

/// Per-horizon regression problems sharing one row per origin.
struct QraDesign {
    std::vector<Instant> origins;
    std::vector<Eigen::MatrixXd> X;          // per horizon, N x F_h
    Eigen::MatrixXd y;                       // N x H (NaN where unobserved)
    std::vector<std::vector<std::string>> columns;  // per horizon
    std::vector<std::size_t> draw_columns;   // per horizon: leading columns derived from draws
    int draws = 0;                           // ensemble size before subsetting
    QraPca pca;

    [[nodiscard]] std::size_t rows() const { return origins.size(); }
    [[nodiscard]] int horizon() const { return static_cast<int>(X.size()); }
};

/// Column order [draws | mean? | sd? | future-known covariates | statics].
/// With `use_pca` the draw block is replaced by principal-component scores:
/// fitted on these rows when `pca` is null, otherwise reusing `pca`.
/// Windows are matched to ensembles by origin; a missing or duplicate origin
/// throws Error naming it. Ensembles must share one size.
QraDesign build_design(const std::vector<EnsembleForecast>& ensembles, const std::vector<SampleWindow>& windows,
                       const QraDesignOptions& options, const QraPca* pca = nullptr);

/// Smallest k whose leading eigenvalues explain at least `pca_var` of the
/// total variance of `draws` (rows are observations).
std::pair<Eigen::VectorXd, Eigen::MatrixXd> fit_pca(const Eigen::MatrixXd& draws, double pca_var, double* explained = nullptr);

struct QraFitOptions {
    std::vector<double> levels{0.01, 0.1, 0.5, 0.9, 0.99};
    std::vector<double> lambda_grid{0.0, 1e-4, 1e-3};
    int n_epochs = 200;
    int batch_size = 512;
    double lr = 1e-4;
    int patience = 10;
    /// Trailing fraction of (chronologically ordered) rows used for lambda
    /// selection and early stopping.
    double holdout_fraction = 0.2;
    /// Keep every stride-th training row.
    int subsample_stride = 1;
    std::uint64_t seed = 1;
    bool parallel = true;
};

struct QraCoefficients {
    Eigen::VectorXd beta;
    double intercept = 0.0;
    double lambda = 0.0;
    double holdout_loss = 0.0;
    int epochs = 0;
    bool converged = false;
    /// Holdout pinball at each improvement of the kept iterate.
    std::vector<double> checkpoints;
};

struct QraModel {
    std::vector<double> levels;
    QraDesignOptions design;
    QraPca pca;
    int draws = 0;
    std::vector<std::vector<std::string>> columns;     // per horizon
    std::vector<std::vector<QraCoefficients>> coef;    // [horizon][level]
    std::vector<std::string> warnings;

    [[nodiscard]] int horizon() const { return static_cast<int>(coef.size()); }
};

/// Mean pinball loss of `pred` against `y`.
double mean_pinball(const Eigen::VectorXd& y, const Eigen::VectorXd& pred, double tau);

/// One pinball-LASSO problem: mini-batch subgradient steps on
/// mean rho_tau(y - X beta - b), soft-thresholding beta by lr * lambda after
/// each step, keeping the iterate with the best holdout pinball.
QraCoefficients fit_pinball_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::MatrixXd& Xh,
                                  const Eigen::VectorXd& yh, double tau, double lambda, const QraFitOptions& opt,
                                  const Eigen::VectorXd& beta0, std::uint64_t seed);

/// Fits every (horizon, level) pair, choosing lambda per pair on the holdout.
/// Throws DomainError on levels outside (0,1) or not strictly increasing and
/// Error when a horizon has fewer than 2 observed rows.
QraModel fit_quantile_lasso(const QraDesign& design, const QraFitOptions& opt);

/// Raw X beta + b per origin as (levels x horizon); no monotonicity repair.
std::vector<Eigen::MatrixXd> predict_quantiles(const QraModel& model, const QraDesign& design);

/// Isotonic repair per horizon, linear interpolation onto `targets`, then the
/// affine map value * scale + shift (inverse target standardization).
std::vector<QuantileForecast> finalize_quantiles(const std::vector<Eigen::MatrixXd>& raw,
                                                 const std::vector<Instant>& origins,
                                                 const std::vector<double>& levels,
                                                 const std::vector<double>& targets, double scale = 1.0,
                                                 double shift = 0.0);

nlohmann::json to_json(const QraModel& m);
QraModel qra_model_from_json(const nlohmann::json& j);

/// QRA settings of the `tiny-default` and `tiny-tuned` tables.
struct QraPreset {
    QraDesignOptions design;
    QraFitOptions fit;
    int mc_samples = 64;
    int uniform_levels = 200;
};
QraPreset qra_preset(const std::string& name);

}  // namespace epf
