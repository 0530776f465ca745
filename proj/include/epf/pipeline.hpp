#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "epf/features.hpp"
#include "epf/ingest.hpp"
#include "epf/nhits.hpp"
#include "epf/qra.hpp"
#include "epf/scoring.hpp"
#include "epf/standardizer.hpp"

namespace epf {

/// Raw inputs of one bidding zone.
struct ZoneSeries {
    HourlySeries target;
    std::map<std::string, HourlySeries> covariates;
};

enum class EnsembleKind { McDropout, Swag };
std::string to_string(EnsembleKind k);
EnsembleKind parse_ensemble_kind(const std::string& s);

struct PipelineOptions {
    std::string preset = "tiny-default";
    NhitsConfig nhits;
    QraPreset qra;
    std::vector<FeatureGroup> groups;  ///< market groups on top of calendar features
    bool calendar = true;
    EnsembleKind ensemble = EnsembleKind::McDropout;
    int qra_stride = 1;                 ///< hours between QRA fitting windows (1 or 24)
    std::size_t max_train_windows = 0;  ///< evenly thinned donor/full training set; 0 keeps all
    std::uint64_t seed = 1;
    std::function<void(const std::string&)> log;

    /// NHITS and QRA settings of a named preset, seeded.
    static PipelineOptions from_preset(const std::string& name, std::uint64_t seed = 1);
};

/// Column list for a set of groups (calendar columns are added by the frame).
std::vector<std::string> pipeline_columns(const std::vector<FeatureGroup>& groups);

FeatureFrame make_frame(const ZoneSeries& z, const std::vector<std::string>& columns, const FrameOptions& opt);

/// Pooled statistics over the rows of every frame inside `train`.
Standardizer fit_pooled_standardizer(const std::vector<const FeatureFrame*>& frames, Interval train);

/// S-member ensembles in standardized units, one per window.
std::vector<EnsembleForecast> make_ensembles(const NhitsModel& model, const SwagState* swag, const WindowSource& windows,
                                             EnsembleKind kind, int samples, std::uint64_t seed);

/// value * std + mean of the target column.
EnsembleForecast unstandardize(EnsembleForecast f, const Standardizer& s, const std::string& target);
std::vector<Observation> observations(const WindowSource& windows, const Standardizer& s, const std::string& target);
std::vector<SampleWindow> collect(const WindowSource& src);

/// Concatenation of several sources, optionally thinned to at most `cap`
/// evenly spaced windows.
WindowSource concat_sources(std::vector<WindowSource> parts, std::size_t cap = 0);

/// Standardized frames, window indices and sources of one experiment.
/// Window indices point into `frames`, so the object is neither copied nor moved.
struct PreparedData {
    std::vector<std::string> columns;
    std::map<std::string, FeatureFrame> frames;  ///< standardized
    Standardizer standardizer;
    SplitSet set;
    std::string target;  ///< target column name
    WindowSource train;  ///< NHITS training windows
    WindowSource val;    ///< early stopping and model selection
    WindowSource qra;    ///< QRA fitting windows (validation period, qra_stride)
    WindowSource test;   ///< target-zone test days

    PreparedData() = default;
    PreparedData(const PreparedData&) = delete;
    PreparedData& operator=(const PreparedData&) = delete;
};

/// For `Full` only `zones.at(target_zone)` is used; otherwise every other
/// zone is a donor and the standardizer pools the donors' training rows.
std::unique_ptr<PreparedData> prepare_data(const std::map<std::string, ZoneSeries>& zones,
                                           const std::string& target_zone, const DatasetSplits& splits,
                                           SplitStrategy strategy, const FrameOptions& frame_options,
                                           const PipelineOptions& options);

struct TrainedNhits {
    NhitsModel model;
    SwagState swag;
    TrainReport report;

    [[nodiscard]] const SwagState* swag_or_null() const { return swag.collected() > 0 ? &swag : nullptr; }
};

TrainedNhits train_nhits_stage(const PreparedData& data, const PipelineOptions& options);

/// Ensembles (standardized) on the QRA windows, then the quantile-lasso head.
QraModel fit_qra_stage(const TrainedNhits& nhits, const PreparedData& data, const PipelineOptions& options);

/// Monotone EUR/MWh quantiles from standardized ensembles and their windows.
std::vector<QuantileForecast> predict_quantiles_eur(const QraModel& qra, const Standardizer& s, const std::string& target,
                                                    const std::vector<EnsembleForecast>& ensembles,
                                                    const std::vector<SampleWindow>& windows,
                                                    const PipelineOptions& options);

/// Inverse of `unstandardize`.
EnsembleForecast standardize_ensemble(EnsembleForecast f, const Standardizer& s, const std::string& target);

struct PipelineResult {
    NhitsModel model;
    SwagState swag;
    Standardizer standardizer;
    QraModel qra;
    TrainReport train;
    std::size_t train_windows = 0;
    std::vector<std::string> columns;
    std::vector<EnsembleForecast> test_ensembles;  ///< EUR/MWh
    std::vector<QuantileForecast> val_quantiles;   ///< EUR/MWh, daily validation origins
    std::vector<QuantileForecast> test_quantiles;  ///< EUR/MWh
    std::vector<Observation> val_obs;
    std::vector<Observation> test_obs;
    ScoreReport val_scores;
    ScoreReport test_scores;
    std::vector<std::string> warnings;
};

/// NHITS trained on the strategy's training windows (early stopping on
/// validation windows), ensembles on validation windows fit the QRA head,
/// which then forecasts the target zone's test days.
PipelineResult run_pipeline(const std::map<std::string, ZoneSeries>& zones, const std::string& target_zone,
                            const DatasetSplits& splits, SplitStrategy strategy, const FrameOptions& frame_options,
                            const PipelineOptions& options);

}  // namespace epf
