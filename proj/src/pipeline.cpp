#include "epf/pipeline.hpp"

#include <algorithm>
#include <numeric>
#include <optional>

#include "epf/error.hpp"
#include "epf/isotonic.hpp"

namespace epf {

std::string to_string(EnsembleKind k) { return k == EnsembleKind::Swag ? "swag" : "mc-dropout"; }

EnsembleKind parse_ensemble_kind(const std::string& s) {
    if (s == "mc-dropout") return EnsembleKind::McDropout;
    if (s == "swag") return EnsembleKind::Swag;
    throw DomainError("unknown ensemble kind '" + s + "' (mc-dropout|swag)");
}

PipelineOptions PipelineOptions::from_preset(const std::string& name, std::uint64_t seed) {
    PipelineOptions o;
    o.preset = name;
    o.nhits = nhits_preset(name);
    o.nhits.seed = seed;
    o.qra = qra_preset(name);
    o.qra.fit.seed = seed;
    o.seed = seed;
    return o;
}

std::vector<std::string> pipeline_columns(const std::vector<FeatureGroup>& groups) { return columns_for_groups(groups); }

FeatureFrame make_frame(const ZoneSeries& z, const std::vector<std::string>& columns, const FrameOptions& opt) {
    return build_frame(z.target, z.covariates, columns, opt);
}

Standardizer fit_pooled_standardizer(const std::vector<const FeatureFrame*>& frames, Interval train) {
    if (frames.empty()) throw Error("standardizer: no frames");
    std::vector<std::string> names;
    std::vector<std::size_t> cols;
    const FeatureFrame& f0 = *frames.front();
    for (std::size_t j = 0; j < f0.width(); ++j) {
        if (f0.columns[j].role == FeatureRole::Calendar) continue;
        cols.push_back(j);
        names.push_back(f0.columns[j].name);
    }
    std::vector<std::pair<const FeatureFrame*, std::size_t>> rows;
    for (const FeatureFrame* f : frames) {
        if (f->names() != f0.names()) throw Error("standardizer: frames have different columns");
        for (std::size_t i = 0; i < f->rows(); ++i)
            if (train.contains(f->time[i])) rows.emplace_back(f, i);
    }
    Eigen::MatrixXd m(Eigen::Index(rows.size()), Eigen::Index(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c)
            m(Eigen::Index(r), Eigen::Index(c)) = rows[r].first->columns[cols[c]].values[rows[r].second];
    return Standardizer::fit(m, std::move(names));
}

std::vector<EnsembleForecast> make_ensembles(const NhitsModel& model, const SwagState* swag, const WindowSource& windows,
                                             EnsembleKind kind, int samples, std::uint64_t seed) {
    if (kind == EnsembleKind::Swag) {
        if (swag == nullptr || swag->collected() < 2) throw Error("swag ensembles need at least two collected iterates");
        return swag_ensembles(model, *swag, windows, samples, seed);
    }
    std::vector<EnsembleForecast> out;
    out.reserve(windows.size);
    for (std::size_t i = 0; i < windows.size; ++i) out.push_back(mc_dropout_ensemble(model, windows.get(i), samples, seed));
    return out;
}

EnsembleForecast unstandardize(EnsembleForecast f, const Standardizer& s, const std::string& target) {
    const std::size_t k = s.index_of(target);
    f.samples = (f.samples.array() * s.stdev()[k] + s.mean()[k]).matrix();
    return f;
}

std::vector<Observation> observations(const WindowSource& windows, const Standardizer& s, const std::string& target) {
    const std::size_t k = s.index_of(target);
    std::vector<Observation> out;
    out.reserve(windows.size);
    for (std::size_t i = 0; i < windows.size; ++i) {
        const SampleWindow w = windows.get(i);
        out.push_back({w.origin, (w.target.array() * s.stdev()[k] + s.mean()[k]).matrix()});
    }
    return out;
}

std::vector<SampleWindow> collect(const WindowSource& src) {
    std::vector<SampleWindow> out;
    out.reserve(src.size);
    for (std::size_t i = 0; i < src.size; ++i) out.push_back(src.get(i));
    return out;
}

WindowSource concat_sources(std::vector<WindowSource> parts, std::size_t cap) {
    std::vector<std::size_t> offsets{0};
    for (const auto& p : parts) offsets.push_back(offsets.back() + p.size);
    const std::size_t total = offsets.back();
    std::vector<std::size_t> pick(total);
    std::iota(pick.begin(), pick.end(), 0);
    if (cap > 0 && total > cap) {
        pick.resize(cap);
        for (std::size_t i = 0; i < cap; ++i) pick[i] = i * total / cap;
    }
    auto shared = std::make_shared<std::vector<WindowSource>>(std::move(parts));
    auto offs = std::make_shared<std::vector<std::size_t>>(std::move(offsets));
    auto picks = std::make_shared<std::vector<std::size_t>>(std::move(pick));
    return {picks->size(), [shared, offs, picks](std::size_t i) {
                const std::size_t g = (*picks)[i];
                const auto it = std::upper_bound(offs->begin(), offs->end(), g) - 1;
                const auto part = static_cast<std::size_t>(it - offs->begin());
                return (*shared)[part].get(g - *it);
            }};
}

EnsembleForecast standardize_ensemble(EnsembleForecast f, const Standardizer& s, const std::string& target) {
    const std::size_t k = s.index_of(target);
    f.samples = ((f.samples.array() - s.mean()[k]) / s.stdev()[k]).matrix();
    return f;
}

namespace {

WindowSource source_of(const WindowIndex& idx) {
    auto copy = std::make_shared<WindowIndex>(idx);
    return {copy->size(), [copy](std::size_t i) { return copy->get(i); }};
}

}  // namespace

std::unique_ptr<PreparedData> prepare_data(const std::map<std::string, ZoneSeries>& zones,
                                           const std::string& target_zone, const DatasetSplits& splits,
                                           SplitStrategy strategy, const FrameOptions& frame_options,
                                           const PipelineOptions& o) {
    if (!zones.count(target_zone)) throw Error("pipeline: no data for target zone " + target_zone);
    if (o.qra_stride != 1 && o.qra_stride != 24) throw DomainError("pipeline: qra_stride must be 1 or 24");
    auto d = std::make_unique<PreparedData>();
    d->columns = pipeline_columns(o.groups);
    FrameOptions fo = frame_options;
    fo.calendar = o.calendar;

    std::map<std::string, FeatureFrame> raw;
    for (const auto& [zone, z] : zones) {
        if (strategy == SplitStrategy::Full && zone != target_zone) continue;
        raw[zone] = make_frame(z, d->columns, fo);
        raw[zone].zone = zone;
    }
    std::vector<const FeatureFrame*> fit_frames;
    for (const auto& [zone, f] : raw)
        if (strategy == SplitStrategy::Full || zone != target_zone) fit_frames.push_back(&f);
    if (fit_frames.empty()) throw Error("pipeline: strategy " + to_string(strategy) + " needs at least one donor zone");
    d->standardizer = fit_pooled_standardizer(fit_frames, splits.train);
    for (const auto& [zone, f] : raw) d->frames[zone] = standardize(f, d->standardizer);
    d->target = d->frames.at(target_zone).columns.front().name;

    d->set = build_splits(splits, strategy, target_zone, d->frames);
    std::vector<WindowSource> train_parts, val_parts, qra_parts;
    std::optional<WindowSource> adaptation;
    const WindowOptions qra_opt{kContextHours, kHorizonHours, o.qra_stride, true};
    for (const auto& [zone, zw] : d->set.zones) {
        if (zw.train.size() > 0) {
            if (strategy != SplitStrategy::Full && zone == target_zone)
                adaptation = source_of(zw.train);
            else
                train_parts.push_back(source_of(zw.train));
        }
        if (zw.validation.size() > 0) {
            val_parts.push_back(source_of(zw.validation));
            qra_parts.push_back(source_of(index_windows(d->frames.at(zone), qra_opt, splits.validation)));
        }
    }
    d->train = concat_sources(train_parts, o.max_train_windows);
    if (adaptation) d->train = concat_sources({d->train, *adaptation});
    d->val = concat_sources(val_parts);
    d->qra = concat_sources(qra_parts);
    d->test = source_of(d->set.zones.at(target_zone).test);
    if (d->train.size == 0) throw Error("pipeline: no training windows for strategy " + to_string(strategy));
    if (d->qra.size < 2) throw Error("pipeline: not enough validation windows to fit QRA");
    return d;
}

TrainedNhits train_nhits_stage(const PreparedData& data, const PipelineOptions& o) {
    TrainedNhits t;
    const InputLayout layout = InputLayout::from_roles(data.train.get(0).roles);
    t.model = NhitsModel(o.nhits, layout);
    t.model.initialize(o.nhits.seed);
    SwagState* swag = nullptr;
    if (o.nhits.swag.enabled) {
        t.swag = SwagState(o.nhits.swag, Eigen::Index(t.model.parameter_count()));
        swag = &t.swag;
    }
    if (o.log)
        o.log("training NHITS: " + std::to_string(t.model.parameter_count()) + " parameters, " +
              std::to_string(data.train.size) + " training windows, " + std::to_string(data.val.size) +
              " validation windows");
    TrainOptions to;
    to.on_epoch = [&](int e, double tr, double va) {
        if (o.log) o.log("epoch " + std::to_string(e) + " train_mae " + std::to_string(tr) + " val_mae " + std::to_string(va));
    };
    t.report = nhits_train(t.model, data.train, data.val, swag, to);
    return t;
}

namespace {

std::uint64_t ensemble_seed(const PipelineOptions& o) { return o.seed ^ 0xE45EULL; }

}  // namespace

QraModel fit_qra_stage(const TrainedNhits& nhits, const PreparedData& data, const PipelineOptions& o) {
    const int S = o.qra.mc_samples;
    if (o.log) o.log("QRA: " + std::to_string(data.qra.size) + " fitting windows, " + std::to_string(S) + " draws each");
    const auto windows = collect(data.qra);
    const auto ens = make_ensembles(nhits.model, nhits.swag_or_null(), data.qra, o.ensemble, S, ensemble_seed(o));
    const QraDesign design = build_design(ens, windows, o.qra.design);
    QraModel m = fit_quantile_lasso(design, o.qra.fit);
    m.design = o.qra.design;
    return m;
}

std::vector<QuantileForecast> predict_quantiles_eur(const QraModel& qra, const Standardizer& s, const std::string& target,
                                                    const std::vector<EnsembleForecast>& ensembles,
                                                    const std::vector<SampleWindow>& windows, const PipelineOptions& o) {
    const QraDesign d = build_design(ensembles, windows, qra.design, qra.pca.empty() ? nullptr : &qra.pca);
    const auto raw = predict_quantiles(qra, d);
    const std::size_t k = s.index_of(target);
    auto out = finalize_quantiles(raw, d.origins, qra.levels, uniform_levels(o.qra.uniform_levels), s.stdev()[k], s.mean()[k]);
    for (const auto& q : out)
        if (!q.monotone()) throw NumericError("pipeline: crossing quantiles at " + format_instant(q.origin));
    return out;
}

PipelineResult run_pipeline(const std::map<std::string, ZoneSeries>& zones, const std::string& target_zone,
                            const DatasetSplits& splits, SplitStrategy strategy, const FrameOptions& frame_options,
                            const PipelineOptions& o) {
    const auto data = prepare_data(zones, target_zone, splits, strategy, frame_options, o);
    PipelineResult r;
    r.columns = data->columns;
    r.standardizer = data->standardizer;
    r.train_windows = data->train.size;

    TrainedNhits t = train_nhits_stage(*data, o);
    r.qra = fit_qra_stage(t, *data, o);
    r.warnings.insert(r.warnings.end(), r.qra.warnings.begin(), r.qra.warnings.end());

    const int S = o.qra.mc_samples;
    const SwagState* swag = t.swag_or_null();
    const auto val_windows = collect(data->val);
    const auto val_ens = make_ensembles(t.model, swag, data->val, o.ensemble, S, ensemble_seed(o));
    r.val_quantiles = predict_quantiles_eur(r.qra, r.standardizer, data->target, val_ens, val_windows, o);
    r.val_obs = observations(data->val, r.standardizer, data->target);
    r.val_scores = score_quantiles(r.val_quantiles, r.val_obs);

    const auto test_windows = collect(data->test);
    const auto test_ens = make_ensembles(t.model, swag, data->test, o.ensemble, S, ensemble_seed(o));
    r.test_quantiles = predict_quantiles_eur(r.qra, r.standardizer, data->target, test_ens, test_windows, o);
    for (const auto& e : test_ens) r.test_ensembles.push_back(unstandardize(e, r.standardizer, data->target));
    r.test_obs = observations(data->test, r.standardizer, data->target);
    r.test_scores = score_quantiles(r.test_quantiles, r.test_obs);
    if (o.log) o.log("test CRPS " + std::to_string(r.test_scores.mean("crps")));

    r.model = std::move(t.model);
    r.swag = std::move(t.swag);
    r.train = std::move(t.report);
    return r;
}

}  // namespace epf
