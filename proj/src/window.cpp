#include "epf/window.hpp"

#include "epf/error.hpp"

namespace epf {

std::vector<std::size_t> window_starts(const FeatureFrame& frame, const WindowOptions& opt, Interval range) {
    if (opt.stride != 1 && opt.stride != 24) throw DomainError("window stride must be 1 or 24");
    std::vector<std::size_t> out;
    if (frame.rows() == 0) return out;
    std::size_t first = 0;
    std::size_t last = frame.rows();  // exclusive
    if (!range.empty()) {
        if (range.end <= frame.time.front() || range.begin > frame.time.back()) return out;
        if (range.begin > frame.time.front()) first = *frame.row_of(range.begin);
        if (range.end <= frame.time.back()) last = *frame.row_of(range.end);
    }
    const std::size_t len = static_cast<std::size_t>(opt.context + opt.horizon);
    const auto stride = static_cast<std::size_t>(opt.stride);
    if (opt.targets_in_range) {
        const auto ctx = static_cast<std::size_t>(opt.context);
        if (first < ctx) first += (ctx - first + stride - 1) / stride * stride;
        first -= ctx;
    }
    for (std::size_t s = first; s + len <= last; s += stride) out.push_back(s);
    return out;
}

SampleWindow materialize(const FeatureFrame& frame, std::size_t start, const WindowOptions& opt) {
    const auto C = static_cast<Eigen::Index>(opt.context);
    const auto H = static_cast<Eigen::Index>(opt.horizon);
    const auto F = static_cast<Eigen::Index>(frame.width());
    if (start + static_cast<std::size_t>(C + H) > frame.rows()) throw Error("window exceeds frame");

    SampleWindow w;
    w.origin = frame.time[start + static_cast<std::size_t>(C) - 1] + Hours{1};
    w.inputs.resize(C, F);
    w.horizon.setZero(H, F);
    w.target.resize(H);
    w.known_mask.setConstant(C + H, F, true);
    for (Eigen::Index j = 0; j < F; ++j) {
        const auto& col = frame.columns[static_cast<std::size_t>(j)];
        w.feature_names.push_back(col.name);
        w.roles.push_back(col.role);
        const double* v = col.values.data() + start;
        for (Eigen::Index i = 0; i < C; ++i) w.inputs(i, j) = v[i];
        if (is_future_known(col.role)) {
            for (Eigen::Index i = 0; i < H; ++i) w.horizon(i, j) = v[C + i];
        } else {
            for (Eigen::Index i = 0; i < H; ++i) w.known_mask(C + i, j) = false;
        }
        if (col.role == FeatureRole::Target)
            for (Eigen::Index i = 0; i < H; ++i) w.target(i) = v[C + i];
    }
    return w;
}

WindowSet make_windows(const FeatureFrame& frame, const WindowOptions& opt, Interval range) {
    WindowSet out;
    const long available = range.empty() ? static_cast<long>(frame.rows()) : range.hours();
    if (available < opt.context + opt.horizon) {
        out.warnings.push_back("only " + std::to_string(available) + " hours available, need " +
                               std::to_string(opt.context + opt.horizon) + "; no windows emitted");
        return out;
    }
    for (std::size_t s : window_starts(frame, opt, range)) out.windows.push_back(materialize(frame, s, opt));
    return out;
}

SampleWindow apply_mask(SampleWindow w, double mask_value) {
    const Eigen::Index C = w.inputs.rows();
    const Eigen::Index from = std::max<Eigen::Index>(0, C - kMaskedHours);
    for (std::size_t j = 0; j < w.roles.size(); ++j) {
        if (w.roles[j] != FeatureRole::Market) continue;
        const auto jj = static_cast<Eigen::Index>(j);
        for (Eigen::Index i = from; i < C; ++i) {
            w.inputs(i, jj) = mask_value;
            w.known_mask(i, jj) = false;
        }
    }
    return w;
}

SampleWindow WindowIndex::get(std::size_t i) const {
    SampleWindow w = materialize(*frame, starts.at(i), options);
    return masked ? apply_mask(std::move(w)) : w;
}

Instant WindowIndex::origin(std::size_t i) const {
    return frame->time[starts.at(i) + static_cast<std::size_t>(options.context) - 1] + Hours{1};
}

WindowIndex index_windows(const FeatureFrame& frame, const WindowOptions& opt, Interval range, bool masked) {
    return WindowIndex{&frame, window_starts(frame, opt, range), opt, masked};
}

}  // namespace epf
