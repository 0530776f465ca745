#include "epf/isotonic.hpp"

#include <algorithm>

#include "epf/error.hpp"

namespace epf {

std::vector<double> isotonic_repair(std::span<const double> y) {
    struct Block {
        double sum;
        double count;
        [[nodiscard]] double mean() const { return sum / count; }
    };
    std::vector<Block> blocks;
    blocks.reserve(y.size());
    for (double v : y) {
        blocks.push_back({v, 1.0});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
            const Block top = blocks.back();
            blocks.pop_back();
            blocks.back().sum += top.sum;
            blocks.back().count += top.count;
        }
    }
    std::vector<double> out;
    out.reserve(y.size());
    for (const auto& b : blocks) out.insert(out.end(), static_cast<std::size_t>(b.count), b.mean());
    return out;
}

std::vector<double> interpolate_levels(std::span<const double> levels, std::span<const double> values,
                                       std::span<const double> targets) {
    if (levels.empty() || levels.size() != values.size())
        throw DomainError("interpolate_levels: levels and values must be non-empty and equally long");
    std::vector<double> out;
    out.reserve(targets.size());
    const std::size_t Q = levels.size();
    for (double t : targets) {
        if (Q == 1 || t <= levels.front()) {
            out.push_back(values.front());
            continue;
        }
        if (t >= levels.back()) {
            out.push_back(values.back());
            continue;
        }
        const auto k = static_cast<std::size_t>(std::upper_bound(levels.begin(), levels.end(), t) - levels.begin());
        const double w = (t - levels[k - 1]) / (levels[k] - levels[k - 1]);
        const double lo = std::min(values[k - 1], values[k]);
        const double hi = std::max(values[k - 1], values[k]);
        out.push_back(std::clamp(values[k - 1] + w * (values[k] - values[k - 1]), lo, hi));
    }
    return out;
}

std::vector<double> uniform_levels(int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = (i + 0.5) / n;
    return out;
}

}  // namespace epf
