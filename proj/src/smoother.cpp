#include "spr/smoother.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spr/error.hpp"

namespace spr {

double epanechnikov(double u) {
    return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
}

double sample_mean(std::span<const double> x) {
    double sum = 0.0;
    for (double v : x) sum += v;
    return sum / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = sample_mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

void GroupSample::validate() const {
    if (group != 0 && group != 1) throw SchemaError("group label must be 0 or 1");
    if (surrogates.empty()) throw SchemaError("group " + std::to_string(group) + " has no surrogates");
    if (outcomes && outcomes->size() != surrogates.size())
        throw SchemaError("surrogate/outcome length mismatch in group " + std::to_string(group));
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(surrogates.begin(), surrogates.end(), finite) ||
        (outcomes && !std::all_of(outcomes->begin(), outcomes->end(), finite)))
        throw SchemaError("non-finite value in group " + std::to_string(group));
}

double BandwidthRule::operator()(std::span<const double> surrogates) const {
    return scale * sample_sd(surrogates) * std::pow(static_cast<double>(surrogates.size()), -rate);
}

BandwidthRule calibrated_simulation_bandwidth() {
    return BandwidthRule{std::sqrt(5.0) * 1.06, 0.2};
}

SmoothedMean SmoothedMean::fit(const GroupSample& sample, std::optional<double> bandwidth,
                               BandwidthRule rule, FallbackPolicy fallback) {
    if (!sample.outcomes) throw MissingOutcomes("smoother fit requires outcomes");
    sample.validate();
    const auto& s = sample.surrogates;
    const auto& y = *sample.outcomes;
    if (s.size() < 2) throw DegenerateSample("smoother fit requires at least two observations");
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    if (*lo == *hi) throw DegenerateSample("all surrogates identical; spread is zero");
    if (bandwidth && !(*bandwidth > 0.0 && std::isfinite(*bandwidth)))
        throw ConfigError("bandwidth must be positive");

    SmoothedMean fitted;
    fitted.bandwidth_ = bandwidth ? *bandwidth : rule(s);
    if (!(fitted.bandwidth_ > 0.0)) throw DegenerateSample("default bandwidth is not positive");
    fitted.fallback_ = fallback;

    std::vector<std::size_t> order(s.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return s[a] < s[b]; });
    fitted.train_s_.reserve(s.size());
    fitted.train_y_.reserve(s.size());
    for (auto i : order) {
        fitted.train_s_.push_back(s[i]);
        fitted.train_y_.push_back(y[i]);
    }
    return fitted;
}

SmoothedMean fit_arm(const std::vector<double>& surrogates, const std::vector<double>& outcomes, int group,
                     const SmootherConfig& config) {
    GroupSample sample{surrogates, outcomes, group};
    return SmoothedMean::fit(sample, config.bandwidth, config.rule, config.fallback);
}

std::optional<double> SmoothedMean::window_average(double s, double h) const {
    auto first = std::lower_bound(train_s_.begin(), train_s_.end(), s - h);
    auto last = std::upper_bound(first, train_s_.end(), s + h);
    double num = 0.0;
    double den = 0.0;
    for (auto it = first; it != last; ++it) {
        const auto i = static_cast<std::size_t>(it - train_s_.begin());
        const double w = epanechnikov((*it - s) / h);
        num += w * train_y_[i];
        den += w;
    }
    if (den <= 0.0) return std::nullopt;
    return num / den;
}

double SmoothedMean::nearest_neighbor(double s) const {
    auto it = std::lower_bound(train_s_.begin(), train_s_.end(), s);
    if (it == train_s_.end()) return train_y_.back();
    auto i = static_cast<std::size_t>(it - train_s_.begin());
    if (i > 0 && s - train_s_[i - 1] <= train_s_[i] - s) --i;
    return train_y_[i];
}

SmoothedValue SmoothedMean::evaluate_flagged(double s) const {
    if (auto v = window_average(s, bandwidth_)) return {*v, false};
    double h = bandwidth_;
    for (int k = 0; k < fallback_.max_doublings; ++k) {
        h *= 2.0;
        if (auto v = window_average(s, h)) return {*v, true};
    }
    return {nearest_neighbor(s), true};
}

std::vector<double> SmoothedMean::evaluate(std::span<const double> points) const {
    std::vector<double> out;
    out.reserve(points.size());
    for (double s : points) out.push_back(evaluate(s));
    return out;
}

std::vector<SmoothedValue> SmoothedMean::evaluate_flagged(std::span<const double> points) const {
    std::vector<SmoothedValue> out;
    out.reserve(points.size());
    for (double s : points) out.push_back(evaluate_flagged(s));
    return out;
}

} // namespace spr
