#pragma once

#include <optional>
#include <span>
#include <vector>

namespace spr {

enum class Kernel { Epanechnikov };

/// Epanechnikov kernel 0.75 (1 - u^2) on |u| <= 1.
double epanechnikov(double u);

/// Sample of one treatment arm. Outcomes are optional so that the same type
/// carries Study B arms.
struct GroupSample {
    std::vector<double> surrogates;
    std::optional<std::vector<double>> outcomes;
    int group = 0;

    /// Throws SchemaError on empty surrogates, length mismatch, non-finite values
    /// or a group label outside {0, 1}.
    void validate() const;
};

/// Default bandwidth h = scale * sd(S) * n^(-rate).
struct BandwidthRule {
    double scale = 1.06;
    double rate = 0.3;

    double operator()(std::span<const double> surrogates) const;
};

/// Bandwidth rule that reproduces the published simulation tables: the
/// Epanechnikov counterpart (same kernel variance) of the normal-reference
/// Gaussian bandwidth 1.06 sd n^(-1/5).
BandwidthRule calibrated_simulation_bandwidth();

/// How evaluate() behaves when no training point falls inside the kernel window.
struct FallbackPolicy {
    /// Number of local bandwidth doublings tried before giving up.
    int max_doublings = 10;
};

struct SmoothedValue {
    double value = 0.0;
    bool extrapolated = false;
};

/// Nadaraya-Watson estimate of E(Y | S = s) for one arm. Immutable after fit;
/// evaluation is const and thread-safe.
class SmoothedMean {
public:
    /// Fits the smoother. Nothing is precomputed beyond sorting the training
    /// pairs by surrogate.
    /// Throws MissingOutcomes, DegenerateSample (n < 2 or zero spread) or
    /// ConfigError for a non-positive bandwidth.
    static SmoothedMean fit(const GroupSample& sample, std::optional<double> bandwidth = std::nullopt,
                            BandwidthRule rule = {}, FallbackPolicy fallback = {});

    double bandwidth() const { return bandwidth_; }
    Kernel kernel() const { return Kernel::Epanechnikov; }
    const std::vector<double>& train_s() const { return train_s_; }
    const std::vector<double>& train_y() const { return train_y_; }

    SmoothedValue evaluate_flagged(double s) const;
    double evaluate(double s) const { return evaluate_flagged(s).value; }
    std::vector<double> evaluate(std::span<const double> points) const;
    std::vector<SmoothedValue> evaluate_flagged(std::span<const double> points) const;

private:
    SmoothedMean() = default;

    /// Weighted average over the window |S_i - s| <= h; nullopt when all weights vanish.
    std::optional<double> window_average(double s, double h) const;
    double nearest_neighbor(double s) const;

    std::vector<double> train_s_;  // sorted ascending
    std::vector<double> train_y_;  // aligned with train_s_
    double bandwidth_ = 0.0;
    FallbackPolicy fallback_;
};

/// Everything needed to fit both arms the same way.
struct SmootherConfig {
    std::optional<double> bandwidth;  // overrides the rule when set
    BandwidthRule rule;
    FallbackPolicy fallback;
};

SmoothedMean fit_arm(const std::vector<double>& surrogates, const std::vector<double>& outcomes, int group,
                     const SmootherConfig& config);

/// Sample mean and (n-1) standard deviation.
double sample_mean(std::span<const double> x);
double sample_sd(std::span<const double> x);

} // namespace spr
