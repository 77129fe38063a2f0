#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spr/perturbation.hpp"
#include "spr/rng.hpp"
#include "spr/smoother.hpp"
#include "spr/study.hpp"

namespace spr {

/// Monte Carlo draws of the plug-in treatment effect under a perturbation class.
struct DeltaDistribution {
    std::vector<double> deltas;
    PerturbationClass class_used;
    Seed seed{0};

    std::size_t size() const { return deltas.size(); }
};

struct ResilienceReport {
    double p_hat = 0.0;
    double q_alpha_hat = 0.0;
    double alpha = 0.1;
    ClosedFormMoments closed_form;
    double p_closed = 0.0;
    double q_closed = 0.0;
};

struct Estimate {
    DeltaDistribution distribution;
    ResilienceReport report;
};

/// Difference of arm means; throws EmptyGroup.
double delta_hat(std::span<const double> mu1_values, std::span<const double> mu0_values);

/// Fraction of draws strictly below zero.
double resilience_probability(std::span<const double> deltas);
double resilience_probability(const DeltaDistribution& dist);

/// 1-based rank k of the alpha-quantile: the smallest k with k / J >= alpha.
std::size_t quantile_rank(std::size_t count, double alpha);

/// k-th smallest delta with k = quantile_rank(J, alpha) (left-continuous inverse ECDF).
double resilience_bound(std::span<const double> deltas, double alpha);
double resilience_bound(const DeltaDistribution& dist, double alpha);

/// Phi(-mu_B / sigma_B), with 1{mu_B < 0} when sigma_B = 0.
double closed_form_probability(const ClosedFormMoments& m);
/// mu_B + sigma_B Phi^{-1}(alpha).
double closed_form_bound(const ClosedFormMoments& m, double alpha);

/// Study A fits evaluated at the Study B surrogates. Built once per analysis.
struct AnalysisContext {
    std::array<SmoothedMean, 2> fits;
    std::array<std::vector<double>, 2> s_b;
    std::array<std::vector<double>, 2> mu_hat_b;
    std::array<std::vector<bool>, 2> extrapolated;

    std::size_t extrapolated_count() const;
};

AnalysisContext make_context(const StudyAData& study_a, const StudyBData& study_b, const SmootherConfig& smoother);
AnalysisContext make_context(const SmoothedMean& mu_hat0, const SmoothedMean& mu_hat1, std::span<const double> s_b0,
                             std::span<const double> s_b1);

struct EstimateOptions {
    std::size_t draws = 500;  // J
    double alpha = 0.1;
    std::size_t workers = 1;
};

/// Draws per rng substream. Draw j uses substream seed.child(j / kDrawBlock),
/// so results are identical for every worker count.
inline constexpr std::size_t kDrawBlock = 256;

/// J plug-in treatment effects from the two arm perturbations.
std::vector<double> draw_deltas(const std::array<ArmPerturbation, 2>& arms, std::size_t draws, Seed seed,
                                std::size_t workers);

std::array<ArmPerturbation, 2> make_perturbations(const AnalysisContext& context, const PerturbationClass& cls);

/// Full resilience estimate: J draws, p-hat, q-hat and the closed-form values.
Estimate estimate(const AnalysisContext& context, const PerturbationClass& cls, const EstimateOptions& options,
                  Seed seed);
Estimate estimate(const SmoothedMean& mu_hat0, const SmoothedMean& mu_hat1, std::span<const double> s_b0,
                  std::span<const double> s_b1, const PerturbationClass& cls, const EstimateOptions& options,
                  Seed seed);

/// Sampled conditional-mean curves for plotting, replaying the normals of the
/// first `count` draws of estimate() with the same seed.
struct ArmCurves {
    std::vector<double> grid;
    std::vector<double> fitted;               // mu-hat on the grid
    std::vector<std::vector<double>> draws;   // draws[j][k]: draw j at grid[k]
};

/// For the GP class the curve through the sampled values at the Study B
/// surrogates is the kriging interpolant m(grid) + K(grid, S_B) L^{-T} z.
std::array<ArmCurves, 2> sample_curves(const AnalysisContext& context, const PerturbationClass& cls, Seed seed,
                                       std::size_t count, std::size_t grid_size);

// ---------------------------------------------------------------------------
// Resilience set

struct GridAxis {
    double min = 0.0;
    double max = 1.0;
    std::size_t count = 50;
    bool log_spaced = true;

    std::vector<double> values() const;
};

/// GP: x = theta, y = sigma2. Basis classes: Sigma = diag(x, .., x, y, .., y),
/// the first ceil(d/2) entries x and the rest y.
struct GridSpec {
    GridAxis x;
    GridAxis y;
};

enum class SetMode { ClosedForm, MonteCarlo };

std::string to_string(SetMode mode);
SetMode parse_set_mode(const std::string& name);

struct SetOptions {
    double alpha = 0.1;
    SetMode mode = SetMode::ClosedForm;
    std::size_t draws = 10000;  // Monte Carlo mode only
    std::size_t workers = 1;
    double relative_tolerance = 1e-4;
};

struct GridPoint {
    double x = 0.0;
    double y = 0.0;
    double q_alpha = 0.0;
    bool member = false;
};

struct BoundaryPoint {
    double x = 0.0;
    double y = 0.0;
};

struct ResilienceSet {
    ClassFamily family = ClassFamily::GaussianProcess;
    double alpha = 0.1;
    SetMode mode = SetMode::ClosedForm;
    std::vector<GridPoint> grid;
    std::vector<BoundaryPoint> boundary;  // ordered by x; empty when no sign change in range
};

/// Axis names used in output files ("theta"/"sigma2" or "sigma11_sq"/"sigma22_sq").
std::array<std::string, 2> axis_names(ClassFamily family);

/// Replaces the free parameters of `base` by grid coordinates (x, y).
PerturbationClass class_at(const PerturbationClass& base, double x, double y);

/// Grid classification plus a boundary found by bisection in y on every x
/// line. `base` fixes the family and any Study-A constants.
ResilienceSet resilience_set(const AnalysisContext& context, const PerturbationClass& base, const GridSpec& grid,
                             const SetOptions& options, Seed seed);

} // namespace spr
