#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "spr/inference.hpp"
#include "spr/perturbation.hpp"
#include "spr/resilience.hpp"
#include "spr/rng.hpp"
#include "spr/smoother.hpp"
#include "spr/study.hpp"

namespace spr::sim {

struct NormalLaw {
    double mean = 0.0;
    double variance = 1.0;
};

enum class MeanShape { Linear, ShiftedSquare, Trigonometric };

/// True conditional mean m(s). Linear: a s + b. ShiftedSquare: (s - a)^2 + b.
/// Trigonometric: b + a (sin s + cos s).
struct MeanFunction {
    MeanShape shape = MeanShape::Linear;
    double a = 0.0;
    double b = 0.0;

    double operator()(double s) const;
};

/// Published reference values of one row of the simulation tables.
struct PublishedReference {
    double truth_p = 0.0;
    double estimate_p = 0.0;
    double ese_p = 0.0;
    double ase_p = 0.0;
    double truth_q = 0.0;
    double estimate_q = 0.0;
    double ese_q = 0.0;
    double ase_q = 0.0;
};

struct SimulationSetting {
    int id = 0;
    std::string description;
    std::array<NormalLaw, 2> surrogate_a;
    std::array<NormalLaw, 2> surrogate_b;
    std::array<MeanFunction, 2> m;
    /// Class used both to generate Study B conditional means and, unless
    /// overridden, to estimate.
    ClassSpec class_truth;
    double noise_variance = 1.0;  // v0^2 = v1^2
    PublishedReference published;
};

/// Settings 1-9. Throws ConfigError for an unknown id.
const SimulationSetting& setting(int id);
std::vector<int> setting_ids();

/// A deliberately mismatched estimator for one setting.
struct Misspecification {
    int setting_id = 0;
    ClassSpec estimator;
    PublishedReference published;
};

/// The three misspecification runs (settings 2, 4, 9).
const std::vector<Misspecification>& misspecifications();
const Misspecification* misspecification_for(int setting_id);

struct GenerationOptions {
    std::size_t n_a = 400;  // per arm
    std::size_t n_b = 200;  // per arm
    /// Add a GP deviation to the Study A outcomes of GP settings.
    bool study_a_structure = false;
    SmootherConfig smoother{std::nullopt, calibrated_simulation_bandwidth(), {}};
};

/// Study B outcomes and their noiseless conditional means. Only oracles read this.
struct HiddenOutcomes {
    /// mu-hat at the Study B surrogates: the centre of the generated means.
    std::array<std::vector<double>, 2> centers;
    std::array<std::vector<double>, 2> conditional_means;
    std::array<std::vector<double>, 2> outcomes;
};

struct GeneratedData {
    StudyAData study_a;
    StudyBData study_b;
    HiddenOutcomes hidden;
};

GeneratedData generate_setting(const SimulationSetting& setting, const GenerationOptions& options, Seed seed);

struct OracleResult {
    double p0 = 0.0;
    double q_alpha = 0.0;
    /// Closed-form probability averaged over data generations.
    double mean_p_closed = 0.0;
    /// Monte Carlo standard error of p0.
    double mc_se = 0.0;
    std::size_t replications = 0;
};

/// Brute-force truth: fraction of full data generations whose Study B
/// conditional means give Delta_B < 0, and the pooled alpha-quantile of Delta_B.
OracleResult true_p0_oracle(const SimulationSetting& setting, const GenerationOptions& options,
                            std::size_t replications, double alpha, Seed seed, std::size_t workers = 1);

struct HarnessConfig {
    std::size_t replications = 1000;  // R
    std::size_t oracle_replications = 10000;
    GenerationOptions generation;
    EstimateOptions estimate;
    /// Both studies are resampled: the replication spread includes Study A refits.
    BootstrapOptions bootstrap{200, ResampleScope::BothStudies};
    std::size_t workers = 1;
    /// Abort when more than this fraction of replications fail.
    double max_failure_fraction = 0.01;
};

/// One run: a setting estimated with a class (its own unless overridden).
struct StudyRun {
    int setting_id = 0;
    std::optional<ClassSpec> estimator;

    bool misspecified() const { return estimator.has_value(); }
};

struct SummaryColumn {
    double truth = 0.0;
    double published_truth = 0.0;
    double published_estimate = 0.0;
    double mean = 0.0;
    double truth_minus_estimate = 0.0;
    double ese = 0.0;
    double ase = 0.0;
    double lower = 0.0;  // 2.5th percentile of estimates
    double upper = 0.0;  // 97.5th percentile
    double published_ese = 0.0;
    double published_ase = 0.0;
};

struct ReplicationOutcome {
    bool failed = false;
    std::string failure;
    double p_hat = 0.0;
    double q_alpha_hat = 0.0;
    double p_closed = 0.0;
    double q_closed = 0.0;
    double se_p = 0.0;
    double se_q = 0.0;
};

struct SettingRow {
    int setting_id = 0;
    std::string description;
    ClassFamily algorithm = ClassFamily::GaussianProcess;
    bool misspecified = false;
    SummaryColumn p;
    SummaryColumn q;
    double mean_p_closed = 0.0;
    double oracle_mean_p_closed = 0.0;
    double oracle_mc_se = 0.0;
    std::size_t failures = 0;
    std::vector<ReplicationOutcome> replications;
};

struct SimulationReport {
    std::vector<SettingRow> rows;
    std::size_t replications = 0;
    std::size_t oracle_replications = 0;
};

/// Runs every requested setting: data generation, estimate and bootstrap per
/// replication, plus the truth oracle per distinct setting. Deterministic in
/// (config, seed) for any worker count.
SimulationReport run_study(const std::vector<StudyRun>& runs, const HarnessConfig& config, Seed seed);

/// Matched runs for `ids` followed by the misspecification runs among them.
std::vector<StudyRun> standard_runs(const std::vector<int>& ids, bool include_misspecified);

} // namespace spr::sim
