#pragma once

#include <array>
#include <string>
#include <vector>

#include "spr/perturbation.hpp"
#include "spr/resilience.hpp"
#include "spr/smoother.hpp"
#include "spr/study.hpp"

namespace spr {

enum class ResampleScope { StudyBOnly, BothStudies };

std::string to_string(ResampleScope scope);
ResampleScope parse_resample_scope(const std::string& name);

struct BootstrapOptions {
    std::size_t replicates = 200;  // B
    ResampleScope scope = ResampleScope::StudyBOnly;
    /// Reuse the point estimate's function draws in every replicate. Off by
    /// default: replicates then carry the same Monte Carlo noise as the
    /// point estimate they are compared against.
    bool common_random_numbers = false;
    std::size_t max_retries = 10;
    std::size_t workers = 1;
};

struct BootstrapReplicate {
    double p_hat = 0.0;
    double q_alpha_hat = 0.0;
};

struct BootstrapResult {
    double se_p = 0.0;
    double se_q = 0.0;
    std::vector<BootstrapReplicate> replicates;
    std::size_t replicate_count = 0;
    ResampleScope scope = ResampleScope::StudyBOnly;
};

/// Seed of the point estimate's function draws derived from an analysis master seed.
Seed point_estimate_seed(Seed master);

/// Nonparametric bootstrap standard errors of p-hat and q-hat. Arms are
/// resampled with replacement within arm; Study A is refit when resampled.
/// Replicate b uses substreams derived from (master, b) only.
BootstrapResult bootstrap(const StudyAData& study_a, const StudyBData& study_b, const ClassSpec& spec,
                          const SmootherConfig& smoother, const EstimateOptions& estimate_options,
                          const BootstrapOptions& options, Seed master);

/// Sample standard deviation of a column of replicate values.
double replicate_sd(const std::vector<double>& values);

struct PreconditionReport {
    double delta_sb_hat = 0.0;
    std::array<bool, 2> study_a_nonempty{false, false};
    std::array<bool, 2> study_b_nonempty{false, false};
    /// Fraction of Study B surrogates outside the Study A range of their arm.
    double extrapolation_fraction = 0.0;
    std::vector<std::string> warnings;
};

/// Data checks for the identification assumptions; never throws.
PreconditionReport check_preconditions(const StudyAData& study_a, const StudyBData& study_b);

} // namespace spr
