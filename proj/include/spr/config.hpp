#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spr/inference.hpp"
#include "spr/perturbation.hpp"
#include "spr/resilience.hpp"
#include "spr/smoother.hpp"

namespace spr {

/// Everything a run needs. Parsed from a flat JSON document whose keys are
/// listed in config_keys(); command-line flags override individual fields.
struct AnalysisConfig {
    std::optional<std::uint64_t> seed;
    ClassSpec class_spec;
    EstimateOptions estimate;
    BootstrapOptions bootstrap;
    SmootherConfig smoother;
    std::optional<GridSpec> grid;
    SetOptions set;
    std::size_t workers = 1;
    std::string output_dir;
    std::size_t curve_draws = 100;
    std::size_t curve_grid = 200;

    // simulate
    std::vector<int> settings;
    std::size_t replications = 1000;
    std::size_t oracle_replications = 10000;
    std::size_t n_a = 400;
    std::size_t n_b = 200;
    bool misspecified = true;
    bool study_a_structure = false;
    bool calibrated_smoother = true;
    ResampleScope simulation_scope = ResampleScope::BothStudies;

    /// Throws ConfigError when no seed was given by file or flag.
    Seed master_seed() const;
};

const std::vector<std::string>& config_keys();

/// Throws ConfigError on unknown keys, wrong types or out-of-range values.
AnalysisConfig parse_config(const nlohmann::json& doc);
AnalysisConfig load_config(const std::filesystem::path& path);

/// Re-checks the numeric constraints after flag overrides.
void validate(const AnalysisConfig& config);

/// Canonical echo of every field that affects results. Worker count and
/// output directory are left out so that outputs do not depend on them.
nlohmann::json echo(const AnalysisConfig& config);

} // namespace spr
