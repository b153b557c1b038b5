#pragma once

#include "pate/csv.hpp"
#include "pate/pipeline.hpp"
#include "pate/report.hpp"
#include "pate/simulation.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pate::cli {

struct SimulateSettings {
    std::vector<int> scenarios{1};
    std::vector<double> beta_s{0.0};
    std::vector<Index> n{1000};
    Index population_size = 10000;
    int reps = 1000;
    double p_treat = 0.5;
    double alpha_tau = 1.0;
    double noise_sd = 1.0;
    int pool_factor = 10;
    bool bernoulli_sampling = false;
    SimWeights weights = SimWeights::EntropyBalance;
};

/// Everything that determines a report. Worker counts and output paths are
/// execution details and stay out of it.
struct RunConfig {
    std::string experiment;
    std::string population;
    RoleMap roles;
    WeightMethod weights = WeightMethod::EntropyBalance;
    std::optional<double> weight_cap;
    Learner learner = Learner::OlsInteractions;
    Names features;
    int folds = 5;
    FitSubset fit_subset = FitSubset::AllPopulation;
    std::vector<double> penalty_grid;
    int splits = 0;
    bool literal_direction = false;
    double cv_r2_threshold = 0.5;
    bool lin_interactions = false;
    double level = 0.95;
    std::uint64_t seed = 1;
    SimulateSettings simulate;
};

RunConfig config_from_json(const Json& j);
RunConfig load_config(const std::string& path);

/// The effective configuration with every default filled in.
Json config_to_json(const RunConfig& c);

/// FNV-1a hash of the canonical effective configuration.
std::string config_hash(const RunConfig& c);

AnalysisSpec analysis_spec(const RunConfig& c);

std::optional<WeightMethod> parse_weight_method(const std::string& text);

/// Scenario configurations for every (scenario, beta_s, n) cell.
std::vector<ScenarioConfig> scenario_cells(const RunConfig& c);

}  // namespace pate::cli
