#pragma once

#include "pate/pipeline.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace pate {

enum class SimWeights { EntropyBalance, Logistic, True };

std::string to_string(SimWeights w);
std::optional<SimWeights> parse_sim_weights(const std::string& text);

struct ScenarioConfig {
    int scenario = 1;
    double beta_s = 0.0;
    Index n = 1000;
    Index population_size = 10000;
    int reps = 1000;
    double p_treat = 0.5;
    double alpha_tau = 1.0;
    double noise_sd = 1.0;
    std::uint64_t seed = 1;
    int pool_factor = 10;  // pool holds pool_factor * population_size units
    bool bernoulli_sampling = false;
    SimWeights weights = SimWeights::EntropyBalance;
    Learner learner = Learner::OlsInteractions;
    int diagnostic_splits = 0;  // 0: default rule
    bool literal_direction = false;
    double level = 0.95;
    int workers = 1;
};

/// Coefficients of the control potential outcome
/// b1 x1 + b2 x2 + g1 x1^2 + g2 sqrt|x2| + g3 x1 x2 + bs (1 - S)(a + b3 x1 + g4 x1 x2).
struct OutcomeModel {
    double b1 = 2.0, b2 = 1.0, b3 = 0.0;
    double g1 = 0.0, g2 = 0.0, g3 = 0.0, g4 = 0.0;
    double a = 0.0;
    double bs = 0.0;
};

OutcomeModel outcome_model(int scenario, double beta_s);

/// Covariance of (x1, x2, xs, xtau).
Matrix covariate_covariance();

inline const Names kSimCovariates = {"x1", "x2", "xs", "xtau"};
inline const Names kSimAdjust = {"x1", "x2"};

/// `count` draws of (x1, x2, xs, xtau), one per row.
Matrix draw_population(Index count, std::mt19937_64& rng);

struct SampleIndices {
    std::vector<Index> experimental;  // ascending
    std::vector<Index> population;  // ascending, disjoint from experimental
};

/// Experimental units drawn without replacement with probability
/// proportional to expit(xs) (or by independent thinning), population units
/// uniformly from the rest. Throws PoolTooSmall.
SampleIndices draw_samples(const Vector& xs, Index n, Index population_size, std::mt19937_64& rng,
                           bool bernoulli = false);

/// Control potential outcome given covariate rows, sample indicator and noise.
Vector control_outcome(const OutcomeModel& model, const Matrix& x, const Vector& in_sample, const Vector& noise);

struct Outcomes {
    Vector y;
    Vector y0;
    Vector y1;
    double pate_true = 0.0;
};

Outcomes generate_outcomes(const ScenarioConfig& config, const Matrix& x, const Vector& in_sample,
                           const Vector& treatment, std::mt19937_64& rng);

/// One replication's data: the experiment, the population sample and the
/// oracle sampling weights 1 / expit(xs).
struct SimulatedData {
    ExperimentalSample exp;
    PopulationSample pop;
    Vector true_weights;
    double pate_true = 0.0;
};

SimulatedData simulate_data(const ScenarioConfig& config, int rep);

/// Analysis settings used for every replication.
AnalysisSpec simulation_analysis_spec(const ScenarioConfig& config, int rep);

struct RepResult {
    bool ok = false;
    std::string error;
    std::array<double, 7> tau{};
    std::array<double, 7> se{};
    std::array<bool, 7> covered{};
    std::array<std::optional<bool>, 4> recommend{};
    double oracle_gain = 0.0;  // plug-in residualizing gain for the weighted estimator
    double ess = 0.0;
};

RepResult run_replication(const ScenarioConfig& config, int rep);

struct EstimatorSummary {
    Method method = Method::DiM;
    double mse = 0.0;
    double bias = 0.0;
    double se = 0.0;  // empirical sd of the estimates
    double se_mean = 0.0;  // mean reported SE
    double coverage = 0.0;
    int reps_used = 0;  // replications where the estimator was computed
};

struct Confusion {
    DiagnosticVariant variant = DiagnosticVariant::W;
    bool truth_gain = false;  // across-replication variance of the residualized estimator is lower
    int tp = 0, positives = 0, tn = 0, negatives = 0;
    // Alternative per-replication truth: residualized estimate closer to the PATE.
    int tp_rep = 0, positives_rep = 0, tn_rep = 0, negatives_rep = 0;

    double tpr() const;
    double tnr() const;
};

/// Decisions against cell-level truth; undefined decisions count as "do not
/// residualize".
Confusion diagnostic_confusion(DiagnosticVariant variant, const std::vector<std::optional<bool>>& decisions,
                               bool truth_gain);

struct SimulationSummary {
    ScenarioConfig config;
    double pate_true = 0.0;
    int reps_ok = 0;
    int failures = 0;
    std::vector<std::string> failure_messages;  // first few
    std::array<EstimatorSummary, 7> estimators{};
    std::array<Confusion, 4> confusion{};
    std::array<double, 7> mc_variance{};  // across-replication variance of each estimator
    double mean_oracle_gain = 0.0;
    double mean_ess = 0.0;

    const EstimatorSummary& of(Method m) const;
};

SimulationSummary summarize(const ScenarioConfig& config, const std::vector<RepResult>& reps);

/// Runs every replication (concurrently when config.workers > 1) and
/// aggregates in replication order.
SimulationSummary run_scenario(const ScenarioConfig& config);

}  // namespace pate
