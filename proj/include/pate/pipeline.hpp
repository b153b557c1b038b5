#pragma once

#include "pate/diagnostics.hpp"
#include "pate/estimators.hpp"
#include "pate/oracles.hpp"
#include "pate/residualizer.hpp"
#include "pate/weights.hpp"

#include <array>
#include <optional>

namespace pate {

struct AnalysisSpec {
    WeightMethod weight_method = WeightMethod::EntropyBalance;
    std::optional<double> weight_cap;
    ResidualizerSpec residualizer;
    EstimatorOptions estimator;
    CrossfitOptions crossfit;
    bool run_diagnostics = true;
    bool run_oracles = true;
};

inline constexpr std::array<DiagnosticVariant, 4> kAllVariants = {DiagnosticVariant::W, DiagnosticVariant::WLS,
                                                                  DiagnosticVariant::WCov, DiagnosticVariant::WLSCov};

/// Plain and residualized estimator compared by each diagnostic variant.
Method plain_method(DiagnosticVariant variant);
Method residualized_method(DiagnosticVariant variant);

struct AnalysisResult {
    WeightVector weights;
    Vector moment_gaps;  // weighted experimental minus population covariate means
    std::optional<SelectionModel> selection;
    FittedResidualizer model;
    Vector predicted;
    std::array<EstimateResult, 7> estimates;  // kAllMethods order
    std::optional<std::array<DiagnosticResult, 4>> diagnostics;  // kAllVariants order
    std::optional<OracleReport> oracle;

    const EstimateResult& estimate(Method m) const;
};

/// Weights, residualizer, predictions, all estimators, diagnostics and
/// oracle components for one experiment/population pair. `supplied_weights`
/// replaces the weight estimation step. Throws InvalidInput listing every
/// validation violation.
AnalysisResult run_analysis(const ExperimentalSample& exp, const PopulationSample& pop, const AnalysisSpec& spec,
                            const std::optional<Vector>& supplied_weights = std::nullopt);

/// Estimated sampling weights only.
struct WeightFit {
    WeightVector weights;
    std::optional<SelectionModel> selection;
};

WeightFit fit_weights(const ExperimentalSample& exp, const PopulationSample& pop, WeightMethod method,
                      std::optional<double> cap = std::nullopt);

}  // namespace pate
