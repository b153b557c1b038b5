#pragma once

#include "pate/pipeline.hpp"
#include "pate/simulation.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace pate {

using Json = nlohmann::json;

Json to_json(const EstimateResult& r);
Json to_json(const DiagnosticResult& d);
Json to_json(const FittedResidualizer& m);
Json to_json(const OracleReport& o);
Json to_json(const ProxyDecomposition& p);
Json to_json(const Triage& t);
Json weights_summary(const WeightVector& w, const Vector& moment_gaps);
Json to_json(const ScenarioConfig& c);
Json to_json(const SimulationSummary& s);

/// Full analysis report body: weights, residualizer, estimates (with the
/// matching diagnostic decision next to each residualized estimate),
/// diagnostics and oracle components.
Json analysis_json(const AnalysisResult& r);

/// 64-bit FNV-1a of the text, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

/// Rows (scenario, beta_s, n, estimator, mse, bias, se, coverage).
std::string simulation_csv_header();
std::string simulation_csv_rows(const SimulationSummary& s);

/// Rows (scenario, beta_s, n, variant, truth, tp, positives, tpr, tn, negatives, tnr, tpr_rep, tnr_rep).
std::string confusion_csv_header();
std::string confusion_csv_rows(const SimulationSummary& s);

}  // namespace pate
