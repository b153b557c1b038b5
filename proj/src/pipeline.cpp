#include "pate/pipeline.hpp"

#include "pate/error.hpp"

namespace pate {

Method plain_method(DiagnosticVariant variant) {
    return (variant == DiagnosticVariant::W || variant == DiagnosticVariant::WCov) ? Method::W : Method::WLS;
}

Method residualized_method(DiagnosticVariant variant) {
    switch (variant) {
    case DiagnosticVariant::W: return Method::WRes;
    case DiagnosticVariant::WLS: return Method::WLSRes;
    case DiagnosticVariant::WCov: return Method::WCov;
    case DiagnosticVariant::WLSCov: return Method::WLSCov;
    }
    return Method::WRes;
}

const EstimateResult& AnalysisResult::estimate(Method m) const {
    for (const auto& e : estimates) {
        if (e.method == m) return e;
    }
    throw Error(ErrorKind::InvalidInput, "analysis", "no estimate for method " + to_string(m));
}

namespace {

void require_valid(const ExperimentalSample& exp, const PopulationSample& pop) {
    const ValidationReport report = validate_pair(exp, pop);
    if (report.ok()) return;
    std::string msg;
    for (const auto& v : report.violations) msg += (msg.empty() ? "" : "; ") + v;
    throw Error(ErrorKind::InvalidInput, "validate_pair", msg);
}

}  // namespace

WeightFit fit_weights(const ExperimentalSample& exp, const PopulationSample& pop, WeightMethod method,
                      std::optional<double> cap) {
    const PopulationSample aligned = align_population(pop, exp.covariate_names);
    WeightFit out;
    switch (method) {
    case WeightMethod::Logistic: {
        out.selection = fit_logistic_selection(exp.covariates, aligned.covariates);
        out.weights = weights_from_selection(*out.selection, exp.covariates);
        break;
    }
    case WeightMethod::EntropyBalance:
        out.weights = entropy_balance(exp.covariates, population_means(aligned));
        break;
    case WeightMethod::Supplied:
        throw Error(ErrorKind::InvalidInput, "fit_weights", "supplied weights are not estimated");
    }
    if (cap) out.weights = cap_weights(out.weights, *cap);
    return out;
}

AnalysisResult run_analysis(const ExperimentalSample& exp, const PopulationSample& pop, const AnalysisSpec& spec,
                            const std::optional<Vector>& supplied_weights) {
    require_valid(exp, pop);
    const PopulationSample aligned = align_population(pop, exp.covariate_names);
    AnalysisResult r;

    if (supplied_weights) {
        r.weights = make_weight_vector(*supplied_weights, WeightMethod::Supplied);
        if (spec.weight_cap) r.weights = cap_weights(r.weights, *spec.weight_cap);
    } else {
        WeightFit fit = fit_weights(exp, aligned, spec.weight_method, spec.weight_cap);
        r.weights = std::move(fit.weights);
        r.selection = std::move(fit.selection);
    }
    r.moment_gaps = moment_gaps(r.weights.weights, exp.covariates, population_means(aligned));

    r.model = fit_residualizer(spec.residualizer, aligned);
    r.predicted = predict(r.model, exp);

    const Vector& w = r.weights.weights;
    const Matrix& extra = exp.adjust_covariates;
    r.estimates = estimate_all(exp, w, r.predicted, extra, spec.estimator);

    if (spec.run_diagnostics) {
        r.diagnostics = std::array<DiagnosticResult, 4>{
            pseudo_r2_weighted(exp, w, r.predicted),
            pseudo_r2_wls(exp, w, r.predicted, extra),
            pseudo_r2_covariate_crossfit(exp, w, r.predicted, Matrix(exp.size(), 0), spec.crossfit),
            pseudo_r2_covariate_crossfit(exp, w, r.predicted, extra, spec.crossfit),
        };
        for (std::size_t k = 0; k < kAllVariants.size(); ++k) (*r.diagnostics)[k].variant = kAllVariants[k];
    }
    if (spec.run_oracles) r.oracle = oracle_report(exp, w, r.predicted, extra);
    return r;
}

}  // namespace pate
