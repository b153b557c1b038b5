#include "pate/report.hpp"

#include "pate/csv.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace pate {

namespace {

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vector_json(const Vector& v) {
    Json a = Json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v(i)));
    return a;
}

std::string rate(int num, int den) {
    return den > 0 ? format_double(static_cast<double>(num) / den) : std::string("NA");
}

}  // namespace

Json to_json(const EstimateResult& r) {
    Json j;
    j["method"] = to_string(r.method);
    j["tau_hat"] = number_or_null(r.tau_hat);
    j["se"] = number_or_null(r.se);
    j["ci"] = {number_or_null(r.ci_lo), number_or_null(r.ci_hi)};
    j["level"] = r.level;
    j["n"] = r.n;
    j["n_treated"] = r.n_treated;
    j["n_control"] = r.n_control;
    if (r.beta_hat) j["beta_hat"] = number_or_null(*r.beta_hat);
    if (r.error) j["error"] = *r.error;
    return j;
}

Json to_json(const DiagnosticResult& d) {
    Json j;
    j["variant"] = to_string(d.variant);
    j["r2_0"] = d.r2_0 ? number_or_null(*d.r2_0) : Json(nullptr);
    j["recommend"] = d.recommend ? Json(*d.recommend) : Json(nullptr);
    j["splits_used"] = d.splits_used;
    if (!d.split_values.empty()) {
        Json a = Json::array();
        for (const double v : d.split_values) a.push_back(number_or_null(v));
        j["split_values"] = a;
    }
    if (d.undefined_reason) j["undefined_reason"] = *d.undefined_reason;
    if (d.minimal_norm) j["minimal_norm"] = true;
    return j;
}

Json to_json(const FittedResidualizer& m) {
    Json j;
    j["learner"] = to_string(m.learner);
    j["cv_mse"] = number_or_null(m.cv_mse);
    j["n_train"] = m.n_train;
    j["columns"] = m.columns;
    if (m.selected_penalty) j["selected_penalty"] = *m.selected_penalty;
    if (!m.stack_weights.empty()) {
        Json s = Json::object();
        for (const auto& [name, weight] : m.stack_weights) s[name] = weight;
        j["stack_weights"] = s;
    }
    j["degenerate_outcome"] = m.degenerate_outcome;
    j["rank_deficient"] = m.rank_deficient;
    return j;
}

Json to_json(const OracleReport& o) {
    return Json{{"gain_total", number_or_null(o.gain_total)},
                {"term_a", number_or_null(o.term_a)},
                {"term_b", number_or_null(o.term_b)},
                {"gain_weighted", number_or_null(o.gain_weighted)},
                {"asy_var_weighted", number_or_null(o.asy_var_weighted)},
                {"r2_0", number_or_null(o.r2_0)},
                {"r2_1", number_or_null(o.r2_1)},
                {"xi", number_or_null(o.xi)},
                {"f", number_or_null(o.f)},
                {"relative_reduction", number_or_null(o.relative_reduction)}};
}

Json to_json(const ProxyDecomposition& p) {
    return Json{{"measure_gap_var", number_or_null(p.measure_gap_var)},
                {"prediction_err_var", number_or_null(p.prediction_err_var)}};
}

Json to_json(const Triage& t) {
    return Json{{"cv_r2", number_or_null(t.cv_r2)},
                {"low_cv_error", t.low_cv_error},
                {"low_r2", t.low_r2},
                {"external_validity_warning", t.external_validity_warning}};
}

Json weights_summary(const WeightVector& w, const Vector& moment_gaps) {
    return Json{{"method", to_string(w.method)},
                {"ess", w.ess},
                {"max_weight", w.max_weight()},
                {"capped", w.capped},
                {"moment_gaps", vector_json(moment_gaps)}};
}

Json analysis_json(const AnalysisResult& r) {
    Json j;
    j["weights"] = weights_summary(r.weights, r.moment_gaps);
    if (r.selection) {
        j["weights"]["selection_model"] = {{"coefficients", vector_json(r.selection->coefficients)},
                                           {"converged", r.selection->converged},
                                           {"iterations", r.selection->iterations}};
    }
    j["residualizer"] = to_json(r.model);
    Json estimates = Json::array();
    for (const auto& e : r.estimates) {
        Json ej = to_json(e);
        if (r.diagnostics) {
            for (std::size_t v = 0; v < kAllVariants.size(); ++v) {
                if (residualized_method(kAllVariants[v]) == e.method) {
                    const auto& d = (*r.diagnostics)[v];
                    ej["recommend"] = d.recommend ? Json(*d.recommend) : Json(nullptr);
                }
            }
        }
        estimates.push_back(ej);
    }
    j["estimates"] = estimates;
    if (r.diagnostics) {
        Json d = Json::array();
        for (const auto& x : *r.diagnostics) d.push_back(to_json(x));
        j["diagnostics"] = d;
    }
    if (r.oracle) j["oracle"] = to_json(*r.oracle);
    return j;
}

Json to_json(const ScenarioConfig& c) {
    return Json{{"scenario", c.scenario},
                {"beta_s", c.beta_s},
                {"n", c.n},
                {"population_size", c.population_size},
                {"reps", c.reps},
                {"p_treat", c.p_treat},
                {"alpha_tau", c.alpha_tau},
                {"noise_sd", c.noise_sd},
                {"seed", c.seed},
                {"pool_factor", c.pool_factor},
                {"bernoulli_sampling", c.bernoulli_sampling},
                {"weights", to_string(c.weights)},
                {"learner", to_string(c.learner)},
                {"diagnostic_splits", c.diagnostic_splits},
                {"literal_direction", c.literal_direction},
                {"level", c.level}};
}

Json to_json(const SimulationSummary& s) {
    Json j;
    j["config"] = to_json(s.config);
    j["pate_true"] = s.pate_true;
    j["reps_ok"] = s.reps_ok;
    j["failures"] = s.failures;
    if (!s.failure_messages.empty()) j["failure_messages"] = s.failure_messages;
    Json est = Json::array();
    for (std::size_t k = 0; k < s.estimators.size(); ++k) {
        const auto& e = s.estimators[k];
        est.push_back({{"estimator", to_string(e.method)},
                       {"mse", number_or_null(e.mse)},
                       {"bias", number_or_null(e.bias)},
                       {"se", number_or_null(e.se)},
                       {"se_mean", number_or_null(e.se_mean)},
                       {"coverage", number_or_null(e.coverage)},
                       {"mc_variance", number_or_null(s.mc_variance[k])},
                       {"reps_used", e.reps_used}});
    }
    j["estimators"] = est;
    Json conf = Json::array();
    for (const auto& c : s.confusion) {
        conf.push_back({{"variant", to_string(c.variant)},
                        {"truth_gain", c.truth_gain},
                        {"tp", c.tp},
                        {"positives", c.positives},
                        {"tpr", number_or_null(c.tpr())},
                        {"tn", c.tn},
                        {"negatives", c.negatives},
                        {"tnr", number_or_null(c.tnr())},
                        {"tp_rep", c.tp_rep},
                        {"positives_rep", c.positives_rep},
                        {"tn_rep", c.tn_rep},
                        {"negatives_rep", c.negatives_rep}});
    }
    j["diagnostic_confusion"] = conf;
    j["mean_oracle_gain"] = number_or_null(s.mean_oracle_gain);
    j["mean_ess"] = number_or_null(s.mean_ess);
    return j;
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string simulation_csv_header() { return "scenario,beta_s,n,estimator,mse,bias,se,coverage\n"; }

std::string simulation_csv_rows(const SimulationSummary& s) {
    std::ostringstream out;
    for (const auto& e : s.estimators) {
        out << s.config.scenario << ',' << format_double(s.config.beta_s) << ',' << s.config.n << ','
            << to_string(e.method) << ',' << format_double(e.mse) << ',' << format_double(e.bias) << ','
            << format_double(e.se) << ',' << format_double(e.coverage) << '\n';
    }
    return out.str();
}

std::string confusion_csv_header() {
    return "scenario,beta_s,n,variant,truth,tp,positives,tpr,tn,negatives,tnr,tpr_rep,tnr_rep\n";
}

std::string confusion_csv_rows(const SimulationSummary& s) {
    std::ostringstream out;
    for (const auto& c : s.confusion) {
        out << s.config.scenario << ',' << format_double(s.config.beta_s) << ',' << s.config.n << ','
            << to_string(c.variant) << ',' << (c.truth_gain ? "gain" : "loss") << ',' << c.tp << ',' << c.positives
            << ',' << rate(c.tp, c.positives) << ',' << c.tn << ',' << c.negatives << ',' << rate(c.tn, c.negatives)
            << ',' << rate(c.tp_rep, c.positives_rep) << ',' << rate(c.tn_rep, c.negatives_rep) << '\n';
    }
    return out.str();
}

}  // namespace pate
