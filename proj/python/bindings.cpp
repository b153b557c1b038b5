#include "pate/error.hpp"
#include "pate/oracles.hpp"
#include "pate/pipeline.hpp"
#include "pate/report.hpp"
#include "pate/rng.hpp"
#include "pate/simulation.hpp"
#include "pate/version.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;

namespace {

pate::Learner learner_from(const std::string& name) {
    const auto l = pate::parse_learner(name);
    if (!l) throw pate::Error(pate::ErrorKind::InvalidInput, "learner", "unknown learner '" + name + "'");
    return *l;
}

pate::Names default_names(pate::Index d, const std::string& prefix) {
    pate::Names names;
    for (pate::Index k = 0; k < d; ++k) names.push_back(prefix + std::to_string(k + 1));
    return names;
}

std::string analyze(const pate::Matrix& covariates, const pate::Vector& treatment, const pate::Vector& outcome,
                    const pate::Matrix& pop_covariates, const pate::Vector& pop_outcome,
                    std::optional<pate::Names> names, std::optional<pate::Matrix> adjust, const std::string& weights,
                    const std::string& learner, std::uint64_t seed, double level, int splits,
                    bool literal_direction, std::optional<pate::Vector> supplied_weights) {
    const pate::Names cov_names = names ? *names : default_names(covariates.cols(), "x");
    pate::Names adjust_names;
    pate::Matrix adjust_m;
    if (adjust) {
        adjust_m = *adjust;
        adjust_names = default_names(adjust_m.cols(), "adj");
    }
    const pate::ExperimentalSample exp =
        pate::make_experimental(cov_names, covariates, treatment, outcome, adjust_names, adjust_m);
    pate::PopulationSample pop;
    pop.covariate_names = cov_names;
    pop.covariates = pop_covariates;
    pop.outcome = pop_outcome;

    pate::AnalysisSpec spec;
    if (weights == "logistic") {
        spec.weight_method = pate::WeightMethod::Logistic;
    } else if (weights != "ebal") {
        throw pate::Error(pate::ErrorKind::InvalidInput, "weights", "weights must be ebal or logistic");
    }
    spec.residualizer.learner = learner_from(learner);
    spec.residualizer.seed = pate::stream_seed(seed, 0, 1);
    spec.crossfit.seed = pate::stream_seed(seed, 0, 2);
    spec.crossfit.splits = splits;
    spec.crossfit.literal_direction = literal_direction;
    spec.estimator.level = level;
    const pate::AnalysisResult r = pate::run_analysis(exp, pop, spec, supplied_weights);
    return pate::analysis_json(r).dump();
}

std::string simulate(int scenario, double beta_s, pate::Index n, pate::Index population_size, int reps,
                     std::uint64_t seed, int workers, const std::string& weights, const std::string& learner,
                     double p_treat, double alpha_tau, double noise_sd) {
    pate::ScenarioConfig c;
    c.scenario = scenario;
    c.beta_s = beta_s;
    c.n = n;
    c.population_size = population_size;
    c.reps = reps;
    c.seed = seed;
    c.workers = workers;
    const auto sw = pate::parse_sim_weights(weights);
    if (!sw) throw pate::Error(pate::ErrorKind::InvalidInput, "simulate", "unknown weights '" + weights + "'");
    c.weights = *sw;
    c.learner = learner_from(learner);
    c.p_treat = p_treat;
    c.alpha_tau = alpha_tau;
    c.noise_sd = noise_sd;
    pate::SimulationSummary s;
    {
        py::gil_scoped_release release;
        s = pate::run_scenario(c);
    }
    return pate::to_json(s).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Population average treatment effects with post-residualized weighting";
    m.attr("__version__") = std::string(pate::kVersion);

    py::register_exception<pate::Error>(m, "PateError", PyExc_ValueError);

    m.def("analyze", &analyze, py::arg("covariates"), py::arg("treatment"), py::arg("outcome"),
          py::arg("pop_covariates"), py::arg("pop_outcome"), py::arg("names") = py::none(),
          py::arg("adjust") = py::none(), py::arg("weights") = "ebal", py::arg("learner") = "ols-int",
          py::arg("seed") = 1, py::arg("level") = 0.95, py::arg("splits") = 0, py::arg("literal_direction") = false,
          py::arg("supplied_weights") = py::none(),
          "Full analysis; returns the report as a JSON string.");

    m.def(
        "entropy_balance",
        [](const pate::Matrix& x, const pate::Vector& target) { return pate::entropy_balance(x, target).weights; },
        py::arg("covariates"), py::arg("target"), "Entropy-balancing weights (mean one).");

    m.def(
        "logistic_weights",
        [](const pate::Matrix& exp_x, const pate::Matrix& pop_x) {
            const pate::SelectionModel model = pate::fit_logistic_selection(exp_x, pop_x);
            return py::make_tuple(pate::weights_from_selection(model, exp_x).weights, model.coefficients);
        },
        py::arg("exp_covariates"), py::arg("pop_covariates"),
        "Inverse-odds weights from a logistic sample-membership model; returns (weights, coefficients).");

    m.def(
        "efficiency_gain_weighted",
        [](const pate::Vector& y1, const pate::Vector& pred1, const pate::Vector& w1, const pate::Vector& y0,
           const pate::Vector& pred0, const pate::Vector& w0, double p) {
            return pate::efficiency_gain_weighted({y1, pred1, w1}, {y0, pred0, w0}, p);
        },
        py::arg("y1"), py::arg("pred1"), py::arg("w1"), py::arg("y0"), py::arg("pred0"), py::arg("w0"), py::arg("p"));

    m.def("relative_reduction", &pate::relative_reduction, py::arg("r2_0"), py::arg("r2_1"), py::arg("f"));

    m.def("simulate", &simulate, py::arg("scenario") = 1, py::arg("beta_s") = 0.0, py::arg("n") = 1000,
          py::arg("population_size") = 10000, py::arg("reps") = 100, py::arg("seed") = 1, py::arg("workers") = 1,
          py::arg("weights") = "ebal", py::arg("learner") = "ols-int", py::arg("p_treat") = 0.5,
          py::arg("alpha_tau") = 1.0, py::arg("noise_sd") = 1.0,
          "Monte Carlo summary for one scenario cell as a JSON string.");
}
