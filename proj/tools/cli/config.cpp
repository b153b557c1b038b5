#include "config.hpp"

#include "pate/error.hpp"
#include "pate/rng.hpp"

#include <fstream>
#include <set>

namespace pate::cli {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::InvalidInput, "load_config", what); }

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) bad("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
T read(const Json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        bad(std::string("key '") + key + "' has the wrong type");
    }
}

OutcomeKind parse_outcome_kind(const std::string& s) {
    if (s == "same-measure") return OutcomeKind::SameMeasure;
    if (s == "proxy") return OutcomeKind::Proxy;
    bad("outcome_kind must be same-measure or proxy");
}

FitSubset parse_fit_subset(const std::string& s) {
    if (s == "all-population") return FitSubset::AllPopulation;
    if (s == "population-controls") return FitSubset::PopulationControls;
    bad("fit_subset must be all-population or population-controls");
}

}  // namespace

std::optional<WeightMethod> parse_weight_method(const std::string& text) {
    if (text == "ebal" || text == "entropy-balance") return WeightMethod::EntropyBalance;
    if (text == "logistic") return WeightMethod::Logistic;
    return std::nullopt;
}

RunConfig config_from_json(const Json& j) {
    if (!j.is_object()) bad("configuration must be a JSON object");
    reject_unknown(j,
                   {"experiment", "population", "roles", "adjust_covariates", "population_outcome", "outcome_kind",
                    "weights", "weight_cap", "residualizer", "diagnostics", "estimators", "level", "seed", "simulate"},
                   "configuration");
    RunConfig c;
    c.experiment = read<std::string>(j, "experiment", "");
    c.population = read<std::string>(j, "population", "");

    if (j.contains("roles")) {
        if (!j.at("roles").is_object()) bad("roles must map column names to roles");
        for (const auto& [column, role] : j.at("roles").items()) {
            if (!role.is_string()) bad("role of column '" + column + "' must be a string");
            const auto r = parse_role(role.get<std::string>());
            if (!r) bad("unknown role '" + role.get<std::string>() + "' for column '" + column + "'");
            c.roles.roles.emplace_back(column, *r);
        }
    }
    c.roles.adjust_columns = read<Names>(j, "adjust_covariates", {});
    if (j.contains("population_outcome") && !j.at("population_outcome").is_null()) {
        c.roles.population_outcome = read<std::string>(j, "population_outcome", "");
    }
    c.roles.outcome_kind = parse_outcome_kind(read<std::string>(j, "outcome_kind", "same-measure"));

    const auto wm = parse_weight_method(read<std::string>(j, "weights", "ebal"));
    if (!wm) bad("weights must be ebal or logistic");
    c.weights = *wm;
    if (j.contains("weight_cap") && !j.at("weight_cap").is_null()) c.weight_cap = read<double>(j, "weight_cap", 0.0);

    if (j.contains("residualizer")) {
        const Json& r = j.at("residualizer");
        reject_unknown(r, {"learner", "features", "folds", "fit_subset", "penalty_grid"}, "residualizer");
        const auto l = parse_learner(read<std::string>(r, "learner", "ols-int"));
        if (!l) bad("unknown residualizer learner");
        c.learner = *l;
        c.features = read<Names>(r, "features", {});
        c.folds = read<int>(r, "folds", 5);
        c.fit_subset = parse_fit_subset(read<std::string>(r, "fit_subset", "all-population"));
        c.penalty_grid = read<std::vector<double>>(r, "penalty_grid", {});
    }
    if (j.contains("diagnostics")) {
        const Json& d = j.at("diagnostics");
        reject_unknown(d, {"splits", "literal_direction", "cv_r2_threshold"}, "diagnostics");
        c.splits = read<int>(d, "splits", 0);
        c.literal_direction = read<bool>(d, "literal_direction", false);
        c.cv_r2_threshold = read<double>(d, "cv_r2_threshold", 0.5);
    }
    if (j.contains("estimators")) {
        const Json& e = j.at("estimators");
        reject_unknown(e, {"lin_interactions"}, "estimators");
        c.lin_interactions = read<bool>(e, "lin_interactions", false);
    }
    c.level = read<double>(j, "level", 0.95);
    c.seed = read<std::uint64_t>(j, "seed", 1);

    if (j.contains("simulate")) {
        const Json& s = j.at("simulate");
        reject_unknown(s,
                       {"scenarios", "beta_s", "n", "population_size", "reps", "p_treat", "alpha_tau", "noise_sd",
                        "pool_factor", "bernoulli_sampling", "weights"},
                       "simulate");
        SimulateSettings& t = c.simulate;
        t.scenarios = read<std::vector<int>>(s, "scenarios", t.scenarios);
        t.beta_s = read<std::vector<double>>(s, "beta_s", t.beta_s);
        t.n = read<std::vector<Index>>(s, "n", t.n);
        t.population_size = read<Index>(s, "population_size", t.population_size);
        t.reps = read<int>(s, "reps", t.reps);
        t.p_treat = read<double>(s, "p_treat", t.p_treat);
        t.alpha_tau = read<double>(s, "alpha_tau", t.alpha_tau);
        t.noise_sd = read<double>(s, "noise_sd", t.noise_sd);
        t.pool_factor = read<int>(s, "pool_factor", t.pool_factor);
        t.bernoulli_sampling = read<bool>(s, "bernoulli_sampling", t.bernoulli_sampling);
        const auto sw = parse_sim_weights(read<std::string>(s, "weights", "ebal"));
        if (!sw) bad("simulate.weights must be ebal, logistic or true");
        t.weights = *sw;
    }

    if (!(c.level > 0.0 && c.level < 1.0)) bad("level must lie in (0, 1)");
    if (c.splits < 0) bad("diagnostics.splits must be >= 1 (0 selects the default rule)");
    if (c.folds < 2) bad("residualizer.folds must be >= 2");
    for (const double g : c.penalty_grid) {
        if (!(g >= 0.0)) bad("penalty grid values must be >= 0");
    }
    if (c.weight_cap && !(*c.weight_cap >= 1.0)) bad("weight_cap must be >= 1");
    return c;
}

RunConfig load_config(const std::string& path) {
    if (path.empty()) return RunConfig{};
    std::ifstream in(path);
    if (!in) bad("cannot open config '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        bad("config '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

Json config_to_json(const RunConfig& c) {
    Json j;
    j["experiment"] = c.experiment;
    j["population"] = c.population;
    Json roles = Json::object();
    for (const auto& [column, role] : c.roles.roles) roles[column] = to_string(role);
    j["roles"] = roles;
    j["adjust_covariates"] = c.roles.adjust_columns;
    j["population_outcome"] = c.roles.population_outcome ? Json(*c.roles.population_outcome) : Json(nullptr);
    j["outcome_kind"] = c.roles.outcome_kind == OutcomeKind::Proxy ? "proxy" : "same-measure";
    j["weights"] = to_string(c.weights);
    j["weight_cap"] = c.weight_cap ? Json(*c.weight_cap) : Json(nullptr);
    j["residualizer"] = {{"learner", to_string(c.learner)},
                         {"features", c.features},
                         {"folds", c.folds},
                         {"fit_subset", to_string(c.fit_subset)},
                         {"penalty_grid", c.penalty_grid}};
    j["diagnostics"] = {{"splits", c.splits},
                        {"literal_direction", c.literal_direction},
                        {"cv_r2_threshold", c.cv_r2_threshold}};
    j["estimators"] = {{"lin_interactions", c.lin_interactions}};
    j["level"] = c.level;
    j["seed"] = c.seed;
    const SimulateSettings& s = c.simulate;
    j["simulate"] = {{"scenarios", s.scenarios},
                     {"beta_s", s.beta_s},
                     {"n", s.n},
                     {"population_size", s.population_size},
                     {"reps", s.reps},
                     {"p_treat", s.p_treat},
                     {"alpha_tau", s.alpha_tau},
                     {"noise_sd", s.noise_sd},
                     {"pool_factor", s.pool_factor},
                     {"bernoulli_sampling", s.bernoulli_sampling},
                     {"weights", to_string(s.weights)}};
    return j;
}

std::string config_hash(const RunConfig& c) { return fnv1a_hex(config_to_json(c).dump()); }

AnalysisSpec analysis_spec(const RunConfig& c) {
    AnalysisSpec spec;
    spec.weight_method = c.weights;
    spec.weight_cap = c.weight_cap;
    spec.residualizer.learner = c.learner;
    spec.residualizer.features = c.features;
    spec.residualizer.folds = c.folds;
    spec.residualizer.fit_subset = c.fit_subset;
    spec.residualizer.penalty_grid = c.penalty_grid;
    // Same stream derivation as replication 0 of a simulation with this seed.
    spec.residualizer.seed = stream_seed(c.seed, 0, 1);
    spec.crossfit.splits = c.splits;
    spec.crossfit.literal_direction = c.literal_direction;
    spec.crossfit.seed = stream_seed(c.seed, 0, 2);
    spec.estimator.level = c.level;
    spec.estimator.lin_interactions = c.lin_interactions;
    return spec;
}

std::vector<ScenarioConfig> scenario_cells(const RunConfig& c) {
    std::vector<ScenarioConfig> cells;
    for (const int scenario : c.simulate.scenarios) {
        // The sample-specific term vanishes in scenarios 1 and 2.
        const std::vector<double> betas = scenario <= 2 ? std::vector<double>{0.0} : c.simulate.beta_s;
        for (const double beta : betas) {
            for (const Index n : c.simulate.n) {
                ScenarioConfig s;
                s.scenario = scenario;
                s.beta_s = beta;
                s.n = n;
                s.population_size = c.simulate.population_size;
                s.reps = c.simulate.reps;
                s.p_treat = c.simulate.p_treat;
                s.alpha_tau = c.simulate.alpha_tau;
                s.noise_sd = c.simulate.noise_sd;
                s.seed = c.seed;
                s.pool_factor = c.simulate.pool_factor;
                s.bernoulli_sampling = c.simulate.bernoulli_sampling;
                s.weights = c.simulate.weights;
                s.learner = c.learner;
                s.diagnostic_splits = c.splits;
                s.literal_direction = c.literal_direction;
                s.level = c.level;
                cells.push_back(s);
            }
        }
    }
    return cells;
}

}  // namespace pate::cli
