#include "pate/simulation.hpp"

#include "pate/error.hpp"
#include "pate/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace pate {

std::string to_string(SimWeights w) {
    switch (w) {
    case SimWeights::EntropyBalance: return "ebal";
    case SimWeights::Logistic: return "logistic";
    case SimWeights::True: return "true";
    }
    return "ebal";
}

std::optional<SimWeights> parse_sim_weights(const std::string& text) {
    if (text == "ebal" || text == "entropy-balance") return SimWeights::EntropyBalance;
    if (text == "logistic") return SimWeights::Logistic;
    if (text == "true") return SimWeights::True;
    return std::nullopt;
}

OutcomeModel outcome_model(int scenario, double beta_s) {
    OutcomeModel m;
    switch (scenario) {
    case 1: break;
    case 2:
        m.g1 = 0.5;
        m.g2 = 3.0;
        m.g3 = 2.5;
        m.bs = 2.5;  // multiplies a zero term in this scenario
        break;
    case 3:
        m.b3 = -1.0;
        m.a = 0.5;
        m.bs = beta_s;
        break;
    case 4:
        m.b3 = -1.0;
        m.g1 = 0.5;
        m.g2 = 3.0;
        m.g3 = 2.5;
        m.g4 = 1.5;
        m.a = 0.5;
        m.bs = beta_s;
        break;
    default: throw Error(ErrorKind::InvalidInput, "outcome_model", "scenario must be 1, 2, 3 or 4");
    }
    return m;
}

Matrix covariate_covariance() {
    Matrix s(4, 4);
    s << 1.0, 0.0, 0.45, 0.5,
         0.0, 1.0, 0.0, 0.0,
         0.45, 0.0, 1.0, 0.9,
         0.5, 0.0, 0.9, 1.0;
    return s;
}

namespace {

const Matrix& covariance_factor() {
    static const Matrix factor = [] {
        Eigen::LLT<Matrix> llt(covariate_covariance());
        return Matrix(llt.matrixL());
    }();
    return factor;
}

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Matrix draw_population(Index count, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix z(count, 4);
    for (Index i = 0; i < count; ++i) {
        for (Index j = 0; j < 4; ++j) z(i, j) = normal(rng);
    }
    return z * covariance_factor().transpose();
}

SampleIndices draw_samples(const Vector& xs, Index n, Index population_size, std::mt19937_64& rng, bool bernoulli) {
    const Index pool = xs.size();
    if (n < 1 || population_size < 0) {
        throw Error(ErrorKind::InvalidInput, "draw_samples", "sample sizes must be positive");
    }
    if (n > pool) throw Error(ErrorKind::PoolTooSmall, "draw_samples", "experimental size exceeds pool");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    SampleIndices out;
    std::vector<char> taken(static_cast<std::size_t>(pool), 0);

    if (bernoulli) {
        double total = 0.0;
        for (Index i = 0; i < pool; ++i) total += expit(xs(i));
        for (Index i = 0; i < pool; ++i) {
            const double prob = std::min(1.0, static_cast<double>(n) * expit(xs(i)) / total);
            if (unif(rng) < prob) {
                out.experimental.push_back(i);
                taken[static_cast<std::size_t>(i)] = 1;
            }
        }
    } else {
        // Weighted sampling without replacement: the n largest log(u) / weight keys.
        std::vector<std::pair<double, Index>> keys(static_cast<std::size_t>(pool));
        for (Index i = 0; i < pool; ++i) keys[static_cast<std::size_t>(i)] = {std::log(unif(rng)) / expit(xs(i)), i};
        if (n < pool) {
            std::nth_element(keys.begin(), keys.begin() + n, keys.end(),
                             [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
        }
        for (Index k = 0; k < n; ++k) {
            out.experimental.push_back(keys[static_cast<std::size_t>(k)].second);
            taken[static_cast<std::size_t>(keys[static_cast<std::size_t>(k)].second)] = 1;
        }
        std::sort(out.experimental.begin(), out.experimental.end());
    }

    std::vector<Index> rest;
    rest.reserve(static_cast<std::size_t>(pool));
    for (Index i = 0; i < pool; ++i) {
        if (!taken[static_cast<std::size_t>(i)]) rest.push_back(i);
    }
    if (population_size > static_cast<Index>(rest.size())) {
        throw Error(ErrorKind::PoolTooSmall, "draw_samples", "pool too small for a disjoint population sample");
    }
    for (Index k = 0; k < population_size; ++k) {
        std::uniform_int_distribution<Index> pick(k, static_cast<Index>(rest.size()) - 1);
        std::swap(rest[static_cast<std::size_t>(k)], rest[static_cast<std::size_t>(pick(rng))]);
    }
    out.population.assign(rest.begin(), rest.begin() + population_size);
    std::sort(out.population.begin(), out.population.end());
    return out;
}

Vector control_outcome(const OutcomeModel& m, const Matrix& x, const Vector& in_sample, const Vector& noise) {
    Vector y(x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
        const double x1 = x(i, 0);
        const double x2 = x(i, 1);
        double v = m.b1 * x1 + m.b2 * x2 + m.g1 * x1 * x1 + m.g2 * std::sqrt(std::abs(x2)) + m.g3 * x1 * x2;
        v += m.bs * (1.0 - in_sample(i)) * (m.a + m.b3 * x1 + m.g4 * x1 * x2);
        y(i) = v + noise(i);
    }
    return y;
}

Outcomes generate_outcomes(const ScenarioConfig& config, const Matrix& x, const Vector& in_sample,
                           const Vector& treatment, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, config.noise_sd);
    Vector noise(x.rows());
    for (Index i = 0; i < x.rows(); ++i) noise(i) = config.noise_sd > 0.0 ? normal(rng) : 0.0;
    Outcomes o;
    o.y0 = control_outcome(outcome_model(config.scenario, config.beta_s), x, in_sample, noise);
    o.y1 = o.y0 + (x.col(3).array() + config.alpha_tau).matrix();
    o.y = o.y0 + treatment.cwiseProduct(o.y1 - o.y0);
    o.pate_true = config.alpha_tau;
    return o;
}

namespace {

void check_config(const ScenarioConfig& c) {
    if (c.scenario < 1 || c.scenario > 4) throw Error(ErrorKind::InvalidInput, "run_scenario", "scenario must be 1-4");
    if (!(c.p_treat > 0.0 && c.p_treat < 1.0)) throw Error(ErrorKind::InvalidInput, "run_scenario", "p_treat must lie in (0, 1)");
    if (c.reps < 1) throw Error(ErrorKind::InvalidInput, "run_scenario", "reps must be >= 1");
    if (c.n > c.population_size) throw Error(ErrorKind::InvalidInput, "run_scenario", "n must not exceed N");
    if (c.pool_factor < 1) throw Error(ErrorKind::InvalidInput, "run_scenario", "pool factor must be >= 1");
    if (!(c.noise_sd >= 0.0)) throw Error(ErrorKind::InvalidInput, "run_scenario", "noise_sd must be >= 0");
}

}  // namespace

SimulatedData simulate_data(const ScenarioConfig& config, int rep) {
    check_config(config);
    std::mt19937_64 rng(stream_seed(config.seed, static_cast<std::uint64_t>(rep)));
    const Matrix pool = draw_population(config.population_size * config.pool_factor, rng);
    const SampleIndices idx = draw_samples(pool.col(2), config.n, config.population_size, rng, config.bernoulli_sampling);

    const Matrix x_exp = linalg::take_rows(pool, idx.experimental);
    const Matrix x_pop = linalg::take_rows(pool, idx.population);
    const Index n = x_exp.rows();

    const Index n_treated = static_cast<Index>(std::llround(config.p_treat * static_cast<double>(n)));
    Vector treatment = Vector::Zero(n);
    treatment.head(n_treated).setOnes();
    std::shuffle(treatment.data(), treatment.data() + n, rng);

    const Outcomes exp_out = generate_outcomes(config, x_exp, Vector::Ones(n), treatment, rng);
    const Outcomes pop_out = generate_outcomes(config, x_pop, Vector::Zero(x_pop.rows()), Vector::Zero(x_pop.rows()), rng);

    SimulatedData d;
    d.exp = make_experimental(kSimCovariates, x_exp, treatment, exp_out.y, kSimAdjust, x_exp.leftCols(2));
    d.pop.covariate_names = kSimCovariates;
    d.pop.covariates = x_pop;
    d.pop.outcome = pop_out.y0;
    d.true_weights = (1.0 + (-x_exp.col(2).array()).exp()).matrix();
    d.pate_true = exp_out.pate_true;
    return d;
}

AnalysisSpec simulation_analysis_spec(const ScenarioConfig& config, int rep) {
    AnalysisSpec spec;
    spec.weight_method = config.weights == SimWeights::Logistic ? WeightMethod::Logistic : WeightMethod::EntropyBalance;
    spec.residualizer.learner = config.learner;
    spec.residualizer.features = kSimAdjust;
    spec.residualizer.cross_validate = false;
    spec.residualizer.seed = stream_seed(config.seed, static_cast<std::uint64_t>(rep), 1);
    spec.estimator.level = config.level;
    spec.crossfit.splits = config.diagnostic_splits;
    spec.crossfit.literal_direction = config.literal_direction;
    spec.crossfit.seed = stream_seed(config.seed, static_cast<std::uint64_t>(rep), 2);
    return spec;
}

RepResult run_replication(const ScenarioConfig& config, int rep) {
    RepResult out;
    try {
        const SimulatedData d = simulate_data(config, rep);
        const AnalysisSpec spec = simulation_analysis_spec(config, rep);
        const std::optional<Vector> supplied =
            config.weights == SimWeights::True ? std::optional<Vector>(d.true_weights) : std::nullopt;
        const AnalysisResult r = run_analysis(d.exp, d.pop, spec, supplied);
        for (std::size_t k = 0; k < r.estimates.size(); ++k) {
            const auto& e = r.estimates[k];
            out.tau[k] = e.tau_hat;
            out.se[k] = e.se;
            out.covered[k] = e.ci_lo <= d.pate_true && d.pate_true <= e.ci_hi;
        }
        for (std::size_t k = 0; k < 4; ++k) out.recommend[k] = (*r.diagnostics)[k].recommend;
        out.oracle_gain = r.oracle->gain_weighted;
        out.ess = r.weights.ess;
        out.ok = true;
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
    }
    return out;
}

double Confusion::tpr() const {
    return positives > 0 ? static_cast<double>(tp) / positives : std::numeric_limits<double>::quiet_NaN();
}

double Confusion::tnr() const {
    return negatives > 0 ? static_cast<double>(tn) / negatives : std::numeric_limits<double>::quiet_NaN();
}

Confusion diagnostic_confusion(DiagnosticVariant variant, const std::vector<std::optional<bool>>& decisions,
                               bool truth_gain) {
    Confusion c;
    c.variant = variant;
    c.truth_gain = truth_gain;
    for (const auto& d : decisions) {
        const bool yes = d.value_or(false);
        if (truth_gain) {
            ++c.positives;
            if (yes) ++c.tp;
        } else {
            ++c.negatives;
            if (!yes) ++c.tn;
        }
    }
    return c;
}

const EstimatorSummary& SimulationSummary::of(Method m) const {
    for (const auto& e : estimators) {
        if (e.method == m) return e;
    }
    throw Error(ErrorKind::InvalidInput, "simulation_summary", "unknown method");
}

SimulationSummary summarize(const ScenarioConfig& config, const std::vector<RepResult>& reps) {
    SimulationSummary s;
    s.config = config;
    s.pate_true = config.alpha_tau;
    std::vector<const RepResult*> ok;
    for (const auto& r : reps) {
        if (r.ok) {
            ok.push_back(&r);
        } else {
            ++s.failures;
            if (s.failure_messages.size() < 5) s.failure_messages.push_back(r.error);
        }
    }
    s.reps_ok = static_cast<int>(ok.size());
    const double m = static_cast<double>(ok.size());

    for (std::size_t k = 0; k < kAllMethods.size(); ++k) {
        EstimatorSummary e;
        e.method = kAllMethods[k];
        // Replications where this estimator could not be computed are left out.
        std::vector<const RepResult*> used;
        for (const auto* r : ok) {
            if (std::isfinite(r->tau[k])) used.push_back(r);
        }
        e.reps_used = static_cast<int>(used.size());
        if (used.empty()) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            e.mse = e.bias = e.se = e.se_mean = e.coverage = nan;
            s.mc_variance[k] = nan;
        } else {
            const double count = static_cast<double>(used.size());
            double sum = 0.0, sq_err = 0.0, se_sum = 0.0, hits = 0.0;
            for (const auto* r : used) {
                sum += r->tau[k];
                sq_err += (r->tau[k] - s.pate_true) * (r->tau[k] - s.pate_true);
                se_sum += r->se[k];
                hits += r->covered[k] ? 1.0 : 0.0;
            }
            const double mean = sum / count;
            double ss = 0.0;
            for (const auto* r : used) ss += (r->tau[k] - mean) * (r->tau[k] - mean);
            s.mc_variance[k] = used.size() > 1 ? ss / (count - 1.0) : 0.0;
            e.mse = sq_err / count;
            e.bias = mean - s.pate_true;
            e.se = std::sqrt(s.mc_variance[k]);
            e.se_mean = se_sum / count;
            e.coverage = hits / count;
        }
        s.estimators[k] = e;
    }

    auto index_of = [](Method method) {
        return static_cast<std::size_t>(std::find(kAllMethods.begin(), kAllMethods.end(), method) - kAllMethods.begin());
    };
    for (std::size_t v = 0; v < kAllVariants.size(); ++v) {
        const DiagnosticVariant variant = kAllVariants[v];
        const std::size_t plain = index_of(plain_method(variant));
        const std::size_t res = index_of(residualized_method(variant));
        std::vector<std::optional<bool>> decisions;
        for (const auto* r : ok) decisions.push_back(r->recommend[v]);
        Confusion c = diagnostic_confusion(variant, decisions, s.mc_variance[res] < s.mc_variance[plain]);
        for (const auto* r : ok) {
            if (!std::isfinite(r->tau[res]) || !std::isfinite(r->tau[plain])) continue;
            const double err_res = std::abs(r->tau[res] - s.pate_true);
            const double err_plain = std::abs(r->tau[plain] - s.pate_true);
            const bool yes = r->recommend[v].value_or(false);
            if (err_res < err_plain) {
                ++c.positives_rep;
                if (yes) ++c.tp_rep;
            } else {
                ++c.negatives_rep;
                if (!yes) ++c.tn_rep;
            }
        }
        s.confusion[v] = c;
    }

    double gain = 0.0, ess = 0.0;
    for (const auto* r : ok) {
        gain += r->oracle_gain;
        ess += r->ess;
    }
    s.mean_oracle_gain = ok.empty() ? 0.0 : gain / m;
    s.mean_ess = ok.empty() ? 0.0 : ess / m;
    return s;
}

SimulationSummary run_scenario(const ScenarioConfig& config) {
    check_config(config);
    std::vector<RepResult> results(static_cast<std::size_t>(config.reps));
    const int workers = std::max(1, std::min(config.workers, config.reps));
    if (workers == 1) {
        for (int r = 0; r < config.reps; ++r) results[static_cast<std::size_t>(r)] = run_replication(config, r);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) {
            pool.emplace_back([&] {
                for (int r = next++; r < config.reps; r = next++) {
                    results[static_cast<std::size_t>(r)] = run_replication(config, r);
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    return summarize(config, results);
}

}  // namespace pate
