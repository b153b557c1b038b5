#include "helpers.hpp"

#include "pate/error.hpp"
#include "pate/pipeline.hpp"
#include "pate/report.hpp"
#include "pate/simulation.hpp"

#include <doctest.h>

#include <cmath>

using namespace pate;
using testutil::bitwise_equal;
using testutil::vec;

namespace {

ScenarioConfig small_config(int scenario, double beta_s, int reps) {
    ScenarioConfig c;
    c.scenario = scenario;
    c.beta_s = beta_s;
    c.n = 200;
    c.population_size = 1000;
    c.reps = reps;
    c.seed = 99;
    return c;
}

}  // namespace

TEST_CASE("covariate draws follow the fixed covariance") {
    std::mt19937_64 rng(1);
    const Index n = 200000;
    const Matrix x = draw_population(n, rng);
    const Matrix centered = x.rowwise() - x.colwise().mean();
    const Matrix cov = centered.transpose() * centered / static_cast<double>(n - 1);
    const Matrix target = covariate_covariance();
    CHECK((cov - target).cwiseAbs().maxCoeff() <= 0.02);
    CHECK(x.colwise().mean().cwiseAbs().maxCoeff() <= 0.02);
    CHECK(cov(2, 3) / std::sqrt(cov(2, 2) * cov(3, 3)) == doctest::Approx(0.9).epsilon(0.02));
    for (const Index j : {0, 2, 3}) CHECK(std::abs(cov(1, j)) <= 0.02);
    CHECK(Eigen::LLT<Matrix>(target).info() == Eigen::Success);
}

TEST_CASE("biased sampling") {
    SUBCASE("no selection signal") {
        std::mt19937_64 rng(2);
        const Matrix pool = draw_population(20000, rng);
        const auto idx = draw_samples(Vector::Zero(20000), 2000, 2000, rng);
        CHECK(std::abs(linalg::take(pool.col(3), idx.experimental).mean()) < 0.1);
    }
    SUBCASE("selected units have larger selection covariate") {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            std::mt19937_64 rng(seed);
            const Matrix pool = draw_population(3000, rng);
            const auto idx = draw_samples(pool.col(2), 300, 500, rng);
            CHECK(linalg::take(pool.col(2), idx.experimental).mean() > pool.col(2).mean());
        }
    }
    SUBCASE("whole pool") {
        std::mt19937_64 rng(3);
        const Matrix pool = draw_population(50, rng);
        const auto idx = draw_samples(pool.col(2), 50, 0, rng);
        CHECK(idx.experimental.size() == 50);
        CHECK(idx.population.empty());
    }
    SUBCASE("sizes and disjointness") {
        std::mt19937_64 rng(4);
        const Matrix pool = draw_population(1000, rng);
        const auto idx = draw_samples(pool.col(2), 100, 400, rng);
        CHECK(idx.experimental.size() == 100);
        CHECK(idx.population.size() == 400);
        std::vector<Index> both;
        std::set_intersection(idx.experimental.begin(), idx.experimental.end(), idx.population.begin(),
                              idx.population.end(), std::back_inserter(both));
        CHECK(both.empty());
    }
    SUBCASE("pool too small") {
        std::mt19937_64 rng(5);
        const Matrix pool = draw_population(100, rng);
        try {
            draw_samples(pool.col(2), 60, 50, rng);
            FAIL("expected PoolTooSmall");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::PoolTooSmall);
        }
    }
    SUBCASE("bernoulli thinning") {
        std::mt19937_64 rng(6);
        const Matrix pool = draw_population(10000, rng);
        const auto idx = draw_samples(pool.col(2), 1000, 1000, rng, true);
        CHECK(std::abs(static_cast<double>(idx.experimental.size()) - 1000.0) < 150.0);
        CHECK(linalg::take(pool.col(2), idx.experimental).mean() > pool.col(2).mean());
    }
}

TEST_CASE("outcome models") {
    Matrix x(1, 4);
    x << 1.0, 1.0, 0.0, 0.0;
    SUBCASE("linear scenario") {
        CHECK(control_outcome(outcome_model(1, 0.0), x, vec({1}), vec({0}))(0) == 3.0);
    }
    SUBCASE("nonlinear scenario") {
        Matrix x2(1, 4);
        x2 << 2.0, -4.0, 0.0, 0.0;
        const double expected = 4.0 - 4.0 + 0.5 * 4.0 + 3.0 * 2.0 + 2.5 * -8.0;
        CHECK(control_outcome(outcome_model(2, 0.0), x2, vec({0}), vec({0}))(0) == doctest::Approx(expected));
    }
    SUBCASE("sample-specific term vanishes in the experiment") {
        for (const int s : {3, 4}) {
            for (const double b : {-5.0, 2.0, 5.0}) {
                const double in = control_outcome(outcome_model(s, b), x, vec({1}), vec({0}))(0);
                const double base = control_outcome(outcome_model(s, 0.0), x, vec({1}), vec({0}))(0);
                CHECK(in == base);
            }
        }
    }
    SUBCASE("scenario 3 population term") {
        Matrix x0(1, 4);
        x0 << 0.0, 0.0, 0.0, 0.0;
        CHECK(control_outcome(outcome_model(3, 1.0), x0, vec({0}), vec({0}))(0) == 0.5);
        x0(0, 0) = 2.0;
        CHECK(control_outcome(outcome_model(3, 1.0), x0, vec({0}), vec({0}))(0) == doctest::Approx(4.0 - 1.5));
    }
    SUBCASE("treatment effect model") {
        ScenarioConfig c;
        c.alpha_tau = 1.5;
        c.noise_sd = 0.0;
        Matrix xs(2, 4);
        xs << 1, 1, 0, 0.25, 1, 1, 0, -2;
        std::mt19937_64 rng(1);
        const Outcomes o = generate_outcomes(c, xs, vec({1, 1}), vec({1, 0}), rng);
        CHECK(o.y(0) == 3.0 + 1.75);
        CHECK(o.y(1) == 3.0);
        CHECK(o.y1(1) == 3.0 - 0.5);
        CHECK(o.pate_true == 1.5);
    }
}

TEST_CASE("simulated replication") {
    const ScenarioConfig c = small_config(3, 2.0, 1);
    const SimulatedData d = simulate_data(c, 0);
    CHECK(d.exp.size() == 200);
    CHECK(d.pop.size() == 1000);
    CHECK(d.exp.treatment.sum() == 100.0);
    CHECK(d.exp.covariate_names == kSimCovariates);
    CHECK(d.exp.adjust_names == kSimAdjust);
    CHECK(validate_pair(d.exp, d.pop).ok());
    const SimulatedData again = simulate_data(c, 0);
    CHECK(again.exp.outcome == d.exp.outcome);
    CHECK(simulate_data(c, 1).exp.outcome != d.exp.outcome);
    for (Index i = 0; i < 200; ++i) {
        CHECK(d.true_weights(i) == doctest::Approx(1.0 + std::exp(-d.exp.covariates(i, 2))));
    }
}

TEST_CASE("single replication summary equals a direct pipeline run") {
    const ScenarioConfig c = small_config(1, 0.0, 1);
    const SimulationSummary s = run_scenario(c);
    REQUIRE(s.reps_ok == 1);
    const SimulatedData d = simulate_data(c, 0);
    const AnalysisResult r = run_analysis(d.exp, d.pop, simulation_analysis_spec(c, 0));
    for (std::size_t k = 0; k < 7; ++k) {
        const double err = r.estimates[k].tau_hat - d.pate_true;
        CHECK(bitwise_equal(s.estimators[k].bias, err));
        CHECK(bitwise_equal(s.estimators[k].mse, err * err));
    }
}

TEST_CASE("summaries are identical across worker counts") {
    ScenarioConfig c = small_config(4, -2.0, 12);
    c.workers = 1;
    const std::string one = to_json(run_scenario(c)).dump();
    c.workers = 4;
    const std::string four = to_json(run_scenario(c)).dump();
    CHECK(one == four);
}

TEST_CASE("summary invariants") {
    const SimulationSummary s = run_scenario(small_config(2, 0.0, 20));
    CHECK(s.failures == 0);
    for (const auto& e : s.estimators) {
        CHECK(e.mse >= e.bias * e.bias);
        CHECK(e.coverage >= 0.0);
        CHECK(e.coverage <= 1.0);
    }
}

TEST_CASE("confusion counts") {
    const std::vector<std::optional<bool>> yes = {true, true, true};
    const Confusion a = diagnostic_confusion(DiagnosticVariant::W, yes, true);
    CHECK(a.tpr() == 1.0);
    CHECK(std::isnan(a.tnr()));
    const std::vector<std::optional<bool>> mixed = {false, std::nullopt, true, false};
    const Confusion b = diagnostic_confusion(DiagnosticVariant::W, mixed, false);
    CHECK(b.tn == 3);
    CHECK(b.negatives == 4);
    const Confusion c = diagnostic_confusion(DiagnosticVariant::W, mixed, true);
    CHECK(c.tp == 1);
    CHECK(c.positives == 4);
}

TEST_CASE("invalid scenario settings") {
    ScenarioConfig c = small_config(5, 0.0, 1);
    CHECK_THROWS_AS(run_scenario(c), Error);
    c = small_config(1, 0.0, 1);
    c.p_treat = 1.0;
    CHECK_THROWS_AS(run_scenario(c), Error);
    c = small_config(1, 0.0, 0);
    CHECK_THROWS_AS(run_scenario(c), Error);
}

TEST_CASE("constant predictions drop only the adjusted estimators") {
    ScenarioConfig c = small_config(1, 0.0, 6);
    c.learner = Learner::ConstantMean;
    const SimulationSummary s = run_scenario(c);
    CHECK(s.failures == 0);
    CHECK(s.of(Method::W).reps_used == 6);
    CHECK(s.of(Method::WRes).reps_used == 6);
    CHECK(s.of(Method::WCov).reps_used == 0);
    CHECK(std::isnan(s.of(Method::WCov).mse));
    CHECK(to_json(s).dump().find("null") != std::string::npos);
}
