#include "helpers.hpp"

#include "pate/error.hpp"
#include "pate/estimators.hpp"
#include "pate/linalg.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>

using namespace pate;
using testutil::bitwise_equal;
using testutil::vec;

namespace {

ExperimentalSample arms(const Vector& t, const Vector& y) { return testutil::sample_1d(Vector::LinSpaced(t.size(), 0, 1), t, y); }

void check_error(ErrorKind kind, const std::function<void()>& f) {
    try {
        f();
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == kind);
    }
}

}  // namespace

TEST_CASE("difference in means") {
    SUBCASE("hand arithmetic") {
        const auto r = difference_in_means(arms(vec({1, 1, 0, 0}), vec({2, 4, 1, 1})));
        CHECK(r.tau_hat == 2.0);
        CHECK(r.se == doctest::Approx(1.0).epsilon(1e-15));  // s1^2 = 2, n1 = 2
        CHECK(r.n_treated == 2);
        CHECK(r.n_control == 2);
    }
    SUBCASE("no variation") {
        const auto r = difference_in_means(arms(vec({1, 1, 0, 0}), vec({3, 3, 3, 3})));
        CHECK(r.tau_hat == 0.0);
        CHECK(r.se == 0.0);
    }
    SUBCASE("single treated unit") {
        check_error(ErrorKind::DegenerateArm, [] { difference_in_means(arms(vec({1, 0, 0, 0}), vec({1, 2, 3, 4}))); });
    }
}

TEST_CASE("Hajek weighted estimator") {
    const auto exp = arms(vec({1, 1, 0, 0}), vec({2, 4, 1, 1}));
    SUBCASE("hand evaluation") {
        const auto r = hajek_weighted(exp, vec({1, 1, 1, 3}));
        CHECK(r.tau_hat == doctest::Approx(2.0).epsilon(1e-15));
    }
    SUBCASE("unit weights reproduce the difference in means bitwise") {
        const auto s = testutil::synthetic(3);
        const auto a = hajek_weighted(s.exp, Vector::Ones(s.exp.size()));
        const auto b = difference_in_means(s.exp);
        CHECK(bitwise_equal(a.tau_hat, b.tau_hat));
    }
    SUBCASE("scale invariance") {
        const auto s = testutil::synthetic(4);
        const auto base = hajek_weighted(s.exp, s.w);
        for (const double c : {0.25, 2.0, 1024.0, 1.0 / 64.0}) {
            const auto r = hajek_weighted(s.exp, s.w * c);
            CHECK(bitwise_equal(r.tau_hat, base.tau_hat));
            CHECK(bitwise_equal(r.se, base.se));
        }
        for (const double c : {0.3, 7.0, 1e6, 1e-5}) {
            const auto r = hajek_weighted(s.exp, s.w * c);
            CHECK(std::abs(r.tau_hat - base.tau_hat) <= 1e-12 * std::max(1.0, std::abs(base.tau_hat)));
        }
    }
    SUBCASE("degenerate arm") {
        check_error(ErrorKind::DegenerateArm, [] { hajek_weighted(arms(vec({1, 0, 0, 0}), vec({1, 2, 3, 4})), vec({1, 1, 1, 1})); });
    }
}

TEST_CASE("weighted least squares estimator") {
    const auto s = testutil::synthetic(5);
    SUBCASE("no adjustment columns equals the Hajek estimator") {
        const auto a = weighted_least_squares(s.exp, s.w, Matrix(s.exp.size(), 0));
        const auto b = hajek_weighted(s.exp, s.w);
        CHECK(bitwise_equal(a.tau_hat, b.tau_hat));
        CHECK(bitwise_equal(a.se, b.se));
    }
    SUBCASE("noiseless linear outcome") {
        const Matrix& x = s.exp.covariates;
        const Vector y = (1.0 + 2.0 * s.exp.treatment.array() + 3.0 * x.col(0).array() - x.col(1).array()).matrix();
        const auto r = weighted_least_squares(s.exp, s.w, x, y);
        CHECK(std::abs(r.tau_hat - 2.0) < 1e-10);
        CHECK(r.se < 1e-8);
    }
    SUBCASE("duplicated adjustment column") {
        Matrix x(s.exp.size(), 2);
        x << s.exp.covariates.col(0), s.exp.covariates.col(0);
        check_error(ErrorKind::RankDeficient, [&] { weighted_least_squares(s.exp, s.w, x); });
    }
    SUBCASE("confidence interval is symmetric and contains the estimate") {
        const auto r = weighted_least_squares(s.exp, s.w, s.exp.covariates);
        CHECK(r.ci_lo <= r.tau_hat);
        CHECK(r.tau_hat <= r.ci_hi);
        CHECK((r.tau_hat - r.ci_lo) == doctest::Approx(r.ci_hi - r.tau_hat).epsilon(1e-12));
        CHECK((r.ci_hi - r.tau_hat) == doctest::Approx(linalg::normal_quantile(0.975) * r.se).epsilon(1e-12));
    }
    SUBCASE("interaction flag keeps the estimate finite") {
        EstimatorOptions o;
        o.lin_interactions = true;
        const auto r = weighted_least_squares(s.exp, s.w, s.exp.covariates, std::nullopt, o);
        CHECK(std::isfinite(r.tau_hat));
        CHECK(r.se > 0.0);
    }
}

TEST_CASE("post-residualized estimators") {
    const auto s = testutil::synthetic(6);
    const Index n = s.exp.size();
    const Matrix& x = s.exp.adjust_covariates;
    SUBCASE("zero prediction reproduces the plain estimators bitwise") {
        const Vector zero = Vector::Zero(n);
        CHECK(bitwise_equal(post_residualized_weighted(s.exp, s.w, zero).tau_hat, hajek_weighted(s.exp, s.w).tau_hat));
        CHECK(bitwise_equal(post_residualized_wls(s.exp, s.w, zero, x).tau_hat,
                            weighted_least_squares(s.exp, s.w, x).tau_hat));
    }
    SUBCASE("constant prediction cancels across arms") {
        const auto a = post_residualized_weighted(s.exp, s.w, Vector::Constant(n, 3.7));
        CHECK(std::abs(a.tau_hat - hajek_weighted(s.exp, s.w).tau_hat) < 1e-12);
    }
    SUBCASE("no adjustment columns reduces the wLS form to the weighted form") {
        const auto a = post_residualized_wls(s.exp, s.w, s.predicted, Matrix(n, 0));
        const auto b = post_residualized_weighted(s.exp, s.w, s.predicted);
        CHECK(bitwise_equal(a.tau_hat, b.tau_hat));
    }
    SUBCASE("prediction linear in the adjustment columns is absorbed") {
        const Vector lin = (0.5 + 2.0 * x.col(0).array() - 1.5 * x.col(1).array()).matrix();
        const auto a = post_residualized_wls(s.exp, s.w, lin, x);
        const auto b = weighted_least_squares(s.exp, s.w, x);
        CHECK(std::abs(a.tau_hat - b.tau_hat) < 1e-8);
    }
    SUBCASE("good prediction shrinks the standard error") {
        const Vector good = (1.0 + 2.0 * x.col(0).array() + x.col(1).array() + 0.5 * x.col(0).array().square()).matrix();
        CHECK(post_residualized_weighted(s.exp, s.w, good).se < hajek_weighted(s.exp, s.w).se);
    }
}

TEST_CASE("covariate-adjusted estimators") {
    const auto s = testutil::synthetic(7);
    const Index n = s.exp.size();
    const Matrix& x = s.exp.adjust_covariates;
    SUBCASE("fixing the coefficient at one gives the residualized estimators") {
        const auto a = covariate_adjusted_weighted(s.exp, s.w, s.predicted, {}, 1.0);
        const auto b = post_residualized_weighted(s.exp, s.w, s.predicted);
        CHECK(bitwise_equal(a.tau_hat, b.tau_hat));
        const auto c = covariate_adjusted_wls(s.exp, s.w, s.predicted, x, {}, 1.0);
        const auto d = post_residualized_wls(s.exp, s.w, s.predicted, x);
        CHECK(bitwise_equal(c.tau_hat, d.tau_hat));
    }
    SUBCASE("no adjustment columns reduces the wLS form") {
        const auto a = covariate_adjusted_wls(s.exp, s.w, s.predicted, Matrix(n, 0));
        const auto b = covariate_adjusted_weighted(s.exp, s.w, s.predicted);
        CHECK(bitwise_equal(a.tau_hat, b.tau_hat));
        CHECK(bitwise_equal(*a.beta_hat, *b.beta_hat));
    }
    SUBCASE("coefficient on the prediction is reported") {
        const auto r = covariate_adjusted_weighted(s.exp, s.w, s.predicted);
        REQUIRE(r.beta_hat);
        CHECK(*r.beta_hat > 0.5);
    }
    SUBCASE("constant prediction is rank deficient") {
        check_error(ErrorKind::RankDeficient,
                    [&] { covariate_adjusted_weighted(s.exp, s.w, Vector::Constant(n, 2.0)); });
    }
    SUBCASE("prediction that is an exact linear proxy collapses the SE") {
        const auto exp = arms(vec({1, 1, 1, 0, 0, 0}), vec({3, 5, 4, 1, 2, 0.5}));
        const Vector proxy = (2.0 - 0.5 * exp.outcome.array()).matrix();
        const auto r = covariate_adjusted_weighted(exp, vec({1, 2, 1, 1, 3, 1}), proxy);
        CHECK(r.se < 1e-10);
        CHECK(*r.beta_hat == doctest::Approx(-2.0).epsilon(1e-10));
    }
    SUBCASE("noiseless recovery with adjustment columns") {
        const Vector y = (1.0 + 2.0 * s.exp.treatment.array() + 3.0 * x.col(0).array() + 0.25 * s.predicted.array() -
                          x.col(1).array())
                             .matrix();
        ExperimentalSample e2 = s.exp;
        e2.outcome = y;
        const auto r = covariate_adjusted_wls(e2, s.w, s.predicted, x);
        CHECK(std::abs(r.tau_hat - 2.0) < 1e-10);
        CHECK(*r.beta_hat == doctest::Approx(0.25).epsilon(1e-10));
    }
}

TEST_CASE("uncorrelated prediction gets a coefficient near zero") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z;
    const Index n = 20000;
    Vector t(n), y(n), pred(n);
    for (Index i = 0; i < n; ++i) {
        t(i) = i % 2;
        y(i) = 1.0 + t(i) + z(rng);
        pred(i) = z(rng);
    }
    const auto exp = testutil::sample_1d(Vector::Zero(n), t, y);
    const Vector w = Vector::Ones(n);
    const auto r = covariate_adjusted_weighted(exp, w, pred);
    CHECK(std::abs(*r.beta_hat) < 4.0 * r.se * 1.5);
    CHECK(std::abs(r.tau_hat - hajek_weighted(exp, w).tau_hat) < 0.01);
}

TEST_CASE("HC2 standard errors") {
    SUBCASE("intercept-only identity") {
        const Vector y = vec({1.0, 4.0, 2.5, 7.0, -1.0});
        const Matrix d = Matrix::Ones(5, 1);
        const auto fit = linalg::weighted_least_squares(d, y, Vector::Ones(5), linalg::RankPolicy::Throw, "t");
        const double se = linalg::hc2_standard_errors(d, Vector::Ones(5), fit.residuals)(0);
        const double ss = (y.array() - y.mean()).square().sum();
        CHECK(std::abs(se * se - ss / (4.0 * 5.0)) <= 1e-12);
    }
    SUBCASE("zero residuals") {
        const Matrix d = Matrix::Random(6, 2);
        CHECK(linalg::hc2_standard_errors(d, Vector::Ones(6), Vector::Zero(6)).isZero(0.0));
    }
    SUBCASE("three-point weighted regression against the explicit sandwich") {
        Matrix d(3, 2);
        d << 1, 0, 1, 1, 1, 3;
        const Vector y = vec({1.0, 2.5, 3.0});
        const Vector w = vec({1.0, 2.0, 0.5});
        const auto fit = linalg::weighted_least_squares(d, y, w, linalg::RankPolicy::Throw, "t");
        const Vector se = linalg::hc2_standard_errors(d, w, fit.residuals);

        // Direct evaluation of the formula with a plain inverse.
        const Matrix a = (d.transpose() * w.asDiagonal() * d).inverse();
        const Vector beta = a * d.transpose() * w.asDiagonal() * y;
        Matrix meat = Matrix::Zero(2, 2);
        for (Index i = 0; i < 3; ++i) {
            const Vector di = d.row(i).transpose();
            const double h = w(i) * di.dot(a * di);
            const double r = y(i) - di.dot(beta);
            meat += w(i) * w(i) * r * r / (1.0 - h) * di * di.transpose();
        }
        const Matrix v = a * meat * a;
        CHECK(std::abs(se(0) - std::sqrt(v(0, 0))) <= 1e-12);
        CHECK(std::abs(se(1) - std::sqrt(v(1, 1))) <= 1e-12);
        CHECK(std::abs(fit.coef(1) - beta(1)) <= 1e-12);
    }
}

TEST_CASE("estimate_all returns every method in order") {
    const auto s = testutil::synthetic(9);
    const auto all = estimate_all(s.exp, s.w, s.predicted, s.exp.adjust_covariates);
    for (std::size_t k = 0; k < kAllMethods.size(); ++k) {
        CHECK(all[k].method == kAllMethods[k]);
        CHECK(all[k].ci_lo <= all[k].tau_hat);
        CHECK(all[k].tau_hat <= all[k].ci_hi);
        CHECK(parse_method(to_string(kAllMethods[k])) == kAllMethods[k]);
    }
}
