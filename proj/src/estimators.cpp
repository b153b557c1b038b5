#include "pate/estimators.hpp"

#include "pate/error.hpp"

#include <cmath>
#include <limits>

namespace pate {

std::string to_string(Method method) {
    switch (method) {
    case Method::DiM: return "DiM";
    case Method::W: return "W";
    case Method::WLS: return "wLS";
    case Method::WRes: return "W_res";
    case Method::WLSRes: return "wLS_res";
    case Method::WCov: return "W_cov";
    case Method::WLSCov: return "wLS_cov";
    }
    return "DiM";
}

std::optional<Method> parse_method(const std::string& text) {
    for (const Method m : kAllMethods) {
        if (to_string(m) == text) return m;
    }
    return std::nullopt;
}

namespace {

struct ArmCounts {
    Index treated = 0;
    Index control = 0;
};

ArmCounts check_sample(const ExperimentalSample& exp, std::string_view op) {
    const Index n = exp.size();
    if (exp.treatment.size() != n) {
        throw Error(ErrorKind::InvalidInput, std::string(op), "treatment and outcome lengths differ");
    }
    ArmCounts c;
    for (Index i = 0; i < n; ++i) {
        const double t = exp.treatment(i);
        if (t == 1.0) {
            ++c.treated;
        } else if (t == 0.0) {
            ++c.control;
        } else {
            throw Error(ErrorKind::InvalidInput, std::string(op), "treatment entries must be 0 or 1");
        }
    }
    if (c.treated < 2 || c.control < 2) {
        throw Error(ErrorKind::DegenerateArm, std::string(op), "each arm needs at least 2 units");
    }
    return c;
}

Vector normalized_weights(const Vector& w, Index n, std::string_view op) {
    if (w.size() != n) throw Error(ErrorKind::InvalidInput, std::string(op), "weight length differs from sample size");
    if (!w.allFinite() || (w.array() <= 0.0).any()) {
        throw Error(ErrorKind::InvalidInput, std::string(op), "weights must be finite and strictly positive");
    }
    return linalg::mean_one(w);
}

const Vector& outcome_or(const ExperimentalSample& exp, const std::optional<Vector>& outcome, std::string_view op) {
    if (!outcome) return exp.outcome;
    if (outcome->size() != exp.size()) {
        throw Error(ErrorKind::InvalidInput, std::string(op), "outcome length differs from sample size");
    }
    return *outcome;
}

struct ArmMeans {
    double treated = 0.0;
    double control = 0.0;
};

// Shared by the unweighted and weighted difference in means so that unit
// weights reproduce the unweighted result bit for bit.
ArmMeans weighted_arm_means(const Vector& t, const Vector& y, const Vector& w) {
    double sw1 = 0.0, swy1 = 0.0, sw0 = 0.0, swy0 = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
        if (t(i) == 1.0) {
            sw1 += w(i);
            swy1 += w(i) * y(i);
        } else {
            sw0 += w(i);
            swy0 += w(i) * y(i);
        }
    }
    return {swy1 / sw1, swy0 / sw0};
}

double z_value(double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw Error(ErrorKind::InvalidInput, "estimators", "confidence level must lie in (0, 1)");
    }
    return linalg::normal_quantile(1.0 - (1.0 - level) / 2.0);
}

EstimateResult finish(Method method, double tau, double se, const ArmCounts& counts, const EstimatorOptions& options) {
    EstimateResult r;
    r.method = method;
    r.tau_hat = tau;
    r.se = se;
    const double half = z_value(options.level) * se;
    r.ci_lo = tau - half;
    r.ci_hi = tau + half;
    r.level = options.level;
    r.n = counts.treated + counts.control;
    r.n_treated = counts.treated;
    r.n_control = counts.control;
    return r;
}

EstimateResult hajek_core(Method method, const ExperimentalSample& exp, const Vector& w, const Vector& y,
                          const EstimatorOptions& options, std::string_view op) {
    const ArmCounts counts = check_sample(exp, op);
    const Vector wn = normalized_weights(w, exp.size(), op);
    const ArmMeans means = weighted_arm_means(exp.treatment, y, wn);
    Matrix design(exp.size(), 2);
    design.col(0).setOnes();
    design.col(1) = exp.treatment;
    Vector resid(exp.size());
    for (Index i = 0; i < exp.size(); ++i) resid(i) = y(i) - (exp.treatment(i) == 1.0 ? means.treated : means.control);
    const double se = linalg::hc2_standard_errors(design, wn, resid, "hc2_sandwich_se")(1);
    return finish(method, means.treated - means.control, se, counts, options);
}

// Design {1, T, leading..., extra...} (plus T x centered extra under Lin
// interactions). The treatment coefficient is column 1.
Matrix regression_design(const ExperimentalSample& exp, const Vector& wn, const Matrix& leading, const Matrix& extra,
                         bool lin) {
    const Index n = exp.size();
    const Index k_extra = extra.cols();
    Matrix design(n, 2 + leading.cols() + k_extra * (lin ? 2 : 1));
    design.col(0).setOnes();
    design.col(1) = exp.treatment;
    if (leading.cols() > 0) design.middleCols(2, leading.cols()) = leading;
    if (k_extra > 0) {
        if (lin) {
            const Vector center = extra.transpose() * wn / wn.sum();
            const Matrix centered = extra.rowwise() - center.transpose();
            design.middleCols(2 + leading.cols(), k_extra) = centered;
            design.rightCols(k_extra) = exp.treatment.asDiagonal() * centered;
        } else {
            design.rightCols(k_extra) = extra;
        }
    }
    return design;
}

struct RegressionEstimate {
    double tau = 0.0;
    double se = 0.0;
    Vector coef;
};

RegressionEstimate regress(const Matrix& design, const Vector& y, const Vector& wn, std::string_view op) {
    const auto fit = linalg::weighted_least_squares(design, y, wn, linalg::RankPolicy::Throw, op);
    RegressionEstimate r;
    r.coef = fit.coef;
    r.tau = fit.coef(1);
    r.se = linalg::hc2_standard_errors(design, wn, fit.residuals, "hc2_sandwich_se")(1);
    return r;
}

void check_rows(const Matrix& m, Index n, std::string_view op, const char* what) {
    if (m.rows() != n && m.cols() > 0) {
        throw Error(ErrorKind::InvalidInput, std::string(op), std::string(what) + " rows differ from sample size");
    }
}

EstimateResult wls_core(Method method, const ExperimentalSample& exp, const Vector& w, const Matrix& extra,
                        const Vector& y, const EstimatorOptions& options, std::string_view op) {
    check_rows(extra, exp.size(), op, "adjustment covariate");
    if (extra.cols() == 0) return hajek_core(method, exp, w, y, options, op);
    const ArmCounts counts = check_sample(exp, op);
    const Vector wn = normalized_weights(w, exp.size(), op);
    const Matrix design = regression_design(exp, wn, Matrix(exp.size(), 0), extra, options.lin_interactions);
    const RegressionEstimate est = regress(design, y, wn, op);
    return finish(method, est.tau, est.se, counts, options);
}

EstimateResult cov_core(Method method, const ExperimentalSample& exp, const Vector& w, const Vector& predicted,
                        const Matrix& extra, const EstimatorOptions& options, std::optional<double> fixed_beta,
                        std::string_view op) {
    if (predicted.size() != exp.size()) {
        throw Error(ErrorKind::InvalidInput, std::string(op), "prediction length differs from sample size");
    }
    if (fixed_beta) {
        const Vector y = exp.outcome - *fixed_beta * predicted;
        EstimateResult r = wls_core(method, exp, w, extra, y, options, op);
        r.beta_hat = *fixed_beta;
        return r;
    }
    check_rows(extra, exp.size(), op, "adjustment covariate");
    const ArmCounts counts = check_sample(exp, op);
    const Vector wn = normalized_weights(w, exp.size(), op);
    const Matrix design = regression_design(exp, wn, predicted, extra, options.lin_interactions);
    const RegressionEstimate est = regress(design, exp.outcome, wn, op);
    EstimateResult r = finish(method, est.tau, est.se, counts, options);
    r.beta_hat = est.coef(2);
    return r;
}

}  // namespace

EstimateResult difference_in_means(const ExperimentalSample& exp, const EstimatorOptions& options) {
    constexpr std::string_view op = "difference_in_means";
    const ArmCounts counts = check_sample(exp, op);
    const ArmMeans means = weighted_arm_means(exp.treatment, exp.outcome, Vector::Ones(exp.size()));
    double ss1 = 0.0, ss0 = 0.0;
    for (Index i = 0; i < exp.size(); ++i) {
        if (exp.treatment(i) == 1.0) {
            ss1 += (exp.outcome(i) - means.treated) * (exp.outcome(i) - means.treated);
        } else {
            ss0 += (exp.outcome(i) - means.control) * (exp.outcome(i) - means.control);
        }
    }
    const double n1 = static_cast<double>(counts.treated);
    const double n0 = static_cast<double>(counts.control);
    const double se = std::sqrt(ss1 / (n1 - 1.0) / n1 + ss0 / (n0 - 1.0) / n0);
    return finish(Method::DiM, means.treated - means.control, se, counts, options);
}

EstimateResult hajek_weighted(const ExperimentalSample& exp, const Vector& w, const std::optional<Vector>& outcome,
                              const EstimatorOptions& options) {
    constexpr std::string_view op = "hajek_weighted";
    return hajek_core(Method::W, exp, w, outcome_or(exp, outcome, op), options, op);
}

EstimateResult weighted_least_squares(const ExperimentalSample& exp, const Vector& w, const Matrix& extra,
                                      const std::optional<Vector>& outcome, const EstimatorOptions& options) {
    constexpr std::string_view op = "weighted_least_squares";
    return wls_core(Method::WLS, exp, w, extra, outcome_or(exp, outcome, op), options, op);
}

EstimateResult post_residualized_weighted(const ExperimentalSample& exp, const Vector& w, const Vector& predicted,
                                          const EstimatorOptions& options) {
    constexpr std::string_view op = "post_residualized_weighted";
    if (predicted.size() != exp.size()) {
        throw Error(ErrorKind::InvalidInput, std::string(op), "prediction length differs from sample size");
    }
    return hajek_core(Method::WRes, exp, w, exp.outcome - predicted, options, op);
}

EstimateResult post_residualized_weighted(const ExperimentalSample& exp, const Vector& w,
                                          const FittedResidualizer& model, const EstimatorOptions& options) {
    return post_residualized_weighted(exp, w, predict(model, exp), options);
}

EstimateResult post_residualized_wls(const ExperimentalSample& exp, const Vector& w, const Vector& predicted,
                                     const Matrix& extra, const EstimatorOptions& options) {
    constexpr std::string_view op = "post_residualized_wls";
    if (predicted.size() != exp.size()) {
        throw Error(ErrorKind::InvalidInput, std::string(op), "prediction length differs from sample size");
    }
    return wls_core(Method::WLSRes, exp, w, extra, exp.outcome - predicted, options, op);
}

EstimateResult post_residualized_wls(const ExperimentalSample& exp, const Vector& w, const FittedResidualizer& model,
                                     const Matrix& extra, const EstimatorOptions& options) {
    return post_residualized_wls(exp, w, predict(model, exp), extra, options);
}

EstimateResult covariate_adjusted_weighted(const ExperimentalSample& exp, const Vector& w, const Vector& predicted,
                                           const EstimatorOptions& options, std::optional<double> fixed_beta) {
    return cov_core(Method::WCov, exp, w, predicted, Matrix(exp.size(), 0), options, fixed_beta,
                    "covariate_adjusted_weighted");
}

EstimateResult covariate_adjusted_weighted(const ExperimentalSample& exp, const Vector& w,
                                           const FittedResidualizer& model, const EstimatorOptions& options) {
    return covariate_adjusted_weighted(exp, w, predict(model, exp), options);
}

EstimateResult covariate_adjusted_wls(const ExperimentalSample& exp, const Vector& w, const Vector& predicted,
                                      const Matrix& extra, const EstimatorOptions& options,
                                      std::optional<double> fixed_beta) {
    return cov_core(Method::WLSCov, exp, w, predicted, extra, options, fixed_beta, "covariate_adjusted_wls");
}

EstimateResult covariate_adjusted_wls(const ExperimentalSample& exp, const Vector& w, const FittedResidualizer& model,
                                      const Matrix& extra, const EstimatorOptions& options) {
    return covariate_adjusted_wls(exp, w, predict(model, exp), extra, options);
}

namespace {

// A constant or collinear prediction makes the adjusted designs singular. The
// other estimators are still reported; the failed one carries the reason.
template <typename F>
EstimateResult or_failed(Method method, const ExperimentalSample& exp, const EstimatorOptions& options, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::RankDeficient) throw;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        EstimateResult r;
        r.method = method;
        r.tau_hat = r.se = r.ci_lo = r.ci_hi = nan;
        r.level = options.level;
        r.n = exp.size();
        r.n_treated = static_cast<Index>(exp.treatment.sum());
        r.n_control = r.n - r.n_treated;
        r.error = e.what();
        return r;
    }
}

}  // namespace

std::array<EstimateResult, 7> estimate_all(const ExperimentalSample& exp, const Vector& w, const Vector& predicted,
                                           const Matrix& extra, const EstimatorOptions& options) {
    return {difference_in_means(exp, options),
            hajek_weighted(exp, w, std::nullopt, options),
            weighted_least_squares(exp, w, extra, std::nullopt, options),
            post_residualized_weighted(exp, w, predicted, options),
            post_residualized_wls(exp, w, predicted, extra, options),
            or_failed(Method::WCov, exp, options,
                      [&] { return covariate_adjusted_weighted(exp, w, predicted, options); }),
            or_failed(Method::WLSCov, exp, options,
                      [&] { return covariate_adjusted_wls(exp, w, predicted, extra, options); })};
}

}  // namespace pate
