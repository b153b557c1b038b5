#pragma once

#include "pate/data.hpp"
#include "pate/residualizer.hpp"

#include <array>
#include <optional>
#include <string>

namespace pate {

enum class Method { DiM, W, WLS, WRes, WLSRes, WCov, WLSCov };

inline constexpr std::array<Method, 7> kAllMethods = {Method::DiM,    Method::W,    Method::WLS,   Method::WRes,
                                                      Method::WLSRes, Method::WCov, Method::WLSCov};

std::string to_string(Method method);
std::optional<Method> parse_method(const std::string& text);

struct EstimateResult {
    Method method = Method::DiM;
    double tau_hat = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double level = 0.95;
    Index n = 0;
    Index n_treated = 0;
    Index n_control = 0;
    std::optional<double> beta_hat;  // coefficient on the predicted outcome
    std::optional<std::string> error;  // set when the estimator could not be computed
};

struct EstimatorOptions {
    double level = 0.95;
    bool lin_interactions = false;  // add T x centered covariates to the wLS designs
};

EstimateResult difference_in_means(const ExperimentalSample& exp, const EstimatorOptions& options = {});

/// Hajek weighted difference in means of `outcome` (defaults to exp.outcome).
/// SE from HC2 on the weighted regression of the outcome on {1, T}.
EstimateResult hajek_weighted(const ExperimentalSample& exp, const Vector& w,
                              const std::optional<Vector>& outcome = std::nullopt,
                              const EstimatorOptions& options = {});

/// Coefficient on T from the weighted regression of the outcome on {1, T, extra}.
/// With no extra columns this is the Hajek estimate.
EstimateResult weighted_least_squares(const ExperimentalSample& exp, const Vector& w, const Matrix& extra,
                                      const std::optional<Vector>& outcome = std::nullopt,
                                      const EstimatorOptions& options = {});

/// Hajek estimate on residuals Y - predicted.
EstimateResult post_residualized_weighted(const ExperimentalSample& exp, const Vector& w, const Vector& predicted,
                                          const EstimatorOptions& options = {});
EstimateResult post_residualized_weighted(const ExperimentalSample& exp, const Vector& w,
                                          const FittedResidualizer& model, const EstimatorOptions& options = {});

EstimateResult post_residualized_wls(const ExperimentalSample& exp, const Vector& w, const Vector& predicted,
                                     const Matrix& extra, const EstimatorOptions& options = {});
EstimateResult post_residualized_wls(const ExperimentalSample& exp, const Vector& w, const FittedResidualizer& model,
                                     const Matrix& extra, const EstimatorOptions& options = {});

/// Weighted regression of Y on {1, T, predicted}. With `fixed_beta` the
/// coefficient on the prediction is held at that value instead, i.e. the
/// outcome Y - beta * predicted is regressed on {1, T}.
EstimateResult covariate_adjusted_weighted(const ExperimentalSample& exp, const Vector& w, const Vector& predicted,
                                           const EstimatorOptions& options = {},
                                           std::optional<double> fixed_beta = std::nullopt);
EstimateResult covariate_adjusted_weighted(const ExperimentalSample& exp, const Vector& w,
                                           const FittedResidualizer& model, const EstimatorOptions& options = {});

/// Weighted regression of Y on {1, T, predicted, extra}.
EstimateResult covariate_adjusted_wls(const ExperimentalSample& exp, const Vector& w, const Vector& predicted,
                                      const Matrix& extra, const EstimatorOptions& options = {},
                                      std::optional<double> fixed_beta = std::nullopt);
EstimateResult covariate_adjusted_wls(const ExperimentalSample& exp, const Vector& w, const FittedResidualizer& model,
                                      const Matrix& extra, const EstimatorOptions& options = {});

/// All seven estimators in kAllMethods order. `extra` is the adjustment
/// covariate matrix used by the wLS variants.
std::array<EstimateResult, 7> estimate_all(const ExperimentalSample& exp, const Vector& w, const Vector& predicted,
                                           const Matrix& extra, const EstimatorOptions& options = {});

}  // namespace pate
