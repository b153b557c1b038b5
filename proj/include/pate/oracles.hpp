#pragma once

#include "pate/data.hpp"

namespace pate {

/// Hajek (self-normalized) weighted mean.
double weighted_mean(const Vector& values, const Vector& w);

/// Plug-in weighted covariance sum w_i^2 (a_i - a_w)(b_i - b_w) / n with w
/// rescaled to mean one and a_w, b_w the Hajek means.
double weighted_covariance(const Vector& a, const Vector& b, const Vector& w);
double weighted_variance(const Vector& values, const Vector& w);

/// One experimental arm: outcomes, predictions and the arm's weights.
struct ArmData {
    Vector outcome;
    Vector predicted;
    Vector w;
};

/// Asymptotic variance (times n) of the Hajek estimator:
/// var_w(Y1) / p + var_w(Y0) / (1 - p).
double asy_var_hajek(const Vector& y1, const Vector& w1, const Vector& y0, const Vector& w0, double p);

/// Reduction in asymptotic variance (times n) from residualizing the Hajek
/// estimator: -var_w(Yhat)/(p(1-p)) + 2 cov_w(Y1, Yhat)/p + 2 cov_w(Y0, Yhat)/(1-p),
/// with var_w(Yhat) taken per arm.
double efficiency_gain_weighted(const ArmData& treated, const ArmData& control, double p);

/// R^2_0 - xi / (1 + f) with xi = R^2_0 - R^2_1.
double relative_reduction(double r2_0, double r2_1, double f);

struct ArmFit {
    double r2_0 = 0.0;
    double r2_1 = 0.0;
    double xi = 0.0;
    double f = 0.0;
};

/// Per-arm population R^2 of the predictions (1 - var_w(Y - Yhat)/var_w(Y)),
/// xi = R^2_0 - R^2_1 and f = p var_w(Y0) / ((1 - p) var_w(Y1)).
ArmFit xi_f_from_moments(const ArmData& treated, const ArmData& control, double p);

/// Arm inputs for the regression-adjusted comparison: outcomes, residuals
/// e = Y - Yhat, and the linear adjustments fit to Y and to e.
struct WlsArmData {
    Vector outcome;
    Vector residual;
    Vector adjustment;  // X~ gamma*
    Vector residual_adjustment;  // X~ gamma*_res
    Vector w;
};

struct WlsGain {
    double term_a = 0.0;
    double term_b = 0.0;
    double total = 0.0;
};

/// Reduction in asymptotic variance from residualizing the weighted
/// regression estimator, split into the explanatory-power term (a) and the
/// adjustment-overlap term (b).
WlsGain efficiency_gain_wls(const WlsArmData& treated, const WlsArmData& control, double p);

/// Coefficients on the adjustment covariates from the w-weighted regression
/// of `outcome` on {1, T, extra} over the whole experiment.
Vector adjustment_coefficients(const ExperimentalSample& exp, const Vector& w, const Vector& outcome,
                               const Matrix& extra);

struct OracleReport {
    double gain_total = 0.0;  // regression-adjusted: term_a + term_b
    double term_a = 0.0;
    double term_b = 0.0;
    double gain_weighted = 0.0;
    double asy_var_weighted = 0.0;
    double r2_0 = 0.0;
    double r2_1 = 0.0;
    double xi = 0.0;
    double f = 0.0;
    double relative_reduction = 0.0;
};

/// All oracle components from plug-in moments of one experiment.
OracleReport oracle_report(const ExperimentalSample& exp, const Vector& w, const Vector& predicted,
                           const Matrix& extra);

}  // namespace pate
