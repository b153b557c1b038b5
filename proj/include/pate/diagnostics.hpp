#pragma once

#include "pate/data.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pate {

enum class DiagnosticVariant { W, WLS, WCov, WLSCov };

std::string to_string(DiagnosticVariant variant);

struct DiagnosticResult {
    DiagnosticVariant variant = DiagnosticVariant::W;
    std::optional<double> r2_0;  // empty means undefined
    std::optional<bool> recommend;  // r2_0 > 0 when defined
    int splits_used = 0;
    std::vector<double> split_values;  // per split, NaN where undefined
    std::optional<std::string> undefined_reason;
    bool minimal_norm = false;  // a control-arm regression was rank deficient
};

/// Weighted pseudo-R^2 of the predictions on control units:
/// 1 - sum w^2 (e - mean_w e)^2 / sum w^2 (Y - mean_w Y)^2 with e = Y - predicted.
/// Only control-arm outcomes are read.
DiagnosticResult pseudo_r2_weighted(const ExperimentalSample& exp, const Vector& w, const Vector& predicted);

/// As pseudo_r2_weighted after partialling the adjustment covariates out of
/// both Y and e by w-weighted regressions on the control units.
DiagnosticResult pseudo_r2_wls(const ExperimentalSample& exp, const Vector& w, const Vector& predicted,
                               const Matrix& extra);

struct CrossfitOptions {
    int splits = 0;  // 0 picks 50 below 500 control units, else 1
    std::uint64_t seed = 0;
    bool literal_direction = false;  // scale from the regression of predicted on Y
};

int default_splits(Index n_control);

/// Cross-fitted diagnostic for the covariate-adjusted estimators: the scale
/// on the prediction is fit on one half of the controls, the pseudo-R^2 of
/// Y - scale * predicted evaluated on the other, halves swapped and averaged,
/// then averaged over repeated random splits. With no extra columns the
/// weighted form is evaluated, otherwise the adjusted one.
DiagnosticResult pseudo_r2_covariate_crossfit(const ExperimentalSample& exp, const Vector& w, const Vector& predicted,
                                              const Matrix& extra, const CrossfitOptions& options = {});

struct ProxyDecomposition {
    double measure_gap_var = 0.0;  // var(Y - proxy) over controls
    double prediction_err_var = 0.0;  // var(proxy - predicted) over controls
};

ProxyDecomposition proxy_error_decomposition(const ExperimentalSample& exp, const Vector& proxy,
                                             const Vector& predicted);

/// External-validity triage: a residualizer that predicts the population well
/// (cross-validated R^2 at least `cv_r2_threshold`) but not the experimental
/// controls (pseudo-R^2 <= 0) points at population/experiment divergence.
struct Triage {
    double cv_r2 = 0.0;
    bool low_cv_error = false;
    bool low_r2 = false;
    bool external_validity_warning = false;
};

Triage triage(double cv_mse, const Vector& population_outcome, const std::optional<double>& r2_0,
              double cv_r2_threshold = 0.5);

}  // namespace pate
