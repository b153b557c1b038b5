#pragma once

#include "pate/linalg.hpp"

#include <string>

namespace pate {

enum class WeightMethod { Logistic, EntropyBalance, Supplied };

std::string to_string(WeightMethod method);

/// Sampling weights for the experimental units, rescaled to mean one.
struct WeightVector {
    Vector weights;
    WeightMethod method = WeightMethod::Supplied;
    double ess = 0.0;  // (sum w)^2 / sum w^2
    bool capped = false;

    double max_weight() const { return weights.maxCoeff(); }
};

double effective_sample_size(const Vector& w);

/// Normalizes strictly positive raw weights to mean one and records ESS.
/// Throws InvalidInput for non-positive or non-finite entries.
WeightVector make_weight_vector(const Vector& raw, WeightMethod method);

/// Logistic model for Pr(S = 1 | X) on stacked experimental (S = 1) and
/// population (S = 0) rows. Coefficients are on the original covariate
/// scale, intercept first.
struct SelectionModel {
    Vector coefficients;
    bool converged = false;
    int iterations = 0;
    double log_likelihood = 0.0;
};

struct IrlsOptions {
    int max_iterations = 100;
    double score_tolerance = 1e-8;
    double relative_loglik_tolerance = 1e-10;
};

SelectionModel fit_logistic_selection(const Matrix& exp_covariates, const Matrix& pop_covariates,
                                      const IrlsOptions& options = {});

/// w_i = (1 - p_i) / p_i from fitted selection probabilities.
WeightVector weights_from_selection(const SelectionModel& model, const Matrix& exp_covariates);
WeightVector weights_from_probabilities(const Vector& selection_probabilities);

struct EntropyOptions {
    int max_iterations = 200;
    double gradient_tolerance = 1e-10;
};

/// Entropy balancing: the mean-one weights closest to uniform in KL
/// divergence whose weighted covariate means equal `target`. Solved by damped
/// Newton iterations on the d-dimensional dual with standardized covariates.
WeightVector entropy_balance(const Matrix& exp_covariates, const Vector& target, const EntropyOptions& options = {});

/// Weighted covariate means minus target, per column.
Vector moment_gaps(const Vector& weights, const Matrix& exp_covariates, const Vector& target);

/// Clamps weights at `max_weight` (on the mean-one scale) and renormalizes
/// until the cap holds. Exploratory only.
WeightVector cap_weights(const WeightVector& w, double max_weight);

}  // namespace pate
