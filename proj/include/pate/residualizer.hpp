#pragma once

#include "pate/data.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pate {

enum class Learner { Zero, ConstantMean, OlsInteractions, Ridge, Lasso, Stack };
enum class FitSubset { AllPopulation, PopulationControls };

std::string to_string(Learner learner);
std::optional<Learner> parse_learner(const std::string& text);
std::string to_string(FitSubset subset);

struct ResidualizerSpec {
    Learner learner = Learner::OlsInteractions;
    Names features;  // subset of population covariates; empty means all
    std::vector<double> penalty_grid;  // empty means 50 log-spaced values below lambda_max
    int folds = 5;
    bool cross_validate = true;  // cv_mse is NaN when off (penalized learners always cross-validate)
    FitSubset fit_subset = FitSubset::AllPopulation;
    std::uint64_t seed = 0;
};

/// A fitted map from covariates to a predicted outcome. Every learner is a
/// linear predictor over main effects and pairwise products of `columns`
/// (the zero and mean learners use the intercept only).
struct FittedResidualizer {
    Learner learner = Learner::Zero;
    Names columns;
    bool interactions = false;
    double intercept = 0.0;
    Vector coef;  // over expanded features; empty when !interactions
    double cv_mse = 0.0;
    Index n_train = 0;
    std::optional<double> selected_penalty;
    std::vector<std::pair<std::string, double>> stack_weights;
    bool degenerate_outcome = false;  // constant outcome: reduced to the mean
    bool rank_deficient = false;  // minimal-norm OLS solution was used
};

/// Main effects followed by products x_j * x_k for j < k.
Matrix expand_interactions(const Matrix& x);

FittedResidualizer fit_residualizer(const ResidualizerSpec& spec, const PopulationSample& pop);

/// Predictions for rows of `x` whose columns are named `names`; the training
/// columns are looked up by name. Throws ColumnMismatch.
Vector predict(const FittedResidualizer& model, const Matrix& x, const Names& names);

/// Predictions on experimental units, looking up training columns among the
/// weighting and adjustment covariates.
Vector predict(const FittedResidualizer& model, const ExperimentalSample& exp);

/// Y - predict(model, X), elementwise.
Vector residuals(const FittedResidualizer& model, const ExperimentalSample& exp);

/// Non-negative least squares min ||A x - b|| subject to x >= 0
/// (Lawson-Hanson active set).
Vector nnls(const Matrix& a, const Vector& b, int max_iterations = 500);

/// Assignment of n rows to k folds from a seeded shuffle.
std::vector<int> fold_assignment(Index n, int k, std::uint64_t seed);

}  // namespace pate
