#pragma once

#include "pate/linalg.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pate {

using Names = std::vector<std::string>;

/// Experimental units: weighting covariates X, adjustment covariates X~
/// (defaults to X), a binary treatment indicator and the outcome.
struct ExperimentalSample {
    Names covariate_names;
    Matrix covariates;  // n x d
    Names adjust_names;
    Matrix adjust_covariates;  // n x d~
    Vector treatment;  // entries in {0, 1}
    Vector outcome;

    Index size() const { return outcome.size(); }
};

enum class OutcomeKind { SameMeasure, Proxy };

/// Target-population units: covariates aligned by name with the experimental
/// weighting covariates, an outcome (or proxy) and an optional treatment flag.
struct PopulationSample {
    Names covariate_names;
    Matrix covariates;  // N x d
    Vector outcome;
    OutcomeKind outcome_kind = OutcomeKind::SameMeasure;
    std::optional<Vector> treatment;

    Index size() const { return outcome.size(); }
};

/// Builds an experimental sample; X~ defaults to X when `adjust` is empty.
ExperimentalSample make_experimental(Names covariate_names, Matrix covariates, Vector treatment,
                                     Vector outcome, Names adjust_names = {}, Matrix adjust = {});

struct ValidationReport {
    std::vector<std::string> violations;  // sorted, unique
    bool ok() const { return violations.empty(); }
};

/// Checks every mechanically checkable precondition on the pair and reports
/// all violations at once.
ValidationReport validate_pair(const ExperimentalSample& exp, const PopulationSample& pop);

struct ArmSplit {
    std::vector<Index> treated;
    std::vector<Index> control;
};

ArmSplit split_by_arm(const ExperimentalSample& exp);

/// Reorders the population covariate columns to follow `names`.
/// Throws ColumnMismatch when a name is missing.
PopulationSample align_population(const PopulationSample& pop, const Names& names);

/// Selects columns of a matrix by name. Throws ColumnMismatch.
Matrix select_columns(const Matrix& m, const Names& have, const Names& want, std::string_view op);

/// Population covariate means in the experimental column order.
Vector population_means(const PopulationSample& pop);

}  // namespace pate
