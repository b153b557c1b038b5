#include "pate/data.hpp"

#include "pate/error.hpp"

#include <algorithm>
#include <set>

namespace pate {

ExperimentalSample make_experimental(Names covariate_names, Matrix covariates, Vector treatment,
                                     Vector outcome, Names adjust_names, Matrix adjust) {
    ExperimentalSample exp;
    if (adjust_names.empty() && adjust.size() == 0) {
        exp.adjust_names = covariate_names;
        exp.adjust_covariates = covariates;
    } else {
        exp.adjust_names = std::move(adjust_names);
        exp.adjust_covariates = std::move(adjust);
    }
    exp.covariate_names = std::move(covariate_names);
    exp.covariates = std::move(covariates);
    exp.treatment = std::move(treatment);
    exp.outcome = std::move(outcome);
    return exp;
}

namespace {

bool has_nan(const Matrix& m) { return !m.allFinite(); }

}  // namespace

ValidationReport validate_pair(const ExperimentalSample& exp, const PopulationSample& pop) {
    std::set<std::string> found;
    const Index n = exp.outcome.size();

    if (exp.covariates.rows() != n || exp.treatment.size() != n || exp.adjust_covariates.rows() != n) {
        found.insert("experimental fields differ in length");
    }
    if (static_cast<Index>(exp.covariate_names.size()) != exp.covariates.cols()) {
        found.insert("experimental covariate names do not match column count");
    }
    if (n < 4) found.insert("experimental sample has fewer than 4 units");

    Index treated = 0;
    Index control = 0;
    bool nonbinary = false;
    for (Index i = 0; i < exp.treatment.size(); ++i) {
        const double t = exp.treatment(i);
        if (t == 1.0) {
            ++treated;
        } else if (t == 0.0) {
            ++control;
        } else {
            nonbinary = true;
        }
    }
    if (nonbinary) found.insert("treatment entries must be 0 or 1");
    if (treated == 0) {
        found.insert("no treated units");
    } else if (treated < 2) {
        found.insert("fewer than 2 treated units");
    }
    if (control == 0) {
        found.insert("no control units");
    } else if (control < 2) {
        found.insert("fewer than 2 control units");
    }

    if (has_nan(exp.covariates)) found.insert("missing value in experimental covariates");
    if (has_nan(exp.adjust_covariates)) found.insert("missing value in experimental adjustment covariates");
    if (!exp.outcome.allFinite()) found.insert("missing value in experimental outcome");
    if (!exp.treatment.allFinite()) found.insert("missing value in experimental treatment");

    const Index big_n = pop.outcome.size();
    if (pop.covariates.rows() != big_n) found.insert("population fields differ in length");
    if (static_cast<Index>(pop.covariate_names.size()) != pop.covariates.cols()) {
        found.insert("population covariate names do not match column count");
    }
    if (big_n < static_cast<Index>(exp.covariate_names.size()) + 2) {
        found.insert("population sample smaller than covariate count + 2");
    }
    if (has_nan(pop.covariates)) found.insert("missing value in population covariates");
    if (!pop.outcome.allFinite()) found.insert("missing value in population outcome");
    if (pop.treatment) {
        if (pop.treatment->size() != big_n) found.insert("population fields differ in length");
        if (!pop.treatment->allFinite()) found.insert("missing value in population treatment");
    }

    const std::set<std::string> exp_names(exp.covariate_names.begin(), exp.covariate_names.end());
    const std::set<std::string> pop_names(pop.covariate_names.begin(), pop.covariate_names.end());
    if (exp_names.size() != exp.covariate_names.size()) found.insert("duplicate experimental covariate name");
    if (pop_names.size() != pop.covariate_names.size()) found.insert("duplicate population covariate name");
    for (const auto& name : exp_names) {
        if (!pop_names.count(name)) found.insert("covariate mismatch: " + name);
    }
    for (const auto& name : pop_names) {
        if (!exp_names.count(name)) found.insert("covariate mismatch: " + name);
    }

    return ValidationReport{std::vector<std::string>(found.begin(), found.end())};
}

ArmSplit split_by_arm(const ExperimentalSample& exp) {
    ArmSplit split;
    for (Index i = 0; i < exp.treatment.size(); ++i) {
        (exp.treatment(i) == 1.0 ? split.treated : split.control).push_back(i);
    }
    return split;
}

Matrix select_columns(const Matrix& m, const Names& have, const Names& want, std::string_view op) {
    Matrix out(m.rows(), static_cast<Index>(want.size()));
    for (std::size_t j = 0; j < want.size(); ++j) {
        const auto it = std::find(have.begin(), have.end(), want[j]);
        if (it == have.end()) {
            throw Error(ErrorKind::ColumnMismatch, std::string(op), "missing column '" + want[j] + "'");
        }
        out.col(static_cast<Index>(j)) = m.col(it - have.begin());
    }
    return out;
}

PopulationSample align_population(const PopulationSample& pop, const Names& names) {
    if (names.size() != pop.covariate_names.size()) {
        throw Error(ErrorKind::ColumnMismatch, "align_population", "covariate sets differ in size");
    }
    PopulationSample out = pop;
    out.covariates = select_columns(pop.covariates, pop.covariate_names, names, "align_population");
    out.covariate_names = names;
    return out;
}

Vector population_means(const PopulationSample& pop) {
    return pop.covariates.colwise().mean().transpose();
}

}  // namespace pate
