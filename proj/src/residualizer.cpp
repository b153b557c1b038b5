#include "pate/residualizer.hpp"

#include "pate/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

namespace pate {

std::string to_string(Learner learner) {
    switch (learner) {
    case Learner::Zero: return "zero";
    case Learner::ConstantMean: return "mean";
    case Learner::OlsInteractions: return "ols-int";
    case Learner::Ridge: return "ridge";
    case Learner::Lasso: return "lasso";
    case Learner::Stack: return "stack";
    }
    return "zero";
}

std::optional<Learner> parse_learner(const std::string& text) {
    if (text == "zero") return Learner::Zero;
    if (text == "mean" || text == "constant-mean") return Learner::ConstantMean;
    if (text == "ols-int" || text == "ols-interactions") return Learner::OlsInteractions;
    if (text == "ridge") return Learner::Ridge;
    if (text == "lasso") return Learner::Lasso;
    if (text == "stack" || text == "stacked-ensemble") return Learner::Stack;
    return std::nullopt;
}

std::string to_string(FitSubset subset) {
    return subset == FitSubset::AllPopulation ? "all-population" : "population-controls";
}

Matrix expand_interactions(const Matrix& x) {
    const Index d = x.cols();
    Matrix out(x.rows(), d + d * (d - 1) / 2);
    out.leftCols(d) = x;
    Index c = d;
    for (Index j = 0; j < d; ++j) {
        for (Index k = j + 1; k < d; ++k) out.col(c++) = x.col(j).cwiseProduct(x.col(k));
    }
    return out;
}

std::vector<int> fold_assignment(Index n, int k, std::uint64_t seed) {
    if (k < 2 || n < k) {
        throw Error(ErrorKind::InvalidInput, "fold_assignment", "need 2 <= folds <= rows");
    }
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> fold(static_cast<std::size_t>(n));
    for (std::size_t pos = 0; pos < perm.size(); ++pos) fold[static_cast<std::size_t>(perm[pos])] = static_cast<int>(pos % k);
    return fold;
}

Vector nnls(const Matrix& a, const Vector& b, int max_iterations) {
    const Index m = a.cols();
    Vector x = Vector::Zero(m);
    std::vector<bool> passive(static_cast<std::size_t>(m), false);
    const double tol = 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()) * std::max<double>(1.0, static_cast<double>(a.rows()));

    auto solve_passive = [&](Vector& z) {
        std::vector<Index> idx;
        for (Index j = 0; j < m; ++j) {
            if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
        }
        z = Vector::Zero(m);
        if (idx.empty()) return;
        Matrix sub(a.rows(), static_cast<Index>(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c) sub.col(static_cast<Index>(c)) = a.col(idx[c]);
        const Vector s = sub.completeOrthogonalDecomposition().solve(b);
        for (std::size_t c = 0; c < idx.size(); ++c) z(idx[c]) = s(static_cast<Index>(c));
    };

    for (int outer = 0; outer < max_iterations; ++outer) {
        const Vector grad = a.transpose() * (b - a * x);
        Index best = -1;
        double best_val = tol;
        for (Index j = 0; j < m; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && grad(j) > best_val) {
                best_val = grad(j);
                best = j;
            }
        }
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = true;

        for (int inner = 0; inner < max_iterations; ++inner) {
            Vector z;
            solve_passive(z);
            bool feasible = true;
            for (Index j = 0; j < m; ++j) {
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) feasible = false;
            }
            if (feasible) {
                x = z;
                break;
            }
            double alpha = 1.0;
            for (Index j = 0; j < m; ++j) {
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
                    alpha = std::min(alpha, x(j) / (x(j) - z(j)));
                }
            }
            x += alpha * (z - x);
            for (Index j = 0; j < m; ++j) {
                if (passive[static_cast<std::size_t>(j)] && x(j) <= 1e-15) {
                    passive[static_cast<std::size_t>(j)] = false;
                    x(j) = 0.0;
                }
            }
        }
    }
    return x;
}

namespace {

struct LinearFit {
    double intercept = 0.0;
    Vector coef;  // over expanded features

    Vector apply(const Matrix& e) const {
        if (coef.size() == 0) return Vector::Constant(e.rows(), intercept);
        return (e * coef).array() + intercept;
    }
};

using PathFitter = std::function<std::vector<LinearFit>(const Matrix&, const Vector&)>;

LinearFit fit_mean(const Matrix& e, const Vector& y) {
    LinearFit f;
    f.intercept = y.mean();
    f.coef = Vector::Zero(e.cols());
    return f;
}

LinearFit fit_ols(const Matrix& e, const Vector& y, bool* rank_deficient) {
    Matrix design(e.rows(), e.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(e.cols()) = e;
    const auto fit = linalg::weighted_least_squares(design, y, Vector::Ones(e.rows()),
                                                    linalg::RankPolicy::MinimalNorm, "fit_residualizer");
    if (rank_deficient) *rank_deficient = fit.rank_deficient;
    LinearFit f;
    f.intercept = fit.coef(0);
    f.coef = fit.coef.tail(e.cols());
    return f;
}

// Columns standardized to mean 0 and unit variance (1/N); constant columns
// are dropped.
struct Standardized {
    Matrix z;
    std::vector<Index> kept;
    Vector center;
    Vector scale;
    double y_mean = 0.0;
    Vector y_centered;
};

Standardized standardize(const Matrix& e, const Vector& y) {
    Standardized s;
    const double n = static_cast<double>(e.rows());
    for (Index j = 0; j < e.cols(); ++j) {
        const double mu = e.col(j).mean();
        const double sd = std::sqrt((e.col(j).array() - mu).square().sum() / n);
        if (sd > 1e-12 * std::max(1.0, std::abs(mu))) s.kept.push_back(j);
    }
    const Index p = static_cast<Index>(s.kept.size());
    s.z.resize(e.rows(), p);
    s.center.resize(p);
    s.scale.resize(p);
    for (Index c = 0; c < p; ++c) {
        const auto col = e.col(s.kept[static_cast<std::size_t>(c)]);
        s.center(c) = col.mean();
        s.scale(c) = std::sqrt((col.array() - s.center(c)).square().sum() / n);
        s.z.col(c) = (col.array() - s.center(c)) / s.scale(c);
    }
    s.y_mean = y.mean();
    s.y_centered = y.array() - s.y_mean;
    return s;
}

LinearFit unstandardize(const Standardized& s, const Vector& beta, Index width) {
    LinearFit f;
    f.coef = Vector::Zero(width);
    f.intercept = s.y_mean;
    for (Index c = 0; c < beta.size(); ++c) {
        const double b = beta(c) / s.scale(c);
        f.coef(s.kept[static_cast<std::size_t>(c)]) = b;
        f.intercept -= b * s.center(c);
    }
    return f;
}

double lambda_max(const Matrix& e, const Vector& y) {
    const Standardized s = standardize(e, y);
    if (s.z.cols() == 0) return 1.0;
    const double lm = (s.z.transpose() * s.y_centered).cwiseAbs().maxCoeff() / static_cast<double>(e.rows());
    return lm > 0.0 ? lm : 1.0;
}

std::vector<double> default_grid(double lmax) {
    constexpr int kPoints = 50;
    std::vector<double> grid(kPoints);
    for (int i = 0; i < kPoints; ++i) grid[static_cast<std::size_t>(i)] = lmax * std::pow(1e-4, static_cast<double>(i) / (kPoints - 1));
    return grid;
}

// Objective (1/2N)||y - Z b||^2 + (lambda/2)||b||^2 for every grid value.
std::vector<LinearFit> ridge_path(const Matrix& e, const Vector& y, const std::vector<double>& grid) {
    const Standardized s = standardize(e, y);
    std::vector<LinearFit> out;
    if (s.z.cols() == 0) {
        for (std::size_t g = 0; g < grid.size(); ++g) out.push_back(unstandardize(s, Vector(), e.cols()));
        return out;
    }
    Eigen::BDCSVD<Matrix> svd(s.z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector uty = svd.matrixU().transpose() * s.y_centered;
    const Vector& sv = svd.singularValues();
    const double n = static_cast<double>(e.rows());
    for (const double lambda : grid) {
        Vector shrink(sv.size());
        for (Index k = 0; k < sv.size(); ++k) {
            const double denom = sv(k) * sv(k) + n * lambda;
            shrink(k) = denom > 0.0 ? sv(k) / denom : 0.0;
        }
        const Vector beta = svd.matrixV() * shrink.cwiseProduct(uty);
        out.push_back(unstandardize(s, beta, e.cols()));
    }
    return out;
}

constexpr double kLassoTolerance = 1e-7;
constexpr int kLassoMaxSweeps = 10000;

// Objective (1/2N)||y - Z b||^2 + lambda ||b||_1 by cyclic coordinate
// descent, warm-started along the (decreasing) grid.
std::vector<LinearFit> lasso_path(const Matrix& e, const Vector& y, const std::vector<double>& grid) {
    const Standardized s = standardize(e, y);
    const Index p = s.z.cols();
    const double n = static_cast<double>(e.rows());
    Vector beta = Vector::Zero(p);
    Vector resid = s.y_centered;
    std::vector<LinearFit> out;
    for (const double lambda : grid) {
        for (int sweep = 0; sweep < kLassoMaxSweeps; ++sweep) {
            double max_change = 0.0;
            for (Index j = 0; j < p; ++j) {
                const double rho = s.z.col(j).dot(resid) / n + beta(j);
                const double next = rho > lambda ? rho - lambda : (rho < -lambda ? rho + lambda : 0.0);
                const double delta = next - beta(j);
                if (delta != 0.0) {
                    resid -= delta * s.z.col(j);
                    beta(j) = next;
                    max_change = std::max(max_change, std::abs(delta));
                }
            }
            if (max_change < kLassoTolerance) break;
        }
        out.push_back(unstandardize(s, beta, e.cols()));
    }
    return out;
}

// Out-of-fold predictions, one column per path entry.
Matrix out_of_fold(const Matrix& e, const Vector& y, const std::vector<int>& fold, int k, std::size_t path_size,
                   const PathFitter& fitter) {
    Matrix oof(e.rows(), static_cast<Index>(path_size));
    for (int f = 0; f < k; ++f) {
        std::vector<Index> train;
        std::vector<Index> test;
        for (Index i = 0; i < e.rows(); ++i) (fold[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
        const Matrix e_test = linalg::take_rows(e, test);
        const auto path = fitter(linalg::take_rows(e, train), linalg::take(y, train));
        for (std::size_t g = 0; g < path.size(); ++g) {
            const Vector pred = path[g].apply(e_test);
            for (std::size_t r = 0; r < test.size(); ++r) oof(test[r], static_cast<Index>(g)) = pred(static_cast<Index>(r));
        }
    }
    return oof;
}

struct MemberFit {
    Learner learner;
    LinearFit fit;
    Vector oof;
    double cv_mse = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> penalty;
    bool rank_deficient = false;
};

MemberFit fit_member(Learner learner, const Matrix& e, const Vector& y, const std::vector<int>& fold, int k,
                     const std::vector<double>& grid, bool cross_validate) {
    MemberFit m;
    m.learner = learner;
    const Index n = e.rows();
    auto mse_of = [&](const Vector& pred) { return (y - pred).squaredNorm() / static_cast<double>(n); };

    switch (learner) {
    case Learner::Zero:
        m.fit.intercept = 0.0;
        m.fit.coef = Vector::Zero(e.cols());
        m.oof = Vector::Zero(n);
        m.cv_mse = mse_of(m.oof);
        return m;
    case Learner::ConstantMean: {
        m.fit = fit_mean(e, y);
        if (cross_validate) {
            m.oof = out_of_fold(e, y, fold, k, 1, [](const Matrix& a, const Vector& b) {
                        return std::vector<LinearFit>{fit_mean(a, b)};
                    }).col(0);
            m.cv_mse = mse_of(m.oof);
        }
        return m;
    }
    case Learner::OlsInteractions: {
        m.fit = fit_ols(e, y, &m.rank_deficient);
        if (cross_validate) {
            m.oof = out_of_fold(e, y, fold, k, 1, [](const Matrix& a, const Vector& b) {
                        return std::vector<LinearFit>{fit_ols(a, b, nullptr)};
                    }).col(0);
            m.cv_mse = mse_of(m.oof);
        }
        return m;
    }
    case Learner::Ridge:
    case Learner::Lasso: {
        const bool ridge = learner == Learner::Ridge;
        const PathFitter path = [&grid, ridge](const Matrix& a, const Vector& b) {
            return ridge ? ridge_path(a, b, grid) : lasso_path(a, b, grid);
        };
        const Matrix oof = out_of_fold(e, y, fold, k, grid.size(), path);
        Index best = 0;
        double best_mse = std::numeric_limits<double>::infinity();
        for (Index g = 0; g < oof.cols(); ++g) {
            const double mse = mse_of(oof.col(g));
            if (mse < best_mse) {
                best_mse = mse;
                best = g;
            }
        }
        m.oof = oof.col(best);
        m.cv_mse = best_mse;
        m.penalty = grid[static_cast<std::size_t>(best)];
        // Refit along the grid down to the selected penalty (warm starts).
        const std::vector<double> head(grid.begin(), grid.begin() + best + 1);
        m.fit = (ridge ? ridge_path(e, y, {grid[static_cast<std::size_t>(best)]}) : lasso_path(e, y, head)).back();
        return m;
    }
    case Learner::Stack: break;
    }
    throw Error(ErrorKind::InvalidInput, "fit_residualizer", "stack is not a member learner");
}

}  // namespace

FittedResidualizer fit_residualizer(const ResidualizerSpec& spec, const PopulationSample& pop) {
    constexpr std::string_view op = "fit_residualizer";
    if (spec.folds < 2) throw Error(ErrorKind::InvalidInput, std::string(op), "folds must be >= 2");
    for (const double g : spec.penalty_grid) {
        if (!(g >= 0.0)) throw Error(ErrorKind::InvalidInput, std::string(op), "penalty grid values must be >= 0");
    }

    FittedResidualizer model;
    model.learner = spec.learner;
    model.columns = spec.features.empty() ? pop.covariate_names : spec.features;
    Matrix x = select_columns(pop.covariates, pop.covariate_names, model.columns, op);
    Vector y = pop.outcome;

    if (spec.fit_subset == FitSubset::PopulationControls) {
        if (!pop.treatment) {
            throw Error(ErrorKind::EmptyFitSubset, std::string(op), "population-controls requires a population treatment column");
        }
        std::vector<Index> controls;
        for (Index i = 0; i < pop.size(); ++i) {
            if ((*pop.treatment)(i) == 0.0) controls.push_back(i);
        }
        if (controls.empty()) {
            throw Error(ErrorKind::EmptyFitSubset, std::string(op), "no population control units");
        }
        x = linalg::take_rows(x, controls);
        y = linalg::take(y, controls);
    }
    model.n_train = y.size();
    if (model.n_train == 0) throw Error(ErrorKind::EmptyFitSubset, std::string(op), "no population units");
    if (!y.allFinite() || !x.allFinite()) {
        throw Error(ErrorKind::InvalidInput, std::string(op), "missing values in population data");
    }

    if (spec.learner == Learner::Zero) {
        model.cv_mse = y.squaredNorm() / static_cast<double>(y.size());
        return model;
    }
    if (y.maxCoeff() == y.minCoeff()) {
        model.learner = Learner::ConstantMean;
        model.degenerate_outcome = true;
        model.intercept = y(0);
        model.cv_mse = 0.0;
        return model;
    }

    const bool needs_folds = spec.cross_validate || spec.learner == Learner::Ridge || spec.learner == Learner::Lasso ||
                             spec.learner == Learner::Stack;
    // Fewer rows than folds: leave one out.
    const int folds = static_cast<int>(std::min<Index>(spec.folds, y.size()));
    std::vector<int> fold;
    if (needs_folds) fold = fold_assignment(y.size(), folds, spec.seed);

    if (spec.learner == Learner::ConstantMean) {
        const MemberFit m = fit_member(Learner::ConstantMean, Matrix(y.size(), 0), y, fold, folds, {}, spec.cross_validate);
        model.intercept = m.fit.intercept;
        model.cv_mse = m.cv_mse;
        return model;
    }

    const Matrix e = expand_interactions(x);
    model.interactions = true;
    const std::vector<double> grid = spec.penalty_grid.empty() ? default_grid(lambda_max(e, y)) : spec.penalty_grid;

    if (spec.learner != Learner::Stack) {
        const MemberFit m = fit_member(spec.learner, e, y, fold, folds, grid, spec.cross_validate);
        model.intercept = m.fit.intercept;
        model.coef = m.fit.coef;
        model.cv_mse = m.cv_mse;
        model.selected_penalty = m.penalty;
        model.rank_deficient = m.rank_deficient;
        return model;
    }

    std::vector<MemberFit> members;
    for (const Learner l : {Learner::ConstantMean, Learner::OlsInteractions, Learner::Ridge, Learner::Lasso}) {
        members.push_back(fit_member(l, e, y, fold, folds, grid, true));
    }
    Matrix oof(y.size(), static_cast<Index>(members.size()));
    for (std::size_t m = 0; m < members.size(); ++m) oof.col(static_cast<Index>(m)) = members[m].oof;
    const Vector alpha = nnls(oof, y);
    model.coef = Vector::Zero(e.cols());
    for (std::size_t m = 0; m < members.size(); ++m) {
        const double a = alpha(static_cast<Index>(m));
        model.intercept += a * members[m].fit.intercept;
        model.coef += a * members[m].fit.coef;
        model.stack_weights.emplace_back(to_string(members[m].learner), a);
        model.rank_deficient = model.rank_deficient || members[m].rank_deficient;
    }
    model.cv_mse = (y - oof * alpha).squaredNorm() / static_cast<double>(y.size());
    return model;
}

Vector predict(const FittedResidualizer& model, const Matrix& x, const Names& names) {
    const Matrix cols = select_columns(x, names, model.columns, "predict");
    if (!model.interactions) return Vector::Constant(x.rows(), model.intercept);
    return (expand_interactions(cols) * model.coef).array() + model.intercept;
}

Vector predict(const FittedResidualizer& model, const ExperimentalSample& exp) {
    Names names = exp.covariate_names;
    names.insert(names.end(), exp.adjust_names.begin(), exp.adjust_names.end());
    Matrix x(exp.size(), exp.covariates.cols() + exp.adjust_covariates.cols());
    x << exp.covariates, exp.adjust_covariates;
    return predict(model, x, names);
}

Vector residuals(const FittedResidualizer& model, const ExperimentalSample& exp) {
    return exp.outcome - predict(model, exp);
}

}  // namespace pate
