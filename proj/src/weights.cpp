#include "pate/weights.hpp"

#include "pate/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pate {

std::string to_string(WeightMethod method) {
    switch (method) {
    case WeightMethod::Logistic: return "logistic";
    case WeightMethod::EntropyBalance: return "ebal";
    case WeightMethod::Supplied: return "supplied";
    }
    return "supplied";
}

double effective_sample_size(const Vector& w) {
    const double s = w.sum();
    return s * s / w.squaredNorm();
}

WeightVector make_weight_vector(const Vector& raw, WeightMethod method) {
    if (raw.size() == 0 || !raw.allFinite() || (raw.array() <= 0.0).any()) {
        throw Error(ErrorKind::InvalidInput, "make_weight_vector", "weights must be finite and strictly positive");
    }
    WeightVector out;
    out.weights = linalg::mean_one(raw);
    out.method = method;
    out.ess = effective_sample_size(out.weights);
    return out;
}

namespace {

struct Standardizer {
    Vector center;
    Vector scale;

    Matrix apply(const Matrix& x) const {
        return (x.rowwise() - center.transpose()).array().rowwise() / scale.transpose().array();
    }
};

Standardizer standardizer_for(const Matrix& x, std::string_view op) {
    Standardizer s;
    s.center = x.colwise().mean().transpose();
    s.scale.resize(x.cols());
    const double denom = std::max<double>(1.0, static_cast<double>(x.rows() - 1));
    for (Index j = 0; j < x.cols(); ++j) {
        const double var = (x.col(j).array() - s.center(j)).square().sum() / denom;
        if (!(var > 0.0)) {
            throw Error(ErrorKind::RankDeficient, std::string(op), "covariate column " + std::to_string(j) + " is constant");
        }
        s.scale(j) = std::sqrt(var);
    }
    return s;
}

void require_full_rank(const Matrix& design, std::string_view op) {
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    qr.setThreshold(linalg::kRankTolerance);
    if (qr.rank() < design.cols()) {
        throw Error(ErrorKind::RankDeficient, std::string(op), "collinear covariates");
    }
}

// log(1 + exp(eta)) without overflow.
double softplus(double eta) {
    return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

double expit(double eta) {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

double log_likelihood(const Vector& eta, const Vector& s) {
    double ll = 0.0;
    for (Index i = 0; i < eta.size(); ++i) ll += s(i) * eta(i) - softplus(eta(i));
    return ll;
}

constexpr double kSeparationBound = 1e-12;

}  // namespace

SelectionModel fit_logistic_selection(const Matrix& exp_covariates, const Matrix& pop_covariates,
                                      const IrlsOptions& options) {
    constexpr std::string_view op = "fit_logistic_selection";
    if (exp_covariates.cols() != pop_covariates.cols()) {
        throw Error(ErrorKind::ColumnMismatch, std::string(op), "experimental and population covariates differ in width");
    }
    const Index n = exp_covariates.rows();
    const Index total = n + pop_covariates.rows();
    const Index d = exp_covariates.cols();

    Matrix stacked(total, d);
    stacked << exp_covariates, pop_covariates;
    Vector s = Vector::Zero(total);
    s.head(n).setOnes();

    const Standardizer std_x = standardizer_for(stacked, op);
    Matrix design(total, d + 1);
    design.col(0).setOnes();
    design.rightCols(d) = std_x.apply(stacked);
    require_full_rank(design, op);

    Vector beta = Vector::Zero(d + 1);
    Vector eta = design * beta;
    double ll = log_likelihood(eta, s);
    SelectionModel model;

    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        Vector p(total);
        for (Index i = 0; i < total; ++i) p(i) = expit(eta(i));
        const Vector score = design.transpose() * (s - p);
        const Vector info_w = p.array() * (1.0 - p.array());
        const Matrix info = design.transpose() * info_w.asDiagonal() * design;
        const Vector step = info.ldlt().solve(score);

        double t = 1.0;
        Vector next = beta + step;
        Vector next_eta = design * next;
        double next_ll = log_likelihood(next_eta, s);
        for (int halving = 0; halving < 30 && !(next_ll >= ll); ++halving) {
            t *= 0.5;
            next = beta + t * step;
            next_eta = design * next;
            next_ll = log_likelihood(next_eta, s);
        }
        const double rel_change = std::abs(next_ll - ll) / std::max(std::abs(ll), 1e-300);
        beta = next;
        eta = next_eta;
        ll = next_ll;
        model.iterations = iter;

        for (Index i = 0; i < total; ++i) {
            const double pi = expit(eta(i));
            if (pi < kSeparationBound || pi > 1.0 - kSeparationBound) {
                throw Error(ErrorKind::Separation, std::string(op),
                            "fitted selection probability reached the boundary (perfect separation)");
            }
        }
        Vector p_next(total);
        for (Index i = 0; i < total; ++i) p_next(i) = expit(eta(i));
        const double max_score = (design.transpose() * (s - p_next)).cwiseAbs().maxCoeff();
        // A vanishing score alone is not trusted while the likelihood is still
        // moving: diverging fits on separated data also drive it to zero.
        if ((max_score < options.score_tolerance && rel_change < 1e-6) ||
            rel_change < options.relative_loglik_tolerance) {
            model.converged = true;
            break;
        }
    }

    if (!beta.allFinite()) {
        throw Error(ErrorKind::Separation, std::string(op), "non-finite coefficients");
    }
    // Back to the original covariate scale.
    model.coefficients.resize(d + 1);
    model.coefficients(0) = beta(0);
    for (Index j = 0; j < d; ++j) {
        model.coefficients(j + 1) = beta(j + 1) / std_x.scale(j);
        model.coefficients(0) -= beta(j + 1) * std_x.center(j) / std_x.scale(j);
    }
    model.log_likelihood = ll;
    return model;
}

WeightVector weights_from_probabilities(const Vector& selection_probabilities) {
    Vector raw(selection_probabilities.size());
    for (Index i = 0; i < raw.size(); ++i) {
        const double p = selection_probabilities(i);
        raw(i) = (1.0 - p) / p;
        if (!std::isfinite(raw(i)) || !(raw(i) > 0.0)) {
            throw Error(ErrorKind::Separation, "weights_from_selection", "non-finite or zero odds ratio");
        }
    }
    return make_weight_vector(raw, WeightMethod::Logistic);
}

WeightVector weights_from_selection(const SelectionModel& model, const Matrix& exp_covariates) {
    if (!model.converged) {
        throw Error(ErrorKind::NotConverged, "weights_from_selection", "selection model did not converge");
    }
    if (model.coefficients.size() != exp_covariates.cols() + 1) {
        throw Error(ErrorKind::ColumnMismatch, "weights_from_selection", "coefficient count does not match covariates");
    }
    const Vector eta =
        (exp_covariates * model.coefficients.tail(exp_covariates.cols())).array() + model.coefficients(0);
    Vector raw(eta.size());
    for (Index i = 0; i < eta.size(); ++i) {
        // (1 - p) / p = exp(-eta)
        raw(i) = std::exp(-eta(i));
        if (!std::isfinite(raw(i)) || !(raw(i) > 0.0)) {
            throw Error(ErrorKind::Separation, "weights_from_selection", "non-finite or zero odds ratio");
        }
    }
    return make_weight_vector(raw, WeightMethod::Logistic);
}

namespace {

struct DualState {
    double value = 0.0;  // log mean exp(lambda' z_i)
    Vector probs;  // softmax weights
    Vector gradient;
};

DualState evaluate_dual(const Matrix& centered, const Vector& lambda) {
    const Vector eta = centered * lambda;
    const double m = eta.maxCoeff();
    Vector e = (eta.array() - m).exp();
    const double sum = e.sum();
    DualState st;
    st.value = m + std::log(sum / static_cast<double>(eta.size()));
    st.probs = e / sum;
    st.gradient = centered.transpose() * st.probs;
    return st;
}

}  // namespace

WeightVector entropy_balance(const Matrix& exp_covariates, const Vector& target, const EntropyOptions& options) {
    constexpr std::string_view op = "entropy_balance";
    const Index n = exp_covariates.rows();
    const Index d = exp_covariates.cols();
    if (target.size() != d) {
        throw Error(ErrorKind::ColumnMismatch, std::string(op), "target length differs from covariate count");
    }
    if (n < 2) throw Error(ErrorKind::InvalidInput, std::string(op), "need at least 2 units");

    const Standardizer std_x = standardizer_for(exp_covariates, op);
    const Vector t = (target - std_x.center).cwiseQuotient(std_x.scale);
    const Matrix centered = std_x.apply(exp_covariates).rowwise() - t.transpose();
    {
        Matrix with_intercept(n, d + 1);
        with_intercept.col(0).setOnes();
        with_intercept.rightCols(d) = std_x.apply(exp_covariates);
        require_full_rank(with_intercept, op);
    }

    // The dual optimum equals -KL(w || uniform) >= -log n, so any iterate
    // below that bound certifies an infeasible target.
    const double lower_bound = -std::log(static_cast<double>(n)) - 1e-9;

    Vector lambda = Vector::Zero(d);
    DualState st = evaluate_dual(centered, lambda);
    bool converged = st.gradient.cwiseAbs().maxCoeff() < options.gradient_tolerance;
    for (int iter = 0; iter < options.max_iterations && !converged; ++iter) {
        const Matrix weighted = st.probs.cwiseSqrt().asDiagonal() * centered;
        const Matrix hessian = weighted.transpose() * weighted - st.gradient * st.gradient.transpose();
        Eigen::LDLT<Matrix> ldlt(hessian);
        Vector step = -ldlt.solve(st.gradient);
        if (ldlt.info() != Eigen::Success || !step.allFinite() || ldlt.vectorD().minCoeff() <= 0.0) {
            throw Error(ErrorKind::Infeasible, std::string(op), "degenerate dual Hessian (target on or outside the hull)");
        }
        const double slope = st.gradient.dot(step);
        double alpha = 1.0;
        DualState next = evaluate_dual(centered, lambda + step);
        int backtracks = 0;
        // Close to the optimum the objective only moves at rounding level; a
        // step that shrinks the gradient is then accepted as is.
        auto acceptable = [&](const DualState& cand) {
            if (cand.value <= st.value + 1e-4 * alpha * slope) return true;
            const bool flat = std::abs(cand.value - st.value) <= 1e-12 * std::max(1.0, std::abs(st.value));
            return flat && cand.gradient.cwiseAbs().maxCoeff() < st.gradient.cwiseAbs().maxCoeff();
        };
        while (!acceptable(next)) {
            if (++backtracks > 60) {
                throw Error(ErrorKind::Infeasible, std::string(op), "line search failed");
            }
            alpha *= 0.5;
            next = evaluate_dual(centered, lambda + alpha * step);
        }
        lambda += alpha * step;
        st = std::move(next);
        if (st.value < lower_bound) {
            throw Error(ErrorKind::Infeasible, std::string(op), "dual diverged: target outside the convex hull");
        }
        converged = st.gradient.cwiseAbs().maxCoeff() < options.gradient_tolerance;
    }
    if (!converged) {
        throw Error(ErrorKind::Infeasible, std::string(op), "no convergence within iteration limit");
    }
    const Vector raw = st.probs * static_cast<double>(n);
    if ((raw.array() <= 0.0).any()) {
        throw Error(ErrorKind::Infeasible, std::string(op), "weights underflowed to zero");
    }
    return make_weight_vector(raw, WeightMethod::EntropyBalance);
}

Vector moment_gaps(const Vector& weights, const Matrix& exp_covariates, const Vector& target) {
    const Vector means = exp_covariates.transpose() * weights / weights.sum();
    return means - target;
}

WeightVector cap_weights(const WeightVector& w, double max_weight) {
    if (!(max_weight >= 1.0)) {
        throw Error(ErrorKind::InvalidInput, "cap_weights", "cap must be at least 1 on the mean-one scale");
    }
    // Units at the cap hold exactly the cap; the rest share one scale factor
    // keeping the mean at one. Grow the capped set until no free unit exceeds it.
    const Vector& v = w.weights;
    const Index n = v.size();
    std::vector<bool> at_cap(static_cast<std::size_t>(n), false);
    double scale = 1.0;
    for (bool grew = true; grew;) {
        double free_sum = 0.0;
        Index n_cap = 0;
        for (Index i = 0; i < n; ++i) {
            if (at_cap[static_cast<std::size_t>(i)]) {
                ++n_cap;
            } else {
                free_sum += v(i);
            }
        }
        if (n_cap == n || free_sum <= 0.0) break;
        scale = (static_cast<double>(n) - max_weight * static_cast<double>(n_cap)) / free_sum;
        grew = false;
        for (Index i = 0; i < n; ++i) {
            if (!at_cap[static_cast<std::size_t>(i)] && v(i) * scale > max_weight) {
                at_cap[static_cast<std::size_t>(i)] = true;
                grew = true;
            }
        }
    }
    Vector out_w(n);
    for (Index i = 0; i < n; ++i) out_w(i) = at_cap[static_cast<std::size_t>(i)] ? max_weight : v(i) * scale;
    WeightVector out = make_weight_vector(out_w, w.method);
    out.capped = true;
    return out;
}

}  // namespace pate
