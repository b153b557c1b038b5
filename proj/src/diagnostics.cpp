#include "pate/diagnostics.hpp"

#include "pate/error.hpp"
#include "pate/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace pate {

std::string to_string(DiagnosticVariant variant) {
    switch (variant) {
    case DiagnosticVariant::W: return "W";
    case DiagnosticVariant::WLS: return "wLS";
    case DiagnosticVariant::WCov: return "W_cov";
    case DiagnosticVariant::WLSCov: return "wLS_cov";
    }
    return "W";
}

int default_splits(Index n_control) { return n_control < 500 ? 50 : 1; }

namespace {

// Control-arm slice. Treated outcomes are never copied here.
struct Controls {
    Vector y;
    Vector predicted;
    Vector w;
    Matrix extra;
};

Controls control_slice(const ExperimentalSample& exp, const Vector& w, const Vector& predicted, const Matrix& extra,
                       std::string_view op) {
    const Index n = exp.treatment.size();
    if (w.size() != n || predicted.size() != n || (extra.cols() > 0 && extra.rows() != n)) {
        throw Error(ErrorKind::InvalidInput, std::string(op), "input lengths differ from sample size");
    }
    std::vector<Index> idx;
    for (Index i = 0; i < n; ++i) {
        if (exp.treatment(i) == 0.0) idx.push_back(i);
    }
    Controls c;
    c.y = linalg::take(exp.outcome, idx);
    c.predicted = linalg::take(predicted, idx);
    c.w = linalg::take(w, idx);
    c.extra = extra.cols() > 0 ? linalg::take_rows(extra, idx) : Matrix(static_cast<Index>(idx.size()), 0);
    return c;
}

double hajek_mean(const Vector& v, const Vector& w) { return w.dot(v) / w.sum(); }

double w2_spread(const Vector& v, const Vector& w) {
    const double mu = hajek_mean(v, w);
    return (w.array().square() * (v.array() - mu).square()).sum();
}

struct R2 {
    std::optional<double> value;
    std::optional<std::string> reason;
    bool minimal_norm = false;
};

R2 weighted_r2(const Vector& y, const Vector& resid, const Vector& w) {
    R2 r;
    if (y.size() < 2) {
        r.reason = "fewer than 2 control units";
        return r;
    }
    if (y.maxCoeff() == y.minCoeff()) {
        r.reason = "control outcomes are constant";
        return r;
    }
    const double den = w2_spread(y, w);
    if (!(den > 0.0)) {
        r.reason = "control outcomes have zero weighted variance";
        return r;
    }
    r.value = 1.0 - w2_spread(resid, w) / den;
    return r;
}

R2 adjusted_r2(const Vector& y, const Vector& resid, const Vector& w, const Matrix& extra) {
    if (extra.cols() == 0) return weighted_r2(y, resid, w);
    R2 r;
    if (y.size() < 2) {
        r.reason = "fewer than 2 control units";
        return r;
    }
    if (y.maxCoeff() == y.minCoeff()) {
        r.reason = "control outcomes are constant";
        return r;
    }
    Matrix design(y.size(), extra.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(extra.cols()) = extra;
    const auto fy = linalg::weighted_least_squares(design, y, w, linalg::RankPolicy::MinimalNorm, "pseudo_r2_wls");
    const auto fe = linalg::weighted_least_squares(design, resid, w, linalg::RankPolicy::MinimalNorm, "pseudo_r2_wls");
    r.minimal_norm = fy.rank_deficient || fe.rank_deficient;
    const double den = w2_spread(fy.residuals, w);
    if (!(den > 1e-20 * w2_spread(y, w))) {
        r.reason = "control outcomes are explained exactly by the adjustment covariates";
        return r;
    }
    r.value = 1.0 - w2_spread(fe.residuals, w) / den;
    return r;
}

DiagnosticResult from_r2(DiagnosticVariant variant, const R2& r) {
    DiagnosticResult d;
    d.variant = variant;
    d.r2_0 = r.value;
    d.undefined_reason = r.reason;
    d.minimal_norm = r.minimal_norm;
    if (r.value) d.recommend = *r.value > 0.0;
    return d;
}

// Scale on the prediction fit on one half; empty when the fit is degenerate.
std::optional<double> fit_scale(const Vector& y, const Vector& predicted, const Vector& w, bool literal) {
    Matrix design(y.size(), 2);
    design.col(0).setOnes();
    design.col(1) = literal ? y : predicted;
    const Vector& response = literal ? predicted : y;
    try {
        const auto fit = linalg::weighted_least_squares(design, response, w, linalg::RankPolicy::Throw,
                                                        "pseudo_r2_covariate_crossfit");
        return fit.coef(1);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::RankDeficient) return std::nullopt;
        throw;
    }
}

}  // namespace

DiagnosticResult pseudo_r2_weighted(const ExperimentalSample& exp, const Vector& w, const Vector& predicted) {
    const Controls c = control_slice(exp, w, predicted, Matrix(), "pseudo_r2_weighted");
    return from_r2(DiagnosticVariant::W, weighted_r2(c.y, c.y - c.predicted, c.w));
}

DiagnosticResult pseudo_r2_wls(const ExperimentalSample& exp, const Vector& w, const Vector& predicted,
                               const Matrix& extra) {
    const Controls c = control_slice(exp, w, predicted, extra, "pseudo_r2_wls");
    return from_r2(DiagnosticVariant::WLS, adjusted_r2(c.y, c.y - c.predicted, c.w, c.extra));
}

DiagnosticResult pseudo_r2_covariate_crossfit(const ExperimentalSample& exp, const Vector& w, const Vector& predicted,
                                              const Matrix& extra, const CrossfitOptions& options) {
    const Controls c = control_slice(exp, w, predicted, extra, "pseudo_r2_covariate_crossfit");
    DiagnosticResult d;
    d.variant = extra.cols() == 0 ? DiagnosticVariant::WCov : DiagnosticVariant::WLSCov;
    const Index n0 = c.y.size();
    if (n0 < 4) {
        d.undefined_reason = "fewer than 4 control units";
        return d;
    }
    if (options.splits < 0) {
        throw Error(ErrorKind::InvalidInput, "pseudo_r2_covariate_crossfit", "splits must be >= 1");
    }
    const int splits = options.splits == 0 ? default_splits(n0) : options.splits;
    d.splits_used = splits;
    std::optional<std::string> reason;

    std::vector<Index> order(static_cast<std::size_t>(n0));
    for (int s = 0; s < splits; ++s) {
        std::iota(order.begin(), order.end(), Index{0});
        std::mt19937_64 rng(stream_seed(options.seed, static_cast<std::uint64_t>(s), 0xC0F17ULL));
        std::shuffle(order.begin(), order.end(), rng);
        const auto mid = order.begin() + n0 / 2;
        std::vector<Index> a(order.begin(), mid);
        std::vector<Index> b(mid, order.end());
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());

        double total = 0.0;
        bool defined = true;
        for (int swap = 0; swap < 2 && defined; ++swap) {
            const auto& fit_rows = swap == 0 ? a : b;
            const auto& eval_rows = swap == 0 ? b : a;
            const auto scale = fit_scale(linalg::take(c.y, fit_rows), linalg::take(c.predicted, fit_rows),
                                         linalg::take(c.w, fit_rows), options.literal_direction);
            if (!scale) {
                defined = false;
                reason = "predicted outcome is constant within a fitting half";
                break;
            }
            const Vector y = linalg::take(c.y, eval_rows);
            const Vector resid = y - *scale * linalg::take(c.predicted, eval_rows);
            const Matrix x = c.extra.cols() > 0 ? linalg::take_rows(c.extra, eval_rows) : Matrix(y.size(), 0);
            const R2 r = adjusted_r2(y, resid, linalg::take(c.w, eval_rows), x);
            d.minimal_norm = d.minimal_norm || r.minimal_norm;
            if (!r.value) {
                defined = false;
                reason = r.reason;
                break;
            }
            total += *r.value;
        }
        d.split_values.push_back(defined ? total / 2.0 : std::numeric_limits<double>::quiet_NaN());
    }

    double sum = 0.0;
    int count = 0;
    for (const double v : d.split_values) {
        if (!std::isnan(v)) {
            sum += v;
            ++count;
        }
    }
    if (count == 0) {
        d.undefined_reason = reason.value_or("no split produced a defined value");
        return d;
    }
    d.r2_0 = sum / count;
    d.recommend = *d.r2_0 > 0.0;
    return d;
}

ProxyDecomposition proxy_error_decomposition(const ExperimentalSample& exp, const Vector& proxy,
                                             const Vector& predicted) {
    constexpr std::string_view op = "proxy_error_decomposition";
    const Index n = exp.treatment.size();
    if (proxy.size() != n || predicted.size() != n) {
        throw Error(ErrorKind::InvalidInput, std::string(op), "input lengths differ from sample size");
    }
    std::vector<Index> idx;
    for (Index i = 0; i < n; ++i) {
        if (exp.treatment(i) == 0.0) idx.push_back(i);
    }
    if (idx.size() < 2) throw Error(ErrorKind::DegenerateArm, std::string(op), "need at least 2 control units");
    const Vector y = linalg::take(exp.outcome, idx);
    const Vector yp = linalg::take(proxy, idx);
    const Vector gap = y - yp;
    const Vector err = yp - linalg::take(predicted, idx);
    auto sample_var = [](const Vector& v) {
        return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1);
    };
    return {sample_var(gap), sample_var(err)};
}

Triage triage(double cv_mse, const Vector& population_outcome, const std::optional<double>& r2_0,
              double cv_r2_threshold) {
    Triage t;
    const Index n = population_outcome.size();
    const double var = n > 0 ? (population_outcome.array() - population_outcome.mean()).square().sum() / n : 0.0;
    t.cv_r2 = var > 0.0 ? 1.0 - cv_mse / var : (cv_mse == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity());
    t.low_cv_error = t.cv_r2 >= cv_r2_threshold;
    t.low_r2 = r2_0.has_value() && *r2_0 <= 0.0;
    t.external_validity_warning = t.low_cv_error && t.low_r2;
    return t;
}

}  // namespace pate
