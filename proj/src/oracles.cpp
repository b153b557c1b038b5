#include "pate/oracles.hpp"

#include "pate/error.hpp"

namespace pate {

double weighted_mean(const Vector& values, const Vector& w) { return w.dot(values) / w.sum(); }

double weighted_covariance(const Vector& a, const Vector& b, const Vector& w) {
    if (a.size() != b.size() || a.size() != w.size() || a.size() < 2) {
        throw Error(ErrorKind::InvalidInput, "weighted_covariance", "need equal lengths of at least 2");
    }
    const Vector wn = linalg::mean_one(w);
    const double ma = weighted_mean(a, wn);
    const double mb = weighted_mean(b, wn);
    double s = 0.0;
    for (Index i = 0; i < a.size(); ++i) s += wn(i) * wn(i) * (a(i) - ma) * (b(i) - mb);
    return s / static_cast<double>(a.size());
}

double weighted_variance(const Vector& values, const Vector& w) { return weighted_covariance(values, values, w); }

namespace {

void check_p(double p, const char* op) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidInput, op, "p must lie in (0, 1)");
}

}  // namespace

double asy_var_hajek(const Vector& y1, const Vector& w1, const Vector& y0, const Vector& w0, double p) {
    check_p(p, "asy_var_hajek");
    return weighted_variance(y1, w1) / p + weighted_variance(y0, w0) / (1.0 - p);
}

double efficiency_gain_weighted(const ArmData& treated, const ArmData& control, double p) {
    check_p(p, "efficiency_gain_weighted");
    const double q = 1.0 - p;
    const double v1 = weighted_variance(treated.predicted, treated.w);
    const double v0 = weighted_variance(control.predicted, control.w);
    const double c1 = weighted_covariance(treated.outcome, treated.predicted, treated.w);
    const double c0 = weighted_covariance(control.outcome, control.predicted, control.w);
    return -v1 / p - v0 / q + 2.0 * c1 / p + 2.0 * c0 / q;
}

double relative_reduction(double r2_0, double r2_1, double f) {
    const double xi = r2_0 - r2_1;
    return r2_0 - xi / (1.0 + f);
}

ArmFit xi_f_from_moments(const ArmData& treated, const ArmData& control, double p) {
    check_p(p, "xi_f_from_moments");
    const double var1 = weighted_variance(treated.outcome, treated.w);
    const double var0 = weighted_variance(control.outcome, control.w);
    ArmFit out;
    out.r2_1 = 1.0 - weighted_variance(treated.outcome - treated.predicted, treated.w) / var1;
    out.r2_0 = 1.0 - weighted_variance(control.outcome - control.predicted, control.w) / var0;
    out.xi = out.r2_0 - out.r2_1;
    out.f = p * var0 / ((1.0 - p) * var1);
    return out;
}

WlsGain efficiency_gain_wls(const WlsArmData& treated, const WlsArmData& control, double p) {
    check_p(p, "efficiency_gain_wls");
    const double q = 1.0 - p;
    auto arm_a = [](const WlsArmData& a) {
        return weighted_variance(a.outcome - a.adjustment, a.w) - weighted_variance(a.residual, a.w);
    };
    WlsGain g;
    g.term_a = arm_a(treated) / p + arm_a(control) / q;
    g.term_b = 2.0 * weighted_covariance(treated.residual, treated.residual_adjustment, treated.w) / p +
               2.0 * weighted_covariance(control.residual, control.residual_adjustment, control.w) / q -
               weighted_variance(treated.residual_adjustment, treated.w) / p -
               weighted_variance(control.residual_adjustment, control.w) / q;
    g.total = g.term_a + g.term_b;
    return g;
}

Vector adjustment_coefficients(const ExperimentalSample& exp, const Vector& w, const Vector& outcome,
                               const Matrix& extra) {
    if (extra.cols() == 0) return Vector();
    Matrix design(exp.size(), extra.cols() + 2);
    design.col(0).setOnes();
    design.col(1) = exp.treatment;
    design.rightCols(extra.cols()) = extra;
    const auto fit = linalg::weighted_least_squares(design, outcome, linalg::mean_one(w), linalg::RankPolicy::Throw,
                                                    "adjustment_coefficients");
    return fit.coef.tail(extra.cols());
}

OracleReport oracle_report(const ExperimentalSample& exp, const Vector& w, const Vector& predicted,
                           const Matrix& extra) {
    const ArmSplit arms = split_by_arm(exp);
    if (arms.treated.size() < 2 || arms.control.size() < 2) {
        throw Error(ErrorKind::DegenerateArm, "oracle_report", "each arm needs at least 2 units");
    }
    const double p = static_cast<double>(arms.treated.size()) / static_cast<double>(exp.size());
    auto arm = [&](const std::vector<Index>& idx) {
        return ArmData{linalg::take(exp.outcome, idx), linalg::take(predicted, idx), linalg::take(w, idx)};
    };
    const ArmData t = arm(arms.treated);
    const ArmData c = arm(arms.control);

    OracleReport r;
    r.gain_weighted = efficiency_gain_weighted(t, c, p);
    r.asy_var_weighted = asy_var_hajek(t.outcome, t.w, c.outcome, c.w, p);
    const ArmFit fit = xi_f_from_moments(t, c, p);
    r.r2_0 = fit.r2_0;
    r.r2_1 = fit.r2_1;
    r.xi = fit.xi;
    r.f = fit.f;
    r.relative_reduction = relative_reduction(fit.r2_0, fit.r2_1, fit.f);

    const Vector resid = exp.outcome - predicted;
    Vector adj = Vector::Zero(exp.size());
    Vector adj_res = Vector::Zero(exp.size());
    if (extra.cols() > 0) {
        adj = extra * adjustment_coefficients(exp, w, exp.outcome, extra);
        adj_res = extra * adjustment_coefficients(exp, w, resid, extra);
    }
    auto wls_arm = [&](const std::vector<Index>& idx) {
        return WlsArmData{linalg::take(exp.outcome, idx), linalg::take(resid, idx), linalg::take(adj, idx),
                          linalg::take(adj_res, idx), linalg::take(w, idx)};
    };
    const WlsGain g = efficiency_gain_wls(wls_arm(arms.treated), wls_arm(arms.control), p);
    r.term_a = g.term_a;
    r.term_b = g.term_b;
    r.gain_total = g.total;
    return r;
}

}  // namespace pate
