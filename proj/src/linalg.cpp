#include "pate/linalg.hpp"

#include "pate/error.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace pate {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::Separation: return "Separation";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::EmptyFitSubset: return "EmptyFitSubset";
    case ErrorKind::ColumnMismatch: return "ColumnMismatch";
    case ErrorKind::DegenerateArm: return "DegenerateArm";
    case ErrorKind::PoolTooSmall: return "PoolTooSmall";
    case ErrorKind::NotConverged: return "NotConverged";
    }
    return "Unknown";
}

namespace linalg {

namespace {

Matrix scale_rows(const Matrix& design, const Vector& root_w) {
    return root_w.asDiagonal() * design;
}

void check_inputs(const Matrix& design, const Vector& y, const Vector& w, std::string_view op) {
    if (design.rows() != y.size() || design.rows() != w.size()) {
        throw Error(ErrorKind::InvalidInput, std::string(op), "design, outcome and weights differ in length");
    }
    if (design.cols() == 0) {
        throw Error(ErrorKind::InvalidInput, std::string(op), "empty design");
    }
    if ((w.array() < 0.0).any() || !w.allFinite()) {
        throw Error(ErrorKind::InvalidInput, std::string(op), "weights must be finite and non-negative");
    }
}

}  // namespace

WlsFit weighted_least_squares(const Matrix& design, const Vector& y, const Vector& w,
                              RankPolicy policy, std::string_view op) {
    check_inputs(design, y, w, op);
    const Vector root_w = w.array().sqrt();
    const Matrix xw = scale_rows(design, root_w);
    const Vector yw = root_w.cwiseProduct(y);

    WlsFit fit;
    Eigen::ColPivHouseholderQR<Matrix> qr(xw);
    qr.setThreshold(kRankTolerance);
    fit.rank = qr.rank();
    if (fit.rank < design.cols()) {
        if (policy == RankPolicy::Throw) {
            throw Error(ErrorKind::RankDeficient, std::string(op),
                        "design rank " + std::to_string(fit.rank) + " < " + std::to_string(design.cols()) +
                            " columns");
        }
        fit.rank_deficient = true;
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(xw);
        cod.setThreshold(kRankTolerance);
        fit.coef = cod.solve(yw);
    } else {
        fit.coef = qr.solve(yw);
    }
    fit.residuals = y - design * fit.coef;
    return fit;
}

Vector hc2_standard_errors(const Matrix& design, const Vector& w, const Vector& residuals,
                           std::string_view op) {
    check_inputs(design, residuals, w, op);
    const Index k = design.cols();
    const Vector root_w = w.array().sqrt();
    Eigen::ColPivHouseholderQR<Matrix> qr(scale_rows(design, root_w));
    qr.setThreshold(kRankTolerance);
    if (qr.rank() < k) {
        throw Error(ErrorKind::RankDeficient, std::string(op), "weighted design is not full rank");
    }
    const Matrix r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    const Matrix r_inv = r.triangularView<Eigen::Upper>().solve(Matrix::Identity(k, k));
    const auto& perm = qr.colsPermutation();
    const Matrix bread = perm * (r_inv * r_inv.transpose()) * perm.transpose();

    const Matrix u = design * bread;
    Vector meat_w(design.rows());
    for (Index i = 0; i < design.rows(); ++i) {
        double h = w(i) * u.row(i).dot(design.row(i));
        h = std::min(h, 1.0 - 1e-10);
        meat_w(i) = w(i) * w(i) * residuals(i) * residuals(i) / (1.0 - h);
    }
    const Matrix meat = design.transpose() * meat_w.asDiagonal() * design;
    const Matrix v = bread * meat * bread;
    return v.diagonal().cwiseMax(0.0).cwiseSqrt();
}

Vector mean_one(const Vector& w) {
    return w / w.mean();
}

double normal_quantile(double p) {
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows) {
    Matrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Index>(i)) = m.row(rows[i]);
    }
    return out;
}

Vector take(const Vector& v, const std::vector<Index>& rows) {
    Vector out(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out(static_cast<Index>(i)) = v(rows[i]);
    }
    return out;
}

}  // namespace linalg
}  // namespace pate
