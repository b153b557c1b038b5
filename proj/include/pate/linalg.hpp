#pragma once

#include <Eigen/Dense>

#include <string_view>
#include <vector>

namespace pate {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace linalg {

// Relative rank tolerance: pivots below this fraction of the largest one are
// treated as zero.
inline constexpr double kRankTolerance = 1e-10;

enum class RankPolicy { Throw, MinimalNorm };

struct WlsFit {
    Vector coef;
    Vector residuals;  // y - D * coef, on the unweighted scale
    Index rank = 0;
    bool rank_deficient = false;
};

/// Weighted least squares of y on the columns of `design` with weights w,
/// solved through a column-pivoting QR of the sqrt(w)-scaled design.
/// Under RankPolicy::Throw a rank-deficient design raises RankDeficient
/// (attributed to `op`); under MinimalNorm the minimum-norm solution is
/// returned and flagged.
WlsFit weighted_least_squares(const Matrix& design, const Vector& y, const Vector& w,
                              RankPolicy policy, std::string_view op);

/// HC2 sandwich standard errors for every coefficient of a weighted fit.
/// A = (D'WD)^-1, h_i = w_i d_i' A d_i, meat = sum w_i^2 r_i^2 / (1 - h_i) d_i d_i'.
Vector hc2_standard_errors(const Matrix& design, const Vector& w, const Vector& residuals,
                           std::string_view op = "hc2_sandwich_se");

/// Rescales weights to mean one.
Vector mean_one(const Vector& w);

/// Standard normal quantile.
double normal_quantile(double p);

/// Gathers rows (or entries) by index.
Matrix take_rows(const Matrix& m, const std::vector<Index>& rows);
Vector take(const Vector& v, const std::vector<Index>& rows);

}  // namespace linalg
}  // namespace pate
