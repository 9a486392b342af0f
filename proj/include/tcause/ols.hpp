#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace tcause {

// Diagonal regularizer used when the design is rank deficient, relative to
// the mean diagonal of X^T X.
inline constexpr double kRidgeLambda = 1e-8;
// Column-pivoted QR threshold below which a pivot is treated as zero.
inline constexpr double kRankThreshold = 1e-10;

struct OlsResult {
  Eigen::VectorXd coef;
  Eigen::VectorXd stderr_coef;
  double sse = 0;
  std::size_t nobs = 0;
  bool ridge = false;
};

// Least squares fit of y on the columns of X. Falls back to ridge when X is
// rank deficient; throws SingularDesign if that also fails.
OlsResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

}  // namespace tcause
