#include "tcause/ols.hpp"

#include <cmath>
#include <limits>

#include "tcause/error.hpp"

namespace tcause {

OlsResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size() || X.rows() == 0 || X.cols() == 0) {
    fail(ErrorCode::InvalidParams, "ols: design/response size mismatch");
  }
  OlsResult out;
  out.nobs = static_cast<std::size_t>(X.rows());
  const Eigen::Index p = X.cols();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(kRankThreshold);
  Eigen::MatrixXd gram = X.transpose() * X;
  if (qr.rank() == p) {
    out.coef = qr.solve(y);
  } else {
    const double scale = gram.diagonal().mean();
    if (!(scale > 0) || !std::isfinite(scale)) fail(ErrorCode::SingularDesign, "ols: design is all zeros");
    gram.diagonal().array() += kRidgeLambda * scale;
    out.coef = gram.ldlt().solve(X.transpose() * y);
    out.ridge = true;
  }
  if (!out.coef.allFinite()) fail(ErrorCode::SingularDesign, "ols: no finite solution");

  const Eigen::VectorXd resid = y - X * out.coef;
  out.sse = resid.squaredNorm();

  const auto dof = X.rows() - p;
  if (dof > 0) {
    const double sigma2 = out.sse / static_cast<double>(dof);
    const Eigen::MatrixXd inv = gram.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    out.stderr_coef = (sigma2 * inv.diagonal().array().max(0.0)).sqrt();
  } else {
    out.stderr_coef = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::infinity());
  }
  return out;
}

}  // namespace tcause
