#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tcause/timeseries.hpp"

namespace tcause {

// Intercept + target lags (alpha) + per-feature lags (beta, k x n).
struct VarxFit {
  double intercept = 0;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd beta;
  double residual_variance = 0;
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t nobs = 0;
  Eigen::VectorXd stderr_coef;  // same order as the design columns
  bool ridge = false;
};

// Rows of the regression start at t = m for AR and VARX alike, so nested
// fits share a sample; feature lags reaching before t = 0 take the feature
// mean. residual_variance = SSE / rows for both AR and VARX fits, which
// keeps VARX variance <= AR variance on the same data.
VarxFit fit_ar(const TimeSeries& y, std::size_t m);
VarxFit fit_varx(const TimeSeries& y, std::span<const TimeSeries> features, std::size_t m, std::size_t n);

struct GrangerParams {
  std::size_t m = 3;        // target autoregression order
  std::size_t min_lag = 1;  // feature lags tested: min_lag..max_lag
  std::size_t max_lag = 3;
  double significance = 0.05;
  bool standardize = true;
};

struct LagScore {
  std::size_t lag = 0;
  double delta_var = 0;     // normalized variance reduction, clamped at 0
  double p_value = 1;       // F-test, one added regressor
  double contribution = 0;  // delta_var when p_value < significance, else 0
};

struct CausalityScore {
  std::string feature;
  std::string target;
  std::vector<LagScore> per_lag;
  double total = 0;  // sum of per_lag contributions

  double contribution(std::size_t lag) const;
};

// Reference implementation: refits the restricted and unrestricted models
// with full OLS for every lag. Series must be aligned.
CausalityScore causality(const TimeSeries& y, const TimeSeries& f, const GrangerParams& params = {});

// Scores many features against one target. The restricted model is
// factorized once and each lagged feature column is projected onto its
// orthogonal complement, which yields the same variances as a refit.
class CausalityKernel {
 public:
  CausalityKernel(const TimeSeries& y, const GrangerParams& params);

  CausalityScore score(const TimeSeries& f) const;
  const GrangerParams& params() const { return params_; }
  const TimeSeries& target() const { return y_; }

 private:
  TimeSeries y_;
  GrangerParams params_;
  std::size_t first_row_ = 0;
  Eigen::MatrixXd q_;  // orthonormal basis of the restricted design
  Eigen::VectorXd resid_;
  double sse_r_ = 0;
  double y_energy_ = 0;
};

// All (target, feature) pairs, target-major. Serial reference and the
// OpenMP kernel must agree to rounding.
std::vector<CausalityScore> score_pairs_serial(std::span<const TimeSeries> targets,
                                               std::span<const TimeSeries> features,
                                               const GrangerParams& params);
std::vector<CausalityScore> score_pairs(std::span<const TimeSeries> targets,
                                        std::span<const TimeSeries> features,
                                        const GrangerParams& params, int threads = 0);

// feature<TAB>target<TAB>lag<TAB>delta_var<TAB>pvalue<TAB>total
void save_scores_tsv(const std::vector<CausalityScore>& scores, const std::filesystem::path& path);
// Contributions and totals are recomputed from delta_var and pvalue.
std::vector<CausalityScore> load_scores_tsv(const std::filesystem::path& path, double significance = 0.05);

}  // namespace tcause
