#include "tcause/granger.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <boost/math/distributions/fisher_f.hpp>
#include <omp.h>

#include "tcause/error.hpp"
#include "tcause/format.hpp"
#include "tcause/ols.hpp"

namespace tcause {

namespace {

void require_aligned(const TimeSeries& y, const TimeSeries& x) {
  if (y.start() != x.start() || y.size() != x.size()) {
    fail(ErrorCode::NotAligned, "series '" + y.name() + "' and '" + x.name() + "' are not aligned");
  }
}

// Columns: 1, y_{t-1..t-m}, then f_{k,t-1..t-n} for each feature k.
// Rows: t = first_row .. T-1 with first_row >= m. Feature lags that fall
// before the start of the series take the feature's mean.
Eigen::MatrixXd lag_design(const TimeSeries& y, std::span<const TimeSeries> features, std::size_t m,
                           std::size_t n, std::size_t first_row) {
  const std::size_t rows = y.size() - first_row;
  const std::size_t cols = 1 + m + features.size() * n;
  std::vector<double> fill(features.size());
  for (std::size_t k = 0; k < features.size(); ++k) fill[k] = mean(features[k].values());
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = first_row + r;
    const auto ri = static_cast<Eigen::Index>(r);
    X(ri, 0) = 1.0;
    for (std::size_t j = 1; j <= m; ++j) X(ri, static_cast<Eigen::Index>(j)) = y[t - j];
    for (std::size_t k = 0; k < features.size(); ++k) {
      for (std::size_t i = 1; i <= n; ++i) {
        X(ri, static_cast<Eigen::Index>(1 + m + k * n + i - 1)) = t >= i ? features[k][t - i] : fill[k];
      }
    }
  }
  return X;
}

Eigen::VectorXd response(const TimeSeries& y, std::size_t first_row) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(y.size() - first_row));
  for (std::size_t t = first_row; t < y.size(); ++t) v(static_cast<Eigen::Index>(t - first_row)) = y[t];
  return v;
}

VarxFit to_fit(const OlsResult& r, std::size_t m, std::size_t n, std::size_t k) {
  VarxFit fit;
  fit.intercept = r.coef(0);
  fit.alpha = r.coef.segment(1, static_cast<Eigen::Index>(m));
  fit.beta.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      fit.beta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          r.coef(static_cast<Eigen::Index>(1 + m + i * n + j));
    }
  }
  fit.residual_variance = r.sse / static_cast<double>(r.nobs);
  fit.m = m;
  fit.n = n;
  fit.nobs = r.nobs;
  fit.stderr_coef = r.stderr_coef;
  fit.ridge = r.ridge;
  return fit;
}

double f_test_p_value(double sse_r, double sse_u, double df2) {
  const double gain = sse_r - sse_u;
  if (!(gain > 0)) return 1.0;
  if (sse_u <= 1e-15 * sse_r) return 0.0;
  const double F = gain / (sse_u / df2);
  boost::math::fisher_f dist(1.0, df2);
  return boost::math::cdf(boost::math::complement(dist, F));
}

std::size_t causality_first_row(const TimeSeries& y, const GrangerParams& p) {
  if (p.min_lag < 1 || p.max_lag < p.min_lag) fail(ErrorCode::InvalidParams, "causality: need 1 <= min_lag <= max_lag");
  const std::size_t first = std::max(p.m, p.max_lag);
  if (y.size() < p.m + 1 + 8 || y.size() < first + p.m + 3) {
    fail(ErrorCode::TooShort, "causality: series '" + y.name() + "' is too short for the lag orders");
  }
  return first;
}

LagScore make_lag_score(std::size_t lag, double sse_r, double sse_u, double df2, const GrangerParams& p,
                        double y_energy) {
  LagScore s;
  s.lag = lag;
  if (sse_r > 1e-24 * std::max(1.0, y_energy)) {
    s.delta_var = std::max(0.0, (sse_r - sse_u) / sse_r);
    s.p_value = s.delta_var > 0 ? f_test_p_value(sse_r, sse_u, df2) : 1.0;
  }
  s.contribution = s.p_value < p.significance ? s.delta_var : 0.0;
  return s;
}

double finish_total(CausalityScore& score) {
  score.total = 0;
  for (const auto& l : score.per_lag) score.total += l.contribution;
  return score.total;
}

}  // namespace

double CausalityScore::contribution(std::size_t lag) const {
  for (const auto& l : per_lag) {
    if (l.lag == lag) return l.contribution;
  }
  return 0.0;
}

VarxFit fit_ar(const TimeSeries& y, std::size_t m) {
  if (m == 0) fail(ErrorCode::InvalidParams, "fit_ar: m must be >= 1");
  if (y.size() < m + 8) fail(ErrorCode::TooShort, "fit_ar: need at least m + 8 observations");
  const auto X = lag_design(y, {}, m, 0, m);
  return to_fit(ols(X, response(y, m)), m, 0, 0);
}

VarxFit fit_varx(const TimeSeries& y, std::span<const TimeSeries> features, std::size_t m, std::size_t n) {
  if (m == 0 || (n == 0 && !features.empty())) fail(ErrorCode::InvalidParams, "fit_varx: lag orders must be >= 1");
  for (const auto& f : features) require_aligned(y, f);
  const std::size_t k = features.size();
  if (y.size() < m + k * n + 8) fail(ErrorCode::TooShort, "fit_varx: need at least m + k*n + 8 observations");
  const auto X = lag_design(y, features, m, n, m);
  return to_fit(ols(X, response(y, m)), m, n, k);
}

CausalityScore causality(const TimeSeries& y_in, const TimeSeries& f_in, const GrangerParams& p) {
  require_aligned(y_in, f_in);
  const std::size_t first = causality_first_row(y_in, p);
  const TimeSeries y = p.standardize ? standardize(y_in) : y_in;
  const TimeSeries f = p.standardize ? standardize(f_in) : f_in;

  const Eigen::VectorXd target = response(y, first);
  const Eigen::MatrixXd Z = lag_design(y, {}, p.m, 0, first);
  const double sse_r = ols(Z, target).sse;
  const double df2 = static_cast<double>(target.size()) - static_cast<double>(p.m + 2);

  CausalityScore score{f_in.name(), y_in.name(), {}, 0};
  for (std::size_t lag = p.min_lag; lag <= p.max_lag; ++lag) {
    Eigen::MatrixXd X(Z.rows(), Z.cols() + 1);
    X.leftCols(Z.cols()) = Z;
    for (Eigen::Index r = 0; r < Z.rows(); ++r) X(r, Z.cols()) = f[first + static_cast<std::size_t>(r) - lag];
    const double sse_u = ols(X, target).sse;
    score.per_lag.push_back(make_lag_score(lag, sse_r, sse_u, df2, p, target.squaredNorm()));
  }
  finish_total(score);
  return score;
}

CausalityKernel::CausalityKernel(const TimeSeries& y_in, const GrangerParams& params)
    : y_(y_in), params_(params) {
  first_row_ = causality_first_row(y_in, params);
  const TimeSeries y = params.standardize ? standardize(y_in) : y_in;
  const Eigen::VectorXd target = response(y, first_row_);
  const Eigen::MatrixXd Z = lag_design(y, {}, params.m, 0, first_row_);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
  qr.setThreshold(kRankThreshold);
  const Eigen::MatrixXd full_q = qr.householderQ();
  q_ = full_q.leftCols(qr.rank());
  resid_ = target - q_ * (q_.transpose() * target);
  y_energy_ = target.squaredNorm();
  sse_r_ = resid_.squaredNorm();
}

CausalityScore CausalityKernel::score(const TimeSeries& f_in) const {
  require_aligned(y_, f_in);
  const TimeSeries f = params_.standardize ? standardize(f_in) : f_in;
  const Eigen::Index rows = resid_.size();
  const double df2 = static_cast<double>(rows) - static_cast<double>(params_.m + 2);

  CausalityScore score{f_in.name(), y_.name(), {}, 0};
  Eigen::VectorXd x(rows);
  for (std::size_t lag = params_.min_lag; lag <= params_.max_lag; ++lag) {
    for (Eigen::Index r = 0; r < rows; ++r) x(r) = f[first_row_ + static_cast<std::size_t>(r) - lag];
    const double xx_raw = x.squaredNorm();
    const Eigen::VectorXd xt = x - q_ * (q_.transpose() * x);
    const double xx = xt.squaredNorm();
    double sse_u = sse_r_;
    if (xx > 1e-12 * std::max(xx_raw, 1e-300)) {
      const double proj = xt.dot(resid_);
      sse_u = std::max(0.0, sse_r_ - proj * proj / xx);
    }
    score.per_lag.push_back(make_lag_score(lag, sse_r_, sse_u, df2, params_, y_energy_));
  }
  finish_total(score);
  return score;
}

std::vector<CausalityScore> score_pairs_serial(std::span<const TimeSeries> targets,
                                               std::span<const TimeSeries> features,
                                               const GrangerParams& params) {
  std::vector<CausalityScore> out;
  out.reserve(targets.size() * features.size());
  for (const auto& y : targets) {
    for (const auto& f : features) out.push_back(causality(y, f, params));
  }
  return out;
}

std::vector<CausalityScore> score_pairs(std::span<const TimeSeries> targets,
                                        std::span<const TimeSeries> features,
                                        const GrangerParams& params, int threads) {
  const int nt = threads > 0 ? threads : omp_get_max_threads();
  std::vector<CausalityKernel> kernels;
  kernels.reserve(targets.size());
  for (const auto& y : targets) kernels.emplace_back(y, params);

  const auto nf = static_cast<std::ptrdiff_t>(features.size());
  const auto total = static_cast<std::ptrdiff_t>(targets.size()) * nf;
  std::vector<CausalityScore> out(static_cast<std::size_t>(total));
  // Each slot is written by exactly one iteration; errors are rethrown after
  // the parallel region in index order.
  std::vector<std::string> errors(static_cast<std::size_t>(total));
  std::vector<ErrorCode> codes(static_cast<std::size_t>(total), ErrorCode::InvalidParams);
#pragma omp parallel for num_threads(nt) schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < total; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    try {
      out[ui] = kernels[static_cast<std::size_t>(i / nf)].score(features[static_cast<std::size_t>(i % nf)]);
    } catch (const Error& e) {
      errors[ui] = e.what();
      codes[ui] = e.code();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) fail(codes[i], errors[i]);
  }
  return out;
}

void save_scores_tsv(const std::vector<CausalityScore>& scores, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << "feature\ttarget\tlag\tdelta_var\tpvalue\ttotal\n";
  for (const auto& s : scores) {
    for (const auto& l : s.per_lag) {
      out << s.feature << '\t' << s.target << '\t' << l.lag << '\t' << format_real(l.delta_var) << '\t'
          << format_real(l.p_value) << '\t' << format_real(s.total) << '\n';
    }
  }
}

std::vector<CausalityScore> load_scores_tsv(const std::filesystem::path& path, double significance) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<CausalityScore> out;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto c = split(line, '\t');
    if (c.size() != 6) fail(ErrorCode::InvalidInput, path.string() + ": expected 6 columns");
    const auto key = std::make_pair(c[0], c[1]);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      out.push_back(CausalityScore{c[0], c[1], {}, parse_double(c[5])});
    }
    LagScore l;
    l.lag = static_cast<std::size_t>(parse_double(c[2]));
    l.delta_var = parse_double(c[3]);
    l.p_value = parse_double(c[4]);
    out[it->second].per_lag.push_back(l);
  }
  for (auto& s : out) {
    for (auto& l : s.per_lag) l.contribution = l.p_value < significance ? l.delta_var : 0.0;
    finish_total(s);
  }
  return out;
}

}  // namespace tcause
