#include "tcause/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <omp.h>

#include "tcause/error.hpp"
#include "tcause/format.hpp"
#include "tcause/random.hpp"

namespace tcause {

std::vector<double> forecast_varx(const VarxFit& fit, std::span<const double> history,
                                  const std::vector<std::span<const double>>& feature_histories, std::size_t steps) {
  const auto k = static_cast<std::size_t>(fit.beta.rows());
  if (feature_histories.size() != k) {
    fail(ErrorCode::InvalidParams, "forecast_varx: feature count does not match the fit");
  }
  if (static_cast<std::size_t>(fit.alpha.size()) != fit.m) fail(ErrorCode::InvalidParams, "forecast_varx: bad fit");
  if (history.size() < fit.m) fail(ErrorCode::InsufficientHistory, "forecast_varx: target history shorter than m");
  for (const auto& f : feature_histories) {
    if (f.size() < fit.n || f.empty()) {
      fail(ErrorCode::InsufficientHistory, "forecast_varx: feature history shorter than n");
    }
  }
  std::vector<double> y(history.end() - static_cast<std::ptrdiff_t>(fit.m), history.end());
  std::vector<double> out;
  out.reserve(steps);
  for (std::size_t h = 1; h <= steps; ++h) {
    double v = fit.intercept;
    for (std::size_t j = 1; j <= fit.m; ++j) v += fit.alpha(static_cast<Eigen::Index>(j - 1)) * y[y.size() - j];
    for (std::size_t i = 0; i < k; ++i) {
      const auto& f = feature_histories[i];
      for (std::size_t l = 1; l <= fit.n; ++l) {
        // f_{T-1+h-l}; indices past the end hold the last observation
        const std::size_t back = l >= h ? l - h + 1 : 0;
        const double x = back == 0 ? f.back() : f[f.size() - back];
        v += fit.beta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l - 1)) * x;
      }
    }
    out.push_back(v);
    y.push_back(v);
  }
  return out;
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || pred.empty()) {
    fail(ErrorCode::LengthMismatch, "rmse: need equal non-empty lengths");
  }
  double ss = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ss += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return std::sqrt(ss / static_cast<double>(pred.size()));
}

void BacktestConfig::validate() const {
  if (m == 0 || n == 0) fail(ErrorCode::InvalidParams, "backtest: lag orders must be >= 1");
  if (stride_days == 0) fail(ErrorCode::InvalidParams, "backtest: stride must be >= 1");
  if (window_days <= std::max(m, n) + 8) fail(ErrorCode::InvalidParams, "backtest: window must exceed max(m, n) + 8");
  if (steps.empty()) fail(ErrorCode::InvalidParams, "backtest: no steps");
  for (auto s : steps) {
    if (s < 1 || s >= window_days) fail(ErrorCode::InvalidParams, "backtest: steps must lie in 1..window-1");
  }
}

std::size_t BacktestConfig::max_step() const { return *std::max_element(steps.begin(), steps.end()); }

std::size_t BacktestConfig::max_features() const {
  std::size_t k = 0;
  while (window_days >= m + (k + 1) * n + 8) ++k;
  return k;
}

double BacktestReport::at(const std::string& method, std::size_t step) const {
  const auto it = rmse.find(method);
  if (it == rmse.end()) fail(ErrorCode::InvalidParams, "no backtest method '" + method + "'");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i] == step) return it->second[i];
  }
  fail(ErrorCode::InvalidParams, "no backtest step " + std::to_string(step));
}

std::vector<TimeSeries> random_features(const TimeSeries& y, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TimeSeries> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> v(y.size());
    for (auto& x : v) x = rng.normal();
    out.emplace_back(y.start(), std::move(v), "random_" + std::to_string(i));
  }
  return out;
}

double spike_value(const SpikeParams& p, std::size_t t) {
  if (t == p.onset) return p.strength;
  if (t < p.onset) {
    const std::size_t r = p.onset - t;
    if (r >= p.rise_days) return 0.0;
    return p.strength * (1.0 - static_cast<double>(r) / static_cast<double>(p.rise_days));
  }
  return p.strength * std::pow(static_cast<double>(t - p.onset + 1), -p.decay_exponent);
}

SpikeFit fit_spike(std::span<const double> y, std::size_t horizon) {
  if (y.size() < 3) fail(ErrorCode::TooShort, "fit_spike: need at least 3 observations");
  static constexpr std::size_t kRise[] = {1, 2, 3, 5};
  static constexpr double kDecay[] = {0.5, 1.0, 1.5, 2.0};
  const auto T = y.size();
  const double ybar = [&] {
    double s = 0;
    for (double v : y) s += v;
    return s / static_cast<double>(T);
  }();
  double sst = 0;
  for (double v : y) sst += (v - ybar) * (v - ybar);

  SpikeFit best{{0, 0.0, 1, 1.0}, ybar, sst};
  std::vector<double> s(T);
  for (std::size_t onset = 0; onset < T + horizon; ++onset) {
    for (auto rise : kRise) {
      for (double decay : kDecay) {
        const SpikeParams p{onset, 1.0, rise, decay};
        double sbar = 0;
        for (std::size_t t = 0; t < T; ++t) sbar += (s[t] = spike_value(p, t));
        sbar /= static_cast<double>(T);
        double sxy = 0, sxx = 0;
        for (std::size_t t = 0; t < T; ++t) {
          sxy += (s[t] - sbar) * (y[t] - ybar);
          sxx += (s[t] - sbar) * (s[t] - sbar);
        }
        if (sxx <= 1e-300) continue;
        const double a = std::max(0.0, sxy / sxx);
        const double sse = sst - a * (2 * sxy - a * sxx);
        if (sse < best.sse - 1e-12 * std::max(1.0, sst)) best = {{onset, a, rise, decay}, ybar - a * sbar, sse};
      }
    }
  }
  return best;
}

namespace {

std::vector<TimeSeries> slice_all(const std::vector<TimeSeries>& fs, std::size_t lo, std::size_t len) {
  std::vector<TimeSeries> out;
  out.reserve(fs.size());
  for (const auto& f : fs) out.push_back(f.slice(lo, len));
  return out;
}

}  // namespace

BacktestReport backtest(const TimeSeries& y, const FeatureSets& features, const BacktestConfig& cfg, int threads) {
  cfg.validate();
  const std::size_t W = cfg.window_days, H = cfg.max_step(), T = y.size();
  if (T < W + H) fail(ErrorCode::SeriesTooShort, "backtest: series shorter than window + max step");
  const std::size_t cap = cfg.max_features();
  const auto capped = [&](const std::vector<TimeSeries>& fs) {
    for (const auto& f : fs) {
      if (f.start() != y.start() || f.size() != y.size()) {
        fail(ErrorCode::NotAligned, "backtest: feature '" + f.name() + "' is not aligned with the target");
      }
    }
    return std::vector<TimeSeries>(fs.begin(), fs.begin() + static_cast<std::ptrdiff_t>(std::min(cap, fs.size())));
  };
  const auto& methods = backtest_methods();
  const std::vector<std::vector<TimeSeries>> sets{{},
                                                  {},
                                                  capped(features.random),
                                                  capped(features.words),
                                                  capped(features.topics),
                                                  capped(features.senti),
                                                  capped(features.composition)};

  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + W + H <= T; s += cfg.stride_days) starts.push_back(s);
  const std::size_t nm = methods.size(), ns = cfg.steps.size();
  // squared errors indexed [window][method][step]
  std::vector<double> sq(starts.size() * nm * ns, 0.0);
  std::vector<std::string> errors(starts.size());
  std::vector<ErrorCode> codes(starts.size(), ErrorCode::InvalidParams);

  const int nt = threads > 0 ? threads : omp_get_max_threads();
  const auto nw = static_cast<std::ptrdiff_t>(starts.size());
#pragma omp parallel for num_threads(nt) schedule(dynamic, 1)
  for (std::ptrdiff_t wi = 0; wi < nw; ++wi) {
    const auto w = static_cast<std::size_t>(wi);
    try {
      const std::size_t s = starts[w];
      const TimeSeries yw = y.slice(s, W);
      const auto truth = [&](std::size_t step) { return y[s + W - 1 + step]; };
      for (std::size_t mi = 0; mi < nm; ++mi) {
        std::vector<double> pred;
        if (methods[mi] == "spike_model") {
          const auto fit = fit_spike(yw.values(), H);
          for (std::size_t h = 1; h <= H; ++h) pred.push_back(fit.baseline + spike_value(fit.params, W - 1 + h));
        } else {
          const auto fw = slice_all(sets[mi], s, W);
          const VarxFit fit = fw.empty() ? fit_ar(yw, cfg.m) : fit_varx(yw, fw, cfg.m, cfg.n);
          std::vector<std::span<const double>> hist;
          for (const auto& f : fw) hist.push_back(f.values());
          pred = forecast_varx(fit, yw.values(), hist, H);
        }
        for (std::size_t si = 0; si < ns; ++si) {
          const double e = pred[cfg.steps[si] - 1] - truth(cfg.steps[si]);
          sq[(w * nm + mi) * ns + si] = e * e;
        }
      }
    } catch (const Error& e) {
      errors[w] = e.what();
      codes[w] = e.code();
    }
  }
  for (std::size_t w = 0; w < errors.size(); ++w) {
    if (!errors[w].empty()) fail(codes[w], errors[w]);
  }

  BacktestReport rep;
  rep.steps = cfg.steps;
  rep.windows = starts.size();
  for (std::size_t mi = 0; mi < nm; ++mi) {
    std::vector<double> cells(ns);
    for (std::size_t si = 0; si < ns; ++si) {
      double sum = 0;
      for (std::size_t w = 0; w < starts.size(); ++w) sum += sq[(w * nm + mi) * ns + si];
      cells[si] = std::sqrt(sum / static_cast<double>(starts.size()));
    }
    rep.rmse[methods[mi]] = std::move(cells);
  }
  return rep;
}

void write_backtest_tsv(const BacktestReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << "method";
  for (auto s : report.steps) out << "\tstep_" << s;
  out << '\n';
  for (const auto& m : backtest_methods()) {
    out << m;
    for (double v : report.rmse.at(m)) out << '\t' << format_real(v);
    out << '\n';
  }
}

TimeSeries spike_feature(const TimeSeries& y, std::size_t onset, double strength, std::size_t spike_days,
                         const std::string& name) {
  if (spike_days < 2) fail(ErrorCode::InvalidParams, "spike_days must be >= 2");
  const SpikeParams p{onset, strength, 1, 1.5};
  std::vector<double> v(y.size(), 0.0);
  for (std::size_t t = onset; t < std::min(y.size(), onset + spike_days); ++t) v[t] = spike_value(p, t);
  return TimeSeries(y.start(), std::move(v), name);
}

std::vector<RandomAnalysisRow> random_analysis(const TimeSeries& y, const RandomAnalysisConfig& cfg, int threads) {
  if (cfg.n_features == 0 || cfg.lag == 0 || cfg.spike_days < 2 || !(cfg.min_strength > 0) ||
      cfg.max_strength < cfg.min_strength) {
    fail(ErrorCode::InvalidParams, "random_analysis: invalid configuration");
  }
  const std::size_t T = y.size();
  if (T <= cfg.window) fail(ErrorCode::SeriesTooShort, "random_analysis: series not longer than the window");
  const std::size_t stride = cfg.stride > 0 ? cfg.stride : std::max<std::size_t>(1, T / cfg.n_features);
  const auto peak = static_cast<std::ptrdiff_t>(
      std::max_element(y.values().begin(), y.values().end()) - y.values().begin());

  Rng rng(cfg.seed);
  std::vector<RandomAnalysisRow> proto;
  for (std::size_t i = 0; i < cfg.n_features; ++i) {
    const std::size_t onset = i * stride;
    if (onset >= T) break;
    RandomAnalysisRow r;
    r.onset = onset;
    r.offset = peak - static_cast<std::ptrdiff_t>(onset);
    r.spike = {onset, rng.uniform(cfg.min_strength, cfg.max_strength), 1, 1.5};
    proto.push_back(r);
  }

  GrangerParams gp;
  gp.m = cfg.m;
  gp.min_lag = gp.max_lag = cfg.lag;
  std::vector<RandomAnalysisRow> rows(proto.size() * 2);
  std::vector<std::string> errors(proto.size());
  std::vector<ErrorCode> codes(proto.size(), ErrorCode::InvalidParams);
  const int nt = threads > 0 ? threads : omp_get_max_threads();
  const auto n = static_cast<std::ptrdiff_t>(proto.size());
#pragma omp parallel for num_threads(nt) schedule(dynamic, 4)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    try {
      const auto& p = proto[i];
      const auto f = spike_feature(y, p.onset, p.spike.strength, cfg.spike_days, "spike_" + std::to_string(i));
      const std::size_t half = cfg.window / 2;
      const std::size_t lo = std::min(p.onset >= half ? p.onset - half : 0, T - cfg.window);
      const auto yw = y.slice(lo, cfg.window);
      const auto fw = f.slice(lo, cfg.window);
      rows[2 * i] = p;
      rows[2 * i].direction = "feature_to_target";
      rows[2 * i].causality = causality(yw, fw, gp).total;
      rows[2 * i + 1] = p;
      rows[2 * i + 1].direction = "target_to_feature";
      rows[2 * i + 1].causality = causality(fw, yw, gp).total;
    } catch (const Error& e) {
      errors[i] = e.what();
      codes[i] = e.code();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) fail(codes[i], errors[i]);
  }
  return rows;
}

void write_random_analysis_csv(const std::vector<RandomAnalysisRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << "offset,strength,direction,causality\n";
  for (const auto& r : rows) {
    out << r.offset << ',' << format_real(r.spike.strength) << ',' << r.direction << ',' << format_real(r.causality)
        << '\n';
  }
}

void write_random_analysis_svg(const TimeSeries& y, const std::vector<RandomAnalysisRow>& rows,
                               const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  constexpr double Wd = 800, Ht = 300, pad = 30;
  const double T = static_cast<double>(std::max<std::size_t>(2, y.size()));
  const auto xpos = [&](double t) { return pad + (Wd - 2 * pad) * t / (T - 1); };
  const auto ypos = [&](double v) { return Ht - pad - (Ht - 2 * pad) * std::clamp(v, 0.0, 1.0); };
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : y.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi > lo ? hi - lo : 1.0;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Wd << "\" height=\"" << Ht << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<polyline fill=\"none\" stroke=\"#999\" stroke-width=\"1\" points=\"";
  for (std::size_t t = 0; t < y.size(); ++t) {
    out << format_real(xpos(static_cast<double>(t))) << ',' << format_real(ypos((y[t] - lo) / span)) << ' ';
  }
  out << "\"/>\n";
  for (const auto& [dir, color] : {std::pair{"feature_to_target", "#c0392b"}, std::pair{"target_to_feature", "#2471a3"}}) {
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& r : rows) {
      if (r.direction != dir) continue;
      out << format_real(xpos(static_cast<double>(r.onset))) << ',' << format_real(ypos(r.causality)) << ' ';
    }
    out << "\"/>\n";
  }
  out << "<text x=\"" << pad << "\" y=\"18\" font-size=\"12\" font-family=\"sans-serif\">"
      << "causality by spike onset (red: feature to target, blue: target to feature, grey: target)</text>\n";
  out << "</svg>\n";
}

}  // namespace tcause
