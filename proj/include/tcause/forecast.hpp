#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tcause/granger.hpp"
#include "tcause/timeseries.hpp"

namespace tcause {

// Iterated forecast for horizons 1..steps. Predictions are fed back as target
// lags; features stay at their last observed value.
std::vector<double> forecast_varx(const VarxFit& fit, std::span<const double> history,
                                  const std::vector<std::span<const double>>& feature_histories, std::size_t steps);

double rmse(std::span<const double> pred, std::span<const double> truth);

struct BacktestConfig {
  std::size_t window_days = 30;
  std::size_t stride_days = 10;
  std::vector<std::size_t> steps{1, 3, 5};
  std::size_t m = 3;
  std::size_t n = 3;

  void validate() const;
  std::size_t max_step() const;
  // Largest regressor count the window can support for (m, n).
  std::size_t max_features() const;
};

// Regressor sets per method. Every series must be aligned with the target.
struct FeatureSets {
  std::vector<TimeSeries> random;
  std::vector<TimeSeries> words;
  std::vector<TimeSeries> topics;
  std::vector<TimeSeries> senti;
  std::vector<TimeSeries> composition;
};

inline const std::vector<std::string>& backtest_methods() {
  static const std::vector<std::string> m{"ar_only",    "spike_model", "varx_random",     "varx_words",
                                          "varx_topics", "varx_senti", "varx_composition"};
  return m;
}

struct BacktestReport {
  std::vector<std::size_t> steps;
  std::size_t windows = 0;
  // method -> one RMSE per configured step: square root of the mean squared
  // forecast error over all windows
  std::map<std::string, std::vector<double>> rmse;

  double at(const std::string& method, std::size_t step) const;
};

// Seeded N(0, 1) series aligned with y, named random_0, random_1, ...
std::vector<TimeSeries> random_features(const TimeSeries& y, std::size_t count, std::uint64_t seed);

// Windows start at 0, stride, ...; each fits on window_days values and is
// scored at every step. Windows run in parallel and are reduced in order.
// Feature sets larger than max_features() keep their leading entries.
BacktestReport backtest(const TimeSeries& y, const FeatureSets& features, const BacktestConfig& cfg, int threads = 0);
void write_backtest_tsv(const BacktestReport& report, const std::filesystem::path& path);

// Spike-generator stand-in for a spike forecasting model: grid search over
// onset, rise and decay with least-squares baseline and strength >= 0.
struct SpikeFit {
  SpikeParams params;
  double baseline = 0;
  double sse = 0;
};
SpikeFit fit_spike(std::span<const double> y, std::size_t horizon);
double spike_value(const SpikeParams& p, std::size_t t);

struct RandomAnalysisConfig {
  std::size_t n_features = 60;
  std::size_t window = 30;  // local causality window around each spike
  std::size_t lag = 3;
  std::size_t spike_days = 5;
  std::size_t stride = 0;  // onset spacing; 0 spreads the features over the series
  std::size_t m = 3;
  double min_strength = 0.5;
  double max_strength = 2.0;
  std::uint64_t seed = 1;
};

struct RandomAnalysisRow {
  std::size_t onset = 0;
  std::ptrdiff_t offset = 0;  // argmax(y) - onset: days the spike leads the main peak
  SpikeParams spike;
  std::string direction;  // "feature_to_target" or "target_to_feature"
  double causality = 0;
};

// Spike of spike_days days: the peak at onset, then power-law decay; zero
// elsewhere.
TimeSeries spike_feature(const TimeSeries& y, std::size_t onset, double strength, std::size_t spike_days,
                         const std::string& name);

// Throws SeriesTooShort when y is not longer than the window.
std::vector<RandomAnalysisRow> random_analysis(const TimeSeries& y, const RandomAnalysisConfig& cfg, int threads = 0);
void write_random_analysis_csv(const std::vector<RandomAnalysisRow>& rows, const std::filesystem::path& path);
void write_random_analysis_svg(const TimeSeries& y, const std::vector<RandomAnalysisRow>& rows,
                               const std::filesystem::path& path);

}  // namespace tcause
