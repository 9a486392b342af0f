#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tcause/date.hpp"

namespace tcause {

// Daily series without gaps: values()[i] belongs to start() + i.
// Immutable once constructed.
class TimeSeries {
 public:
  TimeSeries(Day start, std::vector<double> values, std::string name = {});

  Day start() const { return start_; }
  Day end() const { return start_ + static_cast<std::int32_t>(values_.size()); }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::string& name() const { return name_; }

  TimeSeries renamed(std::string name) const;
  // Days [from, from + len) relative to start().
  TimeSeries slice(std::size_t from, std::size_t len) const;

  bool operator==(const TimeSeries&) const = default;

 private:
  Day start_;
  std::vector<double> values_;
  std::string name_;
};

// Lagged window over a series; requires lag + order < series length.
struct LagView {
  const TimeSeries* series;
  std::size_t lag;
  std::size_t order;

  LagView(const TimeSeries& s, std::size_t lag, std::size_t order);
};

struct SpikeParams {
  std::size_t onset = 0;
  double strength = 1.0;
  std::size_t rise_days = 1;
  double decay_exponent = 1.0;
};

// Restricts both series to their common date range (at least two days).
std::pair<TimeSeries, TimeSeries> align(const TimeSeries& a, const TimeSeries& b);

// Linear rise over rise_days ending at onset, peak = strength at onset, then
// strength * (t - onset + 1)^-decay_exponent. Zero elsewhere. The closed form
// has no stochastic part; seed is accepted for interface stability only.
TimeSeries generate_spike(std::size_t len, const SpikeParams& p, std::uint64_t seed,
                          Day start = Day{0}, std::string name = "spike");

// Zero mean, unit sample standard deviation; constant input maps to zeros.
TimeSeries standardize(const TimeSeries& s);

// CSV with header "date,value". Rows sharing a date are summed (sub-daily
// input); any missing day or out-of-order date is rejected.
TimeSeries load_series_csv(const std::filesystem::path& path, std::string name = {});
void save_series_csv(const TimeSeries& s, const std::filesystem::path& path);

double mean(std::span<const double> v);
double sample_std(std::span<const double> v);

}  // namespace tcause
