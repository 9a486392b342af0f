#include "tcause/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tcause/error.hpp"
#include "tcause/format.hpp"

namespace tcause {

TimeSeries::TimeSeries(Day start, std::vector<double> values, std::string name)
    : start_(start), values_(std::move(values)), name_(std::move(name)) {
  if (values_.empty()) {
    fail(ErrorCode::InvalidInput, "time series '" + name_ + "' is empty");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) {
      fail(ErrorCode::InvalidInput, "time series '" + name_ + "' has a non-finite value");
    }
  }
}

TimeSeries TimeSeries::renamed(std::string name) const {
  TimeSeries out = *this;
  out.name_ = std::move(name);
  return out;
}

TimeSeries TimeSeries::slice(std::size_t from, std::size_t len) const {
  if (len == 0 || from + len > values_.size()) {
    fail(ErrorCode::InvalidParams, "slice out of range for '" + name_ + "'");
  }
  return TimeSeries(start_ + static_cast<std::int32_t>(from),
                    std::vector<double>(values_.begin() + from, values_.begin() + from + len),
                    name_);
}

LagView::LagView(const TimeSeries& s, std::size_t lag_, std::size_t order_)
    : series(&s), lag(lag_), order(order_) {
  if (order == 0 || lag + order >= s.size()) {
    fail(ErrorCode::InvalidParams, "lag view exceeds series length");
  }
}

std::pair<TimeSeries, TimeSeries> align(const TimeSeries& a, const TimeSeries& b) {
  const Day lo = std::max(a.start(), b.start());
  const Day hi = std::min(a.end(), b.end());
  if (hi - lo < 2) {
    fail(ErrorCode::NoOverlap, "series '" + a.name() + "' and '" + b.name() +
                                   "' overlap by fewer than 2 days");
  }
  const auto len = static_cast<std::size_t>(hi - lo);
  return {a.slice(static_cast<std::size_t>(lo - a.start()), len),
          b.slice(static_cast<std::size_t>(lo - b.start()), len)};
}

TimeSeries generate_spike(std::size_t len, const SpikeParams& p, std::uint64_t /*seed*/,
                          Day start, std::string name) {
  if (len == 0 || p.onset >= len || p.strength < 0 || p.rise_days == 0 ||
      !(p.decay_exponent > 0)) {
    fail(ErrorCode::InvalidParams, "invalid spike parameters");
  }
  std::vector<double> v(len, 0.0);
  v[p.onset] = p.strength;
  for (std::size_t r = 1; r < p.rise_days && r <= p.onset; ++r) {
    v[p.onset - r] = p.strength * (1.0 - static_cast<double>(r) / static_cast<double>(p.rise_days));
  }
  for (std::size_t t = p.onset + 1; t < len; ++t) {
    v[t] = p.strength * std::pow(static_cast<double>(t - p.onset + 1), -p.decay_exponent);
  }
  return TimeSeries(start, std::move(v), std::move(name));
}

double mean(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

TimeSeries standardize(const TimeSeries& s) {
  if (s.size() < 2) fail(ErrorCode::TooShort, "standardize needs at least 2 values");
  const auto v = s.values();
  const double m = mean(v);
  const double sd = sample_std(v);
  double scale = 0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  std::vector<double> out(v.size(), 0.0);
  if (sd > 1e-12 * std::max(1.0, scale)) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - m) / sd;
  }
  return TimeSeries(s.start(), std::move(out), s.name());
}

TimeSeries load_series_csv(const std::filesystem::path& path, std::string name) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::InvalidInput, path.string() + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "date,value") {
    fail(ErrorCode::InvalidInput, path.string() + ": header must be 'date,value'");
  }
  std::vector<double> values;
  Day first{}, last{};
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      fail(ErrorCode::InvalidInput, path.string() + ":" + std::to_string(lineno) + ": expected date,value");
    }
    const Day d = parse_date(std::string_view(line).substr(0, comma));
    const double v = parse_double(std::string_view(line).substr(comma + 1));
    if (values.empty()) {
      first = last = d;
      values.push_back(v);
    } else if (d == last) {
      values.back() += v;
    } else if (d == last + 1) {
      last = d;
      values.push_back(v);
    } else {
      fail(ErrorCode::InvalidInput, path.string() + ":" + std::to_string(lineno) +
                                        ": gap or out-of-order date " + format_date(d));
    }
  }
  if (values.empty()) fail(ErrorCode::InvalidInput, path.string() + ": no rows");
  if (name.empty()) name = path.stem().string();
  return TimeSeries(first, std::move(values), std::move(name));
}

void save_series_csv(const TimeSeries& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << "date,value\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << format_date(s.start() + static_cast<std::int32_t>(i)) << ',' << format_real(s[i]) << '\n';
  }
}

}  // namespace tcause
