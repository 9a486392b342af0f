#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "tcause/error.hpp"
#include "tcause/granger.hpp"
#include "tcause/ols.hpp"
#include "tcause/random.hpp"

using namespace tcause;

namespace {

TimeSeries series(std::vector<double> v, std::string name = "s") { return TimeSeries(Day{0}, std::move(v), name); }

std::vector<double> noise(Rng& rng, std::size_t n, double sd = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = sd * rng.normal();
  return v;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidParams;
}

}  // namespace

TEST_CASE("fit_ar recovers a noiseless AR(1)") {
  std::vector<double> v{5.0};
  for (int t = 1; t < 30; ++t) v.push_back(0.5 * v.back());
  const auto fit = fit_ar(series(v), 1);
  REQUIRE(fit.alpha.size() == 1);
  CHECK(std::abs(fit.alpha(0) - 0.5) < 1e-8);
  CHECK(std::abs(fit.intercept) < 1e-8);
  CHECK(fit.residual_variance < 1e-20);
  CHECK(fit.nobs == 29);
}

TEST_CASE("fit_ar on white noise stays within three standard errors of zero") {
  Rng rng(42);
  const auto fit = fit_ar(series(noise(rng, 500)), 1);
  CHECK(std::abs(fit.alpha(0)) < 3 * fit.stderr_coef(1));
  CHECK(fit.stderr_coef(1) == doctest::Approx(1 / std::sqrt(499.0)).epsilon(0.1));
}

TEST_CASE("fit_ar on a degenerate series") {
  const auto fit = fit_ar(standardize(series(std::vector<double>(20, 4.0))), 1);
  CHECK(fit.ridge);
  CHECK(fit.alpha(0) == 0.0);
  CHECK(fit.residual_variance == 0.0);
  CHECK(code_of([] { fit_ar(series(std::vector<double>(8, 1.0)), 1); }) == ErrorCode::TooShort);
  CHECK(code_of([] { fit_ar(series(std::vector<double>(20, 1.0)), 0); }) == ErrorCode::InvalidParams);
}

TEST_CASE("fit_varx recovers noiseless coefficients") {
  Rng rng(1);
  const auto x = noise(rng, 60);
  std::vector<double> y{0.0};
  for (std::size_t t = 1; t < x.size(); ++t) y.push_back(0.5 * y.back() + 1.0 * x[t - 1]);
  const std::vector<TimeSeries> X{series(x, "x")};
  const auto fit = fit_varx(series(y, "y"), X, 1, 1);
  CHECK(std::abs(fit.alpha(0) - 0.5) < 1e-8);
  CHECK(std::abs(fit.beta(0, 0) - 1.0) < 1e-8);
  CHECK(fit.residual_variance < 1e-20);
}

TEST_CASE("fit_varx with an uninformative regressor matches fit_ar") {
  Rng rng(2);
  const auto y = series(noise(rng, 80), "y");
  const std::vector<TimeSeries> X{series(std::vector<double>(80, 0.0), "zero")};
  const auto varx = fit_varx(y, X, 2, 2);
  const auto ar = fit_ar(y, 2);
  CHECK(varx.ridge);
  CHECK(std::abs(varx.beta(0, 0)) < 1e-12);
  CHECK(std::abs(varx.beta(0, 1)) < 1e-12);
  CHECK(varx.residual_variance == doctest::Approx(ar.residual_variance).epsilon(1e-9));
}

TEST_CASE("duplicated feature columns engage the ridge fallback") {
  Rng rng(3);
  const auto x = noise(rng, 100);
  std::vector<double> y{0.0};
  for (std::size_t t = 1; t < x.size(); ++t) y.push_back(0.3 * y.back() + 2.0 * x[t - 1] + 0.1 * rng.normal());
  const auto ys = series(y, "y");
  const std::vector<TimeSeries> once{series(x, "a")};
  const std::vector<TimeSeries> twice{series(x, "a"), series(x, "b")};
  const auto single = fit_varx(ys, once, 1, 1);
  const auto dup = fit_varx(ys, twice, 1, 1);
  CHECK(dup.ridge);
  CHECK(dup.beta(0, 0) == doctest::Approx(dup.beta(1, 0)).epsilon(1e-6));
  CHECK(dup.beta(0, 0) + dup.beta(1, 0) == doctest::Approx(single.beta(0, 0)).epsilon(1e-6));
  // Same fitted values means the same residual variance.
  CHECK(std::abs(dup.residual_variance - single.residual_variance) < 1e-6);
}

TEST_CASE("fit_varx validates inputs") {
  const auto y = series(std::vector<double>(30, 1.0));
  const std::vector<TimeSeries> misaligned{TimeSeries(Day{1}, std::vector<double>(30, 1.0))};
  CHECK(code_of([&] { fit_varx(y, misaligned, 1, 1); }) == ErrorCode::NotAligned);
  std::vector<TimeSeries> many;
  for (int i = 0; i < 8; ++i) many.push_back(series(std::vector<double>(30, 1.0 * i)));
  CHECK(code_of([&] { fit_varx(y, many, 1, 3); }) == ErrorCode::TooShort);
}

TEST_CASE("adding regressors never increases in-sample variance") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    const std::size_t T = 40 + rng.below(60);
    const auto y = series(noise(rng, T), "y");
    std::vector<TimeSeries> X;
    for (std::size_t k = 0; k < 1 + rng.below(3); ++k) X.push_back(series(noise(rng, T), "x"));
    const std::size_t m = 1 + rng.below(3);
    const auto varx = fit_varx(y, X, m, m);
    const auto ar = fit_ar(y, m);
    CHECK(varx.residual_variance <= ar.residual_variance + 1e-9);
  }
}

TEST_CASE("causality detects a leading copy") {
  Rng rng(4);
  const auto yv = noise(rng, 200);
  std::vector<double> fv(200);
  for (std::size_t t = 0; t + 2 < 200; ++t) fv[t] = yv[t + 2];
  fv[198] = rng.normal();
  fv[199] = rng.normal();
  const auto s = causality(series(yv, "y"), series(fv, "f"), GrangerParams{});
  REQUIRE(s.per_lag.size() == 3);
  CHECK(s.total > 0.9);
  CHECK(s.contribution(2) > 0.99);
  CHECK(s.per_lag[1].p_value < 1e-10);
  double sum = 0;
  for (const auto& l : s.per_lag) sum += l.contribution;
  CHECK(sum == s.total);
}

TEST_CASE("causality of independent noise") {
  Rng rng(25);
  const auto s = causality(series(noise(rng, 300), "y"), series(noise(rng, 300), "f"), GrangerParams{});
  CHECK(s.total < 0.05);
  for (const auto& l : s.per_lag) CHECK(l.p_value >= 0.05);
}

TEST_CASE("F-test size is close to nominal under the null") {
  int significant = 0, tests = 0;
  for (std::uint64_t seed = 100; seed < 400; ++seed) {
    Rng rng(seed);
    const auto s = causality(series(noise(rng, 120), "y"), series(noise(rng, 120), "f"), GrangerParams{});
    for (const auto& l : s.per_lag) {
      significant += l.p_value < 0.05;
      ++tests;
    }
  }
  const double rate = static_cast<double>(significant) / tests;
  CHECK(rate > 0.02);
  CHECK(rate < 0.09);
}

TEST_CASE("causality of a series with itself is absorbed by the autoregression") {
  Rng rng(6);
  std::vector<double> v{0};
  for (int t = 1; t < 150; ++t) v.push_back(0.6 * v.back() + rng.normal());
  const auto y = series(v, "y");
  const auto s = causality(y, y.renamed("f"), GrangerParams{});
  CHECK(s.total < 1e-6);
  const CausalityKernel kernel(y, GrangerParams{});
  CHECK(kernel.score(y.renamed("f")).total < 1e-6);
}

TEST_CASE("causality is invariant to affine rescaling of the feature") {
  Rng rng(7);
  const auto x = noise(rng, 150);
  std::vector<double> y{0, 0};
  for (std::size_t t = 2; t < x.size(); ++t) y.push_back(0.4 * y[t - 1] + 0.7 * x[t - 2] + 0.5 * rng.normal());
  std::vector<double> xs(x);
  for (auto& v : xs) v = 12.5 * v - 40;
  const auto a = causality(series(y), series(x), GrangerParams{});
  const auto b = causality(series(y), series(xs), GrangerParams{});
  CHECK(a.total > 0.2);
  CHECK(b.total == doctest::Approx(a.total).epsilon(1e-9));
}

TEST_CASE("projection kernel agrees with full refits") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const std::size_t T = 30 + rng.below(120);
    const auto x = noise(rng, T);
    std::vector<double> y(T, 0.0);
    const double b = rng.uniform(-1, 1);
    for (std::size_t t = 3; t < T; ++t) y[t] = 0.5 * y[t - 1] + b * x[t - 1 - seed % 3] + rng.normal();
    GrangerParams p;
    p.m = 1 + seed % 3;
    p.max_lag = 1 + seed % 4;
    const auto ref = causality(series(y, "y"), series(x, "x"), p);
    const auto fast = CausalityKernel(series(y, "y"), p).score(series(x, "x"));
    REQUIRE(ref.per_lag.size() == fast.per_lag.size());
    for (std::size_t l = 0; l < ref.per_lag.size(); ++l) {
      CHECK(std::abs(ref.per_lag[l].delta_var - fast.per_lag[l].delta_var) < 1e-9);
      CHECK(std::abs(ref.per_lag[l].p_value - fast.per_lag[l].p_value) < 1e-7);
    }
    CHECK(std::abs(ref.total - fast.total) < 1e-9);
  }
}

TEST_CASE("serial and OpenMP pair scoring agree") {
  Rng rng(8);
  std::vector<TimeSeries> targets, features;
  for (int i = 0; i < 3; ++i) targets.push_back(series(noise(rng, 90), "t" + std::to_string(i)));
  for (int i = 0; i < 12; ++i) features.push_back(series(noise(rng, 90), "f" + std::to_string(i)));
  const auto serial = score_pairs_serial(targets, features, GrangerParams{});
  for (int threads : {1, 4}) {
    const auto par = score_pairs(targets, features, GrangerParams{}, threads);
    REQUIRE(par.size() == serial.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
      CHECK(par[i].feature == serial[i].feature);
      CHECK(par[i].target == serial[i].target);
      CHECK(std::abs(par[i].total - serial[i].total) < 1e-9);
    }
  }
}

TEST_CASE("causality errors") {
  const auto y = series(std::vector<double>(30, 1.0));
  CHECK(code_of([&] { causality(y, TimeSeries(Day{2}, std::vector<double>(30, 1.0)), {}); }) ==
        ErrorCode::NotAligned);
  CHECK(code_of([] { causality(series(std::vector<double>(10, 1.0)), series(std::vector<double>(10, 1.0)), {}); }) ==
        ErrorCode::TooShort);
  GrangerParams bad;
  bad.min_lag = 0;
  CHECK(code_of([&] { causality(y, y, bad); }) == ErrorCode::InvalidParams);
}

TEST_CASE("score TSV round trip") {
  Rng rng(9);
  const std::vector<TimeSeries> targets{series(noise(rng, 60), "y")};
  const std::vector<TimeSeries> features{series(noise(rng, 60), "a"), series(noise(rng, 60), "b")};
  const auto scores = score_pairs(targets, features, GrangerParams{});
  const auto path = std::filesystem::temp_directory_path() / "tcause_scores.tsv";
  save_scores_tsv(scores, path);
  const auto loaded = load_scores_tsv(path);
  REQUIRE(loaded.size() == scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    CHECK(loaded[i].feature == scores[i].feature);
    CHECK(loaded[i].total == scores[i].total);
    CHECK(loaded[i].per_lag.size() == scores[i].per_lag.size());
  }
  std::filesystem::remove(path);
}
