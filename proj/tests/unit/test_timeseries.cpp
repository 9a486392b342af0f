#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "tcause/error.hpp"
#include "tcause/random.hpp"
#include "tcause/timeseries.hpp"

using namespace tcause;

namespace {

Day jan(int d) { return parse_date("2013-01-" + std::string(d < 10 ? "0" : "") + std::to_string(d)); }

std::vector<double> vals(const TimeSeries& s) { return {s.values().begin(), s.values().end()}; }

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

TEST_CASE("dates round-trip through ISO strings") {
  CHECK(format_date(parse_date("2013-01-02")) == "2013-01-02");
  CHECK(parse_date("2013-03-01") - parse_date("2013-02-28") == 1);
  CHECK(parse_date("2013-01-02T10:30:00Z") == parse_date("2013-01-02"));
  CHECK(code_of([] { parse_date("2013-02-30"); }) == ErrorCode::InvalidInput);
  CHECK(code_of([] { parse_date("13-1-2"); }) == ErrorCode::InvalidInput);
}

TEST_CASE("construction rejects empty and non-finite series") {
  CHECK(code_of([] { TimeSeries(Day{0}, {}); }) == ErrorCode::InvalidInput);
  CHECK(code_of([] { TimeSeries(Day{0}, {1.0, std::nan("")}); }) == ErrorCode::InvalidInput);
}

TEST_CASE("align intersects date ranges") {
  const TimeSeries a(jan(1), {1, 2, 3}, "a");
  const TimeSeries b(jan(2), {9, 8}, "b");
  auto [x, y] = align(a, b);
  CHECK(vals(x) == std::vector<double>{2, 3});
  CHECK(vals(y) == std::vector<double>{9, 8});
  CHECK(x.start() == jan(2));
  CHECK(y.start() == jan(2));

  auto [p, q] = align(a, a);
  CHECK(p == a);
  CHECK(q == a);

  const TimeSeries c(jan(1), {1, 2, 3, 4, 5});
  const TimeSeries d(parse_date("2013-03-01"), {1, 2, 3, 4, 5});
  CHECK(code_of([&] { align(c, d); }) == ErrorCode::NoOverlap);
  // One shared day is not enough.
  const TimeSeries e(jan(5), {1, 2});
  CHECK(code_of([&] { align(c, e); }) == ErrorCode::NoOverlap);
}

TEST_CASE("align is commutative and idempotent") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto la = 5 + rng.below(20), lb = 5 + rng.below(20);
    std::vector<double> va(la), vb(lb);
    for (auto& v : va) v = rng.normal();
    for (auto& v : vb) v = rng.normal();
    const TimeSeries a(Day{static_cast<int>(rng.below(10))}, va, "a");
    const TimeSeries b(Day{static_cast<int>(rng.below(10))}, vb, "b");
    try {
      auto [x1, y1] = align(a, b);
      auto [y2, x2] = align(b, a);
      CHECK(x1 == x2);
      CHECK(y1 == y2);
      auto [x3, y3] = align(x1, y1);
      CHECK(x3 == x1);
      CHECK(y3 == y1);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoOverlap);
    }
  }
}

TEST_CASE("generate_spike closed form") {
  SpikeParams p{3, 10.0, 1, 1.0};
  const auto s = generate_spike(7, p, 1);
  const std::vector<double> expect{0, 0, 0, 10, 5, 10.0 / 3.0, 2.5};
  REQUIRE(s.size() == expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(s[i] == doctest::Approx(expect[i]).epsilon(1e-14));

  CHECK(generate_spike(7, p, 1) == generate_spike(7, p, 1));

  SpikeParams zero{2, 0.0, 3, 2.0};
  const auto flat = generate_spike(6, zero, 3);
  for (double v : flat.values()) CHECK(v == 0.0);

  SpikeParams rising{4, 8.0, 4, 1.0};
  const auto r = generate_spike(6, rising, 0);
  CHECK(r[1] == doctest::Approx(2.0));
  CHECK(r[2] == doctest::Approx(4.0));
  CHECK(r[3] == doctest::Approx(6.0));
  CHECK(r[4] == doctest::Approx(8.0));

  CHECK(code_of([] { generate_spike(5, SpikeParams{5, 1, 1, 1}, 0); }) == ErrorCode::InvalidParams);
  CHECK(code_of([] { generate_spike(5, SpikeParams{1, -1, 1, 1}, 0); }) == ErrorCode::InvalidParams);
  CHECK(code_of([] { generate_spike(5, SpikeParams{1, 1, 1, 0}, 0); }) == ErrorCode::InvalidParams);
}

TEST_CASE("generate_spike is non-negative and unimodal") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t len = 3 + rng.below(40);
    SpikeParams p{rng.below(len), rng.uniform(0.1, 50), 1 + rng.below(6), rng.uniform(0.1, 3)};
    const auto s = generate_spike(len, p, trial);
    const auto v = s.values();
    CHECK(std::all_of(v.begin(), v.end(), [](double x) { return x >= 0; }));
    CHECK(*std::max_element(v.begin(), v.end()) == p.strength);
    CHECK(s[p.onset] == p.strength);
    for (std::size_t i = 1; i <= p.onset; ++i) CHECK(v[i] >= v[i - 1]);
    for (std::size_t i = p.onset + 1; i < len; ++i) CHECK(v[i] <= v[i - 1]);
  }
}

TEST_CASE("standardize") {
  const auto s = standardize(TimeSeries(Day{0}, {1, 2, 3}));
  CHECK(s[0] == doctest::Approx(-1.0));
  CHECK(s[1] == doctest::Approx(0.0));
  CHECK(s[2] == doctest::Approx(1.0));

  const auto c = standardize(TimeSeries(Day{0}, {5, 5, 5}));
  CHECK(vals(c) == std::vector<double>{0, 0, 0});

  CHECK(code_of([] { standardize(TimeSeries(Day{0}, {1})); }) == ErrorCode::TooShort);

  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(2 + rng.below(30));
    for (auto& x : v) x = rng.uniform(-100, 100);
    const TimeSeries raw(Day{0}, v);
    const auto once = standardize(raw);
    const auto twice = standardize(once);
    CHECK(mean(once.values()) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(sample_std(once.values()) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(twice[i] == doctest::Approx(once[i]).epsilon(1e-12));
    const auto arg = [](const TimeSeries& s) {
      return std::max_element(s.values().begin(), s.values().end()) - s.values().begin();
    };
    CHECK(arg(once) == arg(raw));
  }
}

TEST_CASE("CSV load sums sub-daily rows and rejects gaps") {
  const auto dir = std::filesystem::temp_directory_path() / "tcause_ts_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "ok.csv");
    f << "date,value\n2013-01-01,1\n2013-01-02T09:00:00,2\n2013-01-02T17:00:00,3\n2013-01-03,4\n";
  }
  const auto s = load_series_csv(dir / "ok.csv");
  CHECK(s.name() == "ok");
  CHECK(vals(s) == std::vector<double>{1, 5, 4});
  CHECK(s.start() == jan(1));

  save_series_csv(s, dir / "copy.csv");
  CHECK(load_series_csv(dir / "copy.csv", "ok") == s);

  {
    std::ofstream f(dir / "gap.csv");
    f << "date,value\n2013-01-01,1\n2013-01-03,2\n";
  }
  CHECK(code_of([&] { load_series_csv(dir / "gap.csv"); }) == ErrorCode::InvalidInput);
  {
    std::ofstream f(dir / "hdr.csv");
    f << "day,v\n2013-01-01,1\n";
  }
  CHECK(code_of([&] { load_series_csv(dir / "hdr.csv"); }) == ErrorCode::InvalidInput);
  CHECK(code_of([&] { load_series_csv(dir / "missing.csv"); }) == ErrorCode::IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("LagView bounds") {
  const TimeSeries s(Day{0}, {1, 2, 3, 4});
  CHECK_NOTHROW(LagView(s, 1, 2));
  CHECK(code_of([&] { LagView(s, 2, 2); }) == ErrorCode::InvalidParams);
}
