// Serial references against the OpenMP kernels. Thread count comes from
// OMP_NUM_THREADS (0 = runtime default); arg 1 pins the kernel to one thread.
#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "tcause/forecast.hpp"
#include "tcause/granger.hpp"
#include "tcause/random.hpp"
#include "tcause/text_features.hpp"

using namespace tcause;

namespace {

std::vector<TimeSeries> noise(std::size_t count, std::size_t T, std::uint64_t seed, const std::string& prefix) {
  Rng rng(seed);
  std::vector<TimeSeries> out;
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> v(T);
    for (auto& x : v) x = rng.normal();
    out.emplace_back(Day{0}, std::move(v), prefix + std::to_string(k));
  }
  return out;
}

const std::vector<TimeSeries>& targets() {
  static const auto t = noise(4, 400, 1, "y");
  return t;
}

const std::vector<TimeSeries>& features() {
  static const auto f = noise(64, 400, 2, "f");
  return f;
}

const std::vector<Document>& corpus() {
  static const std::vector<Document> docs = [] {
    Rng rng(3);
    std::vector<std::string> words;
    for (int i = 0; i < 400; ++i) words.push_back("w" + std::to_string(i));
    std::vector<Document> d;
    for (int day = 0; day < 365; ++day) {
      for (int k = 0; k < 30; ++k) {
        std::string text;
        for (int j = 0; j < 20; ++j) text += words[rng.below(words.size())] + ' ';
        d.emplace_back(Day{day}, std::move(text));
      }
    }
    return d;
  }();
  return docs;
}

void BM_score_pairs_serial(benchmark::State& st) {
  const GrangerParams p;
  for (auto _ : st) benchmark::DoNotOptimize(score_pairs_serial(targets(), features(), p));
}

void BM_score_pairs_omp(benchmark::State& st) {
  const GrangerParams p;
  const int threads = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(score_pairs(targets(), features(), p, threads));
}

void BM_count_ngrams_serial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(count_ngrams(corpus(), 2, 5));
}

void BM_count_ngrams_omp(benchmark::State& st) {
  const int threads = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(count_ngrams_parallel(corpus(), 2, 5, threads));
}

void BM_backtest(benchmark::State& st) {
  const auto y = noise(1, 1000, 4, "y")[0];
  FeatureSets fs;
  fs.random = random_features(y, 3, 5);
  fs.words = noise(3, 1000, 6, "w");
  fs.topics = noise(3, 1000, 7, "t");
  fs.senti = noise(3, 1000, 8, "s");
  fs.composition = noise(3, 1000, 9, "c");
  BacktestConfig cfg;
  const int threads = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(backtest(y, fs, cfg, threads));
}

}  // namespace

BENCHMARK(BM_score_pairs_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_score_pairs_omp)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_count_ngrams_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_count_ngrams_omp)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_backtest)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
