#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "tcause/error.hpp"
#include "tcause/random.hpp"
#include "tcause/text_features.hpp"

using namespace tcause;

namespace {

Day day(int d) { return Day{15706 + d}; }  // 2013-01-01 + d

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

TEST_CASE("tokenize lowercases and splits on non-alphanumerics") {
  CHECK(tokenize("Global-Warming, it's REAL!") ==
        std::vector<std::string>{"global", "warming", "it", "s", "real"});
  CHECK(document_ngrams(tokenize("happy thanksgiving happy"), 2) ==
        std::set<std::string>{"happy", "thanksgiving", "happy_thanksgiving", "thanksgiving_happy"});
}

TEST_CASE("count_ngrams counts documents, not tokens") {
  const std::vector<Document> corpus{
      {day(0), "Global warming is here"},
      {day(0), "more global warming, global warming"},
      {day(1), "nothing to see"},
  };
  const auto counts = count_ngrams(corpus, 2, 1);
  REQUIRE(counts.count("global_warming"));
  CHECK(vals(counts.at("global_warming")) == std::vector<double>{2, 0});
  CHECK(counts.at("global_warming").start() == day(0));
  CHECK(vals(counts.at("see")) == std::vector<double>{0, 1});

  // Total of 2 < min_freq 3 drops the bigram.
  CHECK(count_ngrams(corpus, 2, 3).count("global_warming") == 0);
  CHECK(count_ngrams(corpus, 1, 1).count("global_warming") == 0);
}

TEST_CASE("count_ngrams min_freq default of five") {
  std::vector<Document> corpus;
  for (int i = 0; i < 4; ++i) corpus.emplace_back(day(i), "rare word here");
  corpus.emplace_back(day(4), "common stuff");
  for (int i = 0; i < 5; ++i) corpus.emplace_back(day(i), "frequent token");
  const auto counts = count_ngrams(corpus);
  CHECK(counts.count("rare") == 0);
  CHECK(counts.count("frequent") == 1);
  CHECK(counts.at("frequent").size() == 5);
}

TEST_CASE("count_ngrams errors") {
  CHECK(code_of([] { count_ngrams({}, 2, 1); }) == ErrorCode::EmptyCorpus);
  const std::vector<Document> one{{day(0), "x"}};
  CHECK(code_of([&] { count_ngrams(one, 3, 1); }) == ErrorCode::InvalidParams);
  CHECK(code_of([&] { count_ngrams(one, 2, 0); }) == ErrorCode::InvalidParams);
  CHECK(code_of([] { Document(day(0), "   "); }) == ErrorCode::InvalidInput);
}

TEST_CASE("count_ngrams is permutation invariant and matches the parallel kernel") {
  Rng rng(5);
  const std::vector<std::string> words{"alpha", "beta", "gamma", "delta", "stock", "rise", "fall"};
  std::vector<Document> corpus;
  for (int i = 0; i < 400; ++i) {
    std::string text;
    for (std::size_t w = 0; w < 1 + rng.below(8); ++w) text += words[rng.below(words.size())] + " ";
    corpus.emplace_back(day(static_cast<int>(rng.below(30))), text);
  }
  const auto ref = count_ngrams(corpus, 2, 2);
  auto shuffled = corpus;
  rng.shuffle(shuffled);
  CHECK(count_ngrams(shuffled, 2, 2) == ref);
  for (int threads : {1, 2, 3, 8}) CHECK(count_ngrams_parallel(shuffled, 2, 2, threads) == ref);
  for (const auto& [name, s] : ref) {
    for (double v : s.values()) CHECK(v >= 0);
  }
}

TEST_CASE("dynamics statistics") {
  const auto u = dynamics(TimeSeries(Day{0}, {3, 3, 3, 3}));
  CHECK(u.entropy == doctest::Approx(1.0));
  CHECK(u.n_peaks == 0);
  CHECK(u.std == 0.0);

  const auto one = dynamics(TimeSeries(Day{0}, {0, 10, 0}));
  CHECK(one.entropy == doctest::Approx(0.0));
  CHECK(one.n_peaks == 1);
  CHECK(one.max_slope == doctest::Approx(10.0));

  const auto zero = dynamics(TimeSeries(Day{0}, {0, 0, 0}));
  CHECK(zero.entropy == 0.0);

  // Peak at index 4 climbs from the trough at index 1 over 3 days; the small
  // bump at index 7 falls below 10% of the maximum.
  const auto multi = dynamics(TimeSeries(Day{0}, {5, 2, 4, 8, 14, 3, 0, 1, 0}));
  CHECK(multi.n_peaks == 1);
  CHECK(multi.max_slope == doctest::Approx(4.0));

  CHECK(code_of([] { dynamics(TimeSeries(Day{0}, {1, 2})); }) == ErrorCode::TooShort);
}

TEST_CASE("dynamics scale covariance") {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(3 + rng.below(40));
    for (auto& x : v) x = std::floor(rng.uniform(0, 20));
    const double c = rng.uniform(0.1, 30);
    std::vector<double> w(v);
    for (auto& x : w) x *= c;
    const auto a = dynamics(TimeSeries(Day{0}, v));
    const auto b = dynamics(TimeSeries(Day{0}, w));
    CHECK(a.entropy >= 0);
    CHECK(a.entropy <= 1);
    CHECK(b.entropy == doctest::Approx(a.entropy).epsilon(1e-12));
    CHECK(b.n_peaks == a.n_peaks);
    CHECK(b.mean == doctest::Approx(c * a.mean).epsilon(1e-12));
    CHECK(b.std == doctest::Approx(c * a.std).epsilon(1e-12));
    CHECK(b.max_slope == doctest::Approx(c * a.max_slope).epsilon(1e-12));
  }
}

TEST_CASE("filter_features") {
  SeriesMap raw;
  raw.emplace("flat", TimeSeries(Day{0}, {4, 4, 4, 4, 4}, "flat"));
  raw.emplace("spiky", TimeSeries(Day{0}, {0, 1, 9, 1, 0}, "spiky"));
  raw.emplace("zero", TimeSeries(Day{0}, {0, 0, 0, 0, 0}, "zero"));
  const auto feats = make_features(raw, FeatureKind::word);

  const DynamicsPolicy vacuous{};
  CHECK(filter_features(feats, vacuous).size() == feats.size());

  DynamicsPolicy p;
  p.std_lo = 0.5;
  const auto kept = filter_features(feats, p);
  CHECK(kept.size() == 1);
  CHECK(kept.count("spiky") == 1);
  const auto again = filter_features(kept, p);
  CHECK(again.size() == kept.size());

  DynamicsPolicy strict;
  strict.peaks_lo = 2;
  CHECK(filter_features(feats, strict).empty());
}

TEST_CASE("topic_series counts matching documents once") {
  const TopicSpec health("healthcare", {"Insurance", "obamacare", "insurance"});
  CHECK(health.top_words == std::vector<std::string>{"insurance", "obamacare"});
  const std::vector<Document> corpus{
      {day(0), "insurance premiums rise"},
      {day(0), "obamacare and insurance debate"},
      {day(0), "sports news"},
      {day(1), "nothing"},
  };
  const auto ts = topic_series(corpus, {health, TopicSpec("absent", {"zebra"})});
  CHECK(vals(ts.at("healthcare")) == std::vector<double>{2, 0});
  CHECK(vals(ts.at("absent")) == std::vector<double>{0, 0});
  CHECK(code_of([&] { topic_series(corpus, {}); }) == ErrorCode::InvalidParams);
  CHECK(code_of([] { TopicSpec("t", {}); }) == ErrorCode::InvalidInput);
  CHECK(code_of([] {
          TopicSpec("t", {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k"});
        }) == ErrorCode::InvalidInput);
}

TEST_CASE("sentiment_series normalizes by matching documents") {
  const SentimentLexicon lex({"good", "great"}, {"bad"});
  const TopicSpec topic("econ", {"economy"});
  const std::vector<Document> corpus{
      {day(0), "economy is good and great"},
      {day(0), "economy good but bad"},
      {day(0), "great weather"},
      {day(1), "no match here"},
      {day(2), "economy good bad"},
  };
  const auto s = sentiment_series(corpus, {topic}, lex);
  // Day 0: two matching docs with 3 positive and 1 negative tokens.
  CHECK(vals(s.at("econ_senti")) == std::vector<double>{1.0, 0.0, 0.0});
  CHECK(code_of([] { SentimentLexicon({"x"}, {"x"}); }) == ErrorCode::InvalidInput);
  CHECK(code_of([] { SentimentLexicon({}, {}); }) == ErrorCode::InvalidInput);
}

TEST_CASE("corpus, topic, lexicon and feature files") {
  const auto dir = std::filesystem::temp_directory_path() / "tcause_text_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "corpus.jsonl");
    f << R"({"date": "2013-01-01", "source": "tweet", "text": "stocks rise"})" << "\n\n";
    f << R"({"date": "2013-01-02T08:00:00", "source": "news", "text": "stocks fall"})" << "\n";
    f << R"({"date": "2013-01-03", "source": "blog", "text": "stocks flat"})" << "\n";
  }
  const auto docs = load_corpus(dir / "corpus.jsonl");
  REQUIRE(docs.size() == 3);
  CHECK(docs[0].source == Source::tweet);
  CHECK(docs[1].date - docs[0].date == 1);
  {
    std::ofstream f(dir / "bad.jsonl");
    f << R"({"date": "2013-01-01", "source": "radio", "text": "x"})" << "\n";
  }
  CHECK(code_of([&] { load_corpus(dir / "bad.jsonl"); }) == ErrorCode::InvalidInput);
  {
    std::ofstream f(dir / "topics.tsv");
    f << "health\tInsurance,obamacare\n";
    f << "big\ta,b,c,d,e,f,g,h,i,j,k,l\n";
  }
  const auto topics = load_topics(dir / "topics.tsv");
  REQUIRE(topics.size() == 2);
  CHECK(topics[0].top_words == std::vector<std::string>{"insurance", "obamacare"});
  CHECK(topics[1].top_words.size() == 10);
  {
    std::ofstream p(dir / "pos.txt");
    p << "# positive\nGood\n";
    std::ofstream n(dir / "neg.txt");
    n << "bad\n";
  }
  const auto lex = load_lexicon(dir / "pos.txt", dir / "neg.txt");
  CHECK(lex.positive == std::set<std::string>{"good"});

  const auto feats = make_features(count_ngrams(docs, 1, 1), FeatureKind::word);
  std::vector<FeatureSeries> list;
  for (const auto& [n, f] : feats) list.push_back(f);
  list.push_back(FeatureSeries{"odd/name", FeatureKind::topic, TimeSeries(docs[0].date, {1, 2, 3}, "odd/name"),
                               dynamics(TimeSeries(docs[0].date, {1, 2, 3}))});
  save_features(list, dir / "features");
  const auto loaded = load_features(dir / "features");
  REQUIRE(loaded.size() == list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    CHECK(loaded[i].name == list[i].name);
    CHECK(loaded[i].kind == list[i].kind);
    CHECK(loaded[i].series.values().size() == list[i].series.values().size());
    CHECK(loaded[i].stats.entropy == list[i].stats.entropy);
  }
  std::filesystem::remove_all(dir);
}
