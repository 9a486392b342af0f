#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tcause/date.hpp"
#include "tcause/timeseries.hpp"

namespace tcause {

enum class Source { tweet, news, blog };
std::string_view source_name(Source s);

struct Document {
  Day date;
  std::string text;
  Source source = Source::news;

  Document(Day date, std::string text, Source source = Source::news);
};

// Lowercase, split on anything that is not an ASCII letter or digit. Bytes
// >= 0x80 are kept as word characters so UTF-8 words stay intact.
std::vector<std::string> tokenize(std::string_view text);

// Unigrams plus (when n_max == 2) bigrams joined with '_', deduplicated.
std::set<std::string> document_ngrams(const std::vector<std::string>& tokens, int n_max);

enum class FeatureKind { word, topic, sentiment };

std::string_view kind_name(FeatureKind k);
FeatureKind parse_kind(std::string_view s);

struct DynamicsStats {
  double entropy = 0;
  double mean = 0;
  double std = 0;
  double max_slope = 0;
  int n_peaks = 0;
};

struct FeatureSeries {
  std::string name;
  FeatureKind kind = FeatureKind::word;
  TimeSeries series;
  DynamicsStats stats;
};

struct DynamicsPolicy {
  double entropy_lo = 0.0;
  double entropy_hi = 1.0;
  double mean_lo = 0.0;
  double std_lo = 0.0;
  int peaks_lo = 0;
  double slope_lo = 0.0;
};

struct TopicSpec {
  std::string topic_id;
  std::vector<std::string> top_words;

  // Lowercases and deduplicates; rejects empty or more than ten words.
  TopicSpec(std::string topic_id, std::vector<std::string> words);
};

struct SentimentLexicon {
  std::set<std::string> positive;
  std::set<std::string> negative;

  SentimentLexicon(std::set<std::string> positive, std::set<std::string> negative);
};

using SeriesMap = std::map<std::string, TimeSeries>;

// Document-level day counts of each n-gram over the corpus date range.
// N-grams whose total count is below min_freq are dropped.
SeriesMap count_ngrams(const std::vector<Document>& corpus, int n_max = 2, int min_freq = 5);
// Same result; documents are counted in OpenMP shards and merged.
SeriesMap count_ngrams_parallel(const std::vector<Document>& corpus, int n_max = 2,
                                int min_freq = 5, int threads = 0);

DynamicsStats dynamics(const TimeSeries& series, double peak_frac = 0.1);

std::map<std::string, FeatureSeries> filter_features(
    const std::map<std::string, FeatureSeries>& features, const DynamicsPolicy& policy);

SeriesMap topic_series(const std::vector<Document>& corpus, const std::vector<TopicSpec>& topics);

SeriesMap sentiment_series(const std::vector<Document>& corpus, const std::vector<TopicSpec>& topics,
                           const SentimentLexicon& lex);

std::map<std::string, FeatureSeries> make_features(const SeriesMap& series, FeatureKind kind,
                                                   double peak_frac = 0.1);

// Corpus: one JSON object per line with "date", "source" and "text".
std::vector<Document> load_corpus(const std::filesystem::path& path);
// topic_id<TAB>word1,word2,...
std::vector<TopicSpec> load_topics(const std::filesystem::path& path);
// One word per line in each file; '#' starts a comment line.
SentimentLexicon load_lexicon(const std::filesystem::path& positive,
                              const std::filesystem::path& negative);

// Writes <dir>/<kind>/<name>.csv for every feature and appends rows to
// <dir>/stats.tsv (name, kind, entropy, mean, std, max_slope, n_peaks).
void save_features(const std::vector<FeatureSeries>& features, const std::filesystem::path& dir);
std::vector<FeatureSeries> load_features(const std::filesystem::path& dir);

std::string safe_file_stem(std::string_view name);

}  // namespace tcause
