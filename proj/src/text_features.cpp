#include "tcause/text_features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <omp.h>

#include <json.hpp>

#include "tcause/error.hpp"
#include "tcause/format.hpp"

namespace tcause {

Document::Document(Day d, std::string t, Source s) : date(d), text(std::move(t)), source(s) {
  if (trim(text).empty()) fail(ErrorCode::InvalidInput, "document text is empty");
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::set<std::string> document_ngrams(const std::vector<std::string>& tokens, int n_max) {
  std::set<std::string> grams(tokens.begin(), tokens.end());
  if (n_max >= 2) {
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) grams.insert(tokens[i] + "_" + tokens[i + 1]);
  }
  return grams;
}

std::string_view kind_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::word: return "word";
    case FeatureKind::topic: return "topic";
    case FeatureKind::sentiment: return "sentiment";
  }
  return "word";
}

FeatureKind parse_kind(std::string_view s) {
  if (s == "word") return FeatureKind::word;
  if (s == "topic") return FeatureKind::topic;
  if (s == "sentiment") return FeatureKind::sentiment;
  fail(ErrorCode::InvalidInput, "unknown feature kind '" + std::string(s) + "'");
}

TopicSpec::TopicSpec(std::string id, std::vector<std::string> words) : topic_id(std::move(id)) {
  for (auto& w : words) {
    std::string norm;
    for (char c : trim(w)) {
      norm.push_back(c == ' ' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (!norm.empty() && std::find(top_words.begin(), top_words.end(), norm) == top_words.end()) {
      top_words.push_back(std::move(norm));
    }
  }
  if (topic_id.empty() || top_words.empty()) {
    fail(ErrorCode::InvalidInput, "topic '" + topic_id + "' has no words");
  }
  if (top_words.size() > 10) {
    fail(ErrorCode::InvalidInput, "topic '" + topic_id + "' has more than ten words");
  }
}

SentimentLexicon::SentimentLexicon(std::set<std::string> pos, std::set<std::string> neg)
    : positive(std::move(pos)), negative(std::move(neg)) {
  if (positive.empty() && negative.empty()) fail(ErrorCode::InvalidInput, "sentiment lexicon is empty");
  for (const auto& w : positive) {
    if (negative.count(w)) fail(ErrorCode::InvalidInput, "word '" + w + "' is both positive and negative");
  }
}

namespace {

struct DayRange {
  Day first;
  std::size_t length;
};

DayRange corpus_range(const std::vector<Document>& corpus) {
  if (corpus.empty()) fail(ErrorCode::EmptyCorpus, "corpus is empty");
  auto [lo, hi] = std::minmax_element(corpus.begin(), corpus.end(),
                                      [](const Document& a, const Document& b) { return a.date < b.date; });
  return {lo->date, static_cast<std::size_t>(hi->date - lo->date) + 1};
}

using CountTable = std::unordered_map<std::string, std::vector<double>>;

void count_into(CountTable& table, const Document& doc, const DayRange& range, int n_max) {
  const auto day = static_cast<std::size_t>(doc.date - range.first);
  for (const auto& g : document_ngrams(tokenize(doc.text), n_max)) {
    auto& v = table[g];
    if (v.empty()) v.assign(range.length, 0.0);
    v[day] += 1.0;
  }
}

SeriesMap finish_counts(CountTable& table, const DayRange& range, int min_freq) {
  SeriesMap out;
  for (auto& [gram, counts] : table) {
    double total = 0;
    for (double c : counts) total += c;
    if (total < min_freq) continue;
    out.emplace(gram, TimeSeries(range.first, std::move(counts), gram));
  }
  return out;
}

void check_count_params(int n_max, int min_freq) {
  if (n_max < 1 || n_max > 2) fail(ErrorCode::InvalidParams, "n_max must be 1 or 2");
  if (min_freq < 1) fail(ErrorCode::InvalidParams, "min_freq must be >= 1");
}

bool doc_matches(const std::set<std::string>& grams, const TopicSpec& topic) {
  for (const auto& w : topic.top_words) {
    if (grams.count(w)) return true;
  }
  return false;
}

}  // namespace

SeriesMap count_ngrams(const std::vector<Document>& corpus, int n_max, int min_freq) {
  check_count_params(n_max, min_freq);
  const auto range = corpus_range(corpus);
  CountTable table;
  for (const auto& doc : corpus) count_into(table, doc, range, n_max);
  return finish_counts(table, range, min_freq);
}

SeriesMap count_ngrams_parallel(const std::vector<Document>& corpus, int n_max, int min_freq,
                                int threads) {
  check_count_params(n_max, min_freq);
  const auto range = corpus_range(corpus);
  const int nt = threads > 0 ? threads : omp_get_max_threads();
  std::vector<CountTable> shards(static_cast<std::size_t>(nt));
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
#pragma omp parallel for num_threads(nt) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    count_into(shards[static_cast<std::size_t>(omp_get_thread_num())], corpus[static_cast<std::size_t>(i)],
               range, n_max);
  }
  // Counts are small integers held in doubles, so the merge is exact and
  // independent of shard order.
  CountTable merged = std::move(shards.front());
  for (std::size_t s = 1; s < shards.size(); ++s) {
    for (auto& [gram, counts] : shards[s]) {
      auto& dst = merged[gram];
      if (dst.empty()) {
        dst = std::move(counts);
      } else {
        for (std::size_t d = 0; d < dst.size(); ++d) dst[d] += counts[d];
      }
    }
  }
  return finish_counts(merged, range, min_freq);
}

DynamicsStats dynamics(const TimeSeries& series, double peak_frac) {
  const auto v = series.values();
  const std::size_t n = v.size();
  if (n < 3) fail(ErrorCode::TooShort, "dynamics needs at least 3 values");
  DynamicsStats st;
  st.mean = mean(v);
  st.std = sample_std(v);

  // Entropy of the normalized magnitude profile; sentiment series can be
  // negative, so magnitudes are used.
  double total = 0;
  for (double x : v) total += std::abs(x);
  if (total > 0) {
    double h = 0;
    for (double x : v) {
      const double p = std::abs(x) / total;
      if (p > 0) h -= p * std::log(p);
    }
    st.entropy = std::clamp(h / std::log(static_cast<double>(n)), 0.0, 1.0);
  }

  const double vmax = *std::max_element(v.begin(), v.end());
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(v[i] > v[i - 1] && v[i] > v[i + 1])) continue;
    if (v[i] < peak_frac * vmax) continue;
    ++st.n_peaks;
    std::size_t trough = i - 1;
    while (trough > 0 && v[trough - 1] <= v[trough]) --trough;
    const double slope = (v[i] - v[trough]) / static_cast<double>(i - trough);
    st.max_slope = std::max(st.max_slope, slope);
  }
  return st;
}

std::map<std::string, FeatureSeries> filter_features(
    const std::map<std::string, FeatureSeries>& features, const DynamicsPolicy& p) {
  std::map<std::string, FeatureSeries> out;
  for (const auto& [name, f] : features) {
    const auto& s = f.stats;
    if (s.entropy < p.entropy_lo || s.entropy > p.entropy_hi) continue;
    if (s.mean < p.mean_lo || s.std < p.std_lo) continue;
    if (s.n_peaks < p.peaks_lo || s.max_slope < p.slope_lo) continue;
    out.emplace(name, f);
  }
  return out;
}

SeriesMap topic_series(const std::vector<Document>& corpus, const std::vector<TopicSpec>& topics) {
  if (topics.empty()) fail(ErrorCode::InvalidParams, "no topics given");
  const auto range = corpus_range(corpus);
  std::vector<std::vector<double>> counts(topics.size(), std::vector<double>(range.length, 0.0));
  for (const auto& doc : corpus) {
    const auto grams = document_ngrams(tokenize(doc.text), 2);
    const auto day = static_cast<std::size_t>(doc.date - range.first);
    for (std::size_t t = 0; t < topics.size(); ++t) {
      if (doc_matches(grams, topics[t])) counts[t][day] += 1.0;
    }
  }
  SeriesMap out;
  for (std::size_t t = 0; t < topics.size(); ++t) {
    out.emplace(topics[t].topic_id, TimeSeries(range.first, std::move(counts[t]), topics[t].topic_id));
  }
  return out;
}

SeriesMap sentiment_series(const std::vector<Document>& corpus, const std::vector<TopicSpec>& topics,
                           const SentimentLexicon& lex) {
  if (topics.empty()) fail(ErrorCode::InvalidParams, "no topics given");
  const auto range = corpus_range(corpus);
  std::vector<std::vector<double>> polarity(topics.size(), std::vector<double>(range.length, 0.0));
  std::vector<std::vector<double>> matched(topics.size(), std::vector<double>(range.length, 0.0));
  for (const auto& doc : corpus) {
    const auto tokens = tokenize(doc.text);
    const auto grams = document_ngrams(tokens, 2);
    double score = 0;
    for (const auto& tok : tokens) {
      if (lex.positive.count(tok)) score += 1;
      if (lex.negative.count(tok)) score -= 1;
    }
    const auto day = static_cast<std::size_t>(doc.date - range.first);
    for (std::size_t t = 0; t < topics.size(); ++t) {
      if (!doc_matches(grams, topics[t])) continue;
      polarity[t][day] += score;
      matched[t][day] += 1;
    }
  }
  SeriesMap out;
  for (std::size_t t = 0; t < topics.size(); ++t) {
    std::vector<double> v(range.length);
    for (std::size_t d = 0; d < range.length; ++d) v[d] = polarity[t][d] / std::max(1.0, matched[t][d]);
    const std::string name = topics[t].topic_id + "_senti";
    out.emplace(name, TimeSeries(range.first, std::move(v), name));
  }
  return out;
}

std::map<std::string, FeatureSeries> make_features(const SeriesMap& series, FeatureKind kind,
                                                   double peak_frac) {
  std::map<std::string, FeatureSeries> out;
  for (const auto& [name, s] : series) {
    out.emplace(name, FeatureSeries{name, kind, s, dynamics(s, peak_frac)});
  }
  return out;
}

std::string_view source_name(Source s) {
  switch (s) {
    case Source::tweet: return "tweet";
    case Source::news: return "news";
    case Source::blog: return "blog";
  }
  return "news";
}

namespace {

Source parse_source(std::string_view s) {
  if (s == "tweet") return Source::tweet;
  if (s == "news") return Source::news;
  if (s == "blog") return Source::blog;
  fail(ErrorCode::InvalidInput, "unknown document source '" + std::string(s) + "'");
}

}  // namespace

std::vector<Document> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<Document> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
      docs.emplace_back(parse_date(rec.at("date").get<std::string>()), rec.at("text").get<std::string>(),
                        parse_source(rec.value("source", std::string("news"))));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::InvalidInput, where + ": " + e.what());
    } catch (const Error& e) {
      fail(e.code(), where + ": " + e.what());
    }
  }
  if (docs.empty()) fail(ErrorCode::EmptyCorpus, path.string() + " has no documents");
  return docs;
}

std::vector<TopicSpec> load_topics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<TopicSpec> topics;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) fail(ErrorCode::InvalidInput, path.string() + ": expected topic_id<TAB>words");
    auto words = split(std::string_view(line).substr(tab + 1), ',');
    // Topic models report more words than we count; keep the ten most frequent.
    if (words.size() > 10) words.resize(10);
    topics.emplace_back(std::string(trim(line.substr(0, tab))), std::move(words));
  }
  return topics;
}

namespace {

std::set<std::string> load_word_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto w = trim(line);
    if (w.empty() || w.front() == '#') continue;
    std::string lower(w);
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    words.insert(std::move(lower));
  }
  return words;
}

}  // namespace

SentimentLexicon load_lexicon(const std::filesystem::path& positive, const std::filesystem::path& negative) {
  return SentimentLexicon(load_word_list(positive), load_word_list(negative));
}

std::string safe_file_stem(std::string_view name) {
  std::string out;
  bool changed = false;
  for (char c : name) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || c == '_' || c == '-' || c == '.') {
      out.push_back(c);
    } else {
      out.push_back('_');
      changed = true;
    }
  }
  if (out.empty() || out.front() == '.') changed = true;
  if (changed) {
    Fnv1a h;
    h.update(name);
    out += "-" + hex64(h.digest()).substr(0, 8);
  }
  return out;
}

void save_features(const std::vector<FeatureSeries>& features, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream stats(dir / "stats.tsv");
  if (!stats) fail(ErrorCode::IoError, "cannot write " + (dir / "stats.tsv").string());
  stats << "name\tkind\tentropy\tmean\tstd\tmax_slope\tn_peaks\tfile\n";
  for (const auto& f : features) {
    const auto sub = std::string(kind_name(f.kind));
    std::filesystem::create_directories(dir / sub);
    const std::string rel = sub + "/" + safe_file_stem(f.name) + ".csv";
    save_series_csv(f.series, dir / rel);
    const auto& s = f.stats;
    stats << f.name << '\t' << sub << '\t' << format_real(s.entropy) << '\t' << format_real(s.mean) << '\t'
          << format_real(s.std) << '\t' << format_real(s.max_slope) << '\t' << s.n_peaks << '\t' << rel << '\n';
  }
}

std::vector<FeatureSeries> load_features(const std::filesystem::path& dir) {
  std::ifstream in(dir / "stats.tsv");
  if (!in) fail(ErrorCode::IoError, "cannot open " + (dir / "stats.tsv").string());
  std::vector<FeatureSeries> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 8) fail(ErrorCode::InvalidInput, "stats.tsv: expected 8 columns");
    DynamicsStats st{parse_double(cols[2]), parse_double(cols[3]), parse_double(cols[4]),
                     parse_double(cols[5]), static_cast<int>(parse_double(cols[6]))};
    out.push_back(FeatureSeries{cols[0], parse_kind(cols[1]), load_series_csv(dir / cols[7], cols[0]), st});
  }
  return out;
}

}  // namespace tcause
