#include "tcause/config.hpp"

#include <charconv>
#include <functional>
#include <limits>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tcause/error.hpp"
#include "tcause/format.hpp"

namespace tcause {

namespace fs = std::filesystem;

KeyValues read_ini(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorCode::ConfigInvalid, "config file not found: " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    fail(ErrorCode::ConfigInvalid, e.what());
  }
  KeyValues kv;
  for (const auto& [section, node] : tree) {
    if (node.empty()) {
      if (!node.data().empty()) kv["run." + section] = node.data();
      continue;
    }
    for (const auto& [key, leaf] : node) kv[section + "." + key] = leaf.data();
  }
  return kv;
}

void apply_override(KeyValues& kv, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    fail(ErrorCode::ConfigInvalid, "override must look like section.key=value: '" + assignment + "'");
  }
  std::string key(trim(std::string_view(assignment).substr(0, eq)));
  if (key.find('.') == std::string::npos) key = "run." + key;
  kv[key] = std::string(trim(std::string_view(assignment).substr(eq + 1)));
}

namespace {

struct Field {
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

[[noreturn]] void bad_value(const std::string& v, const char* what) {
  fail(ErrorCode::ConfigInvalid, "expected " + std::string(what) + ", got '" + v + "'");
}

template <class T>
T parse_integer(const std::string& v) {
  const auto s = trim(v);
  T out{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) bad_value(v, "an integer");
  return out;
}

double parse_real(const std::string& v) {
  try {
    return parse_double(v);
  } catch (const Error&) {
    bad_value(v, "a number");
  }
}

bool parse_bool(const std::string& v) {
  const auto s = trim(v);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  bad_value(v, "a boolean");
}

template <class T>
Field integer(T& x) {
  return {[&x](const std::string& v) { x = parse_integer<T>(v); }, [&x] { return std::to_string(x); }};
}

Field real(double& x) {
  return {[&x](const std::string& v) { x = parse_real(v); }, [&x] { return format_real(x); }};
}

Field boolean(bool& x) {
  return {[&x](const std::string& v) { x = parse_bool(v); }, [&x] { return std::string(x ? "true" : "false"); }};
}

Field text(std::string& x) {
  return {[&x](const std::string& v) { x = std::string(trim(v)); }, [&x] { return x; }};
}

Field steps(std::vector<std::size_t>& x) {
  return {[&x](const std::string& v) {
            x.clear();
            for (const auto& part : split(v, ',')) x.push_back(parse_integer<std::size_t>(std::string(trim(part))));
          },
          [&x] {
            std::string s;
            for (std::size_t i = 0; i < x.size(); ++i) s += (i ? "," : "") + std::to_string(x[i]);
            return s;
          }};
}

Field direction(ReasonDirection& x) {
  return {[&x](const std::string& v) {
            const auto s = trim(v);
            if (s == "backward") {
              x = ReasonDirection::backward;
            } else if (s == "forward") {
              x = ReasonDirection::forward;
            } else {
              bad_value(v, "forward or backward");
            }
          },
          [&x] { return std::string(x == ReasonDirection::backward ? "backward" : "forward"); }};
}

std::map<std::string, Field> settings(PipelineConfig& c) {
  return {
      {"run.seed", integer(c.seed)},
      {"run.threads", integer(c.threads)},

      {"text.n_max", integer(c.n_max)},
      {"text.min_freq", integer(c.min_freq)},
      {"text.peak_frac", real(c.peak_frac)},
      {"text.entropy_lo", real(c.dynamics.entropy_lo)},
      {"text.entropy_hi", real(c.dynamics.entropy_hi)},
      {"text.mean_lo", real(c.dynamics.mean_lo)},
      {"text.std_lo", real(c.dynamics.std_lo)},
      {"text.peaks_lo", integer(c.dynamics.peaks_lo)},
      {"text.slope_lo", real(c.dynamics.slope_lo)},
      {"text.tuple_phrase_len", integer(c.tuple_phrase_len)},

      {"granger.m", integer(c.granger.m)},
      {"granger.min_lag", integer(c.granger.min_lag)},
      {"granger.max_lag", integer(c.granger.max_lag)},
      {"granger.significance", real(c.granger.significance)},
      {"granger.standardize", boolean(c.granger.standardize)},
      {"granger.top_k", integer(c.top_k)},

      {"graph.max_degree", integer(c.graph.max_degree)},
      {"graph.min_tokens", integer(c.graph.min_tokens)},
      {"graph.max_tokens", integer(c.graph.max_tokens)},
      {"graph.min_weight", real(c.graph.min_weight)},
      {"graph.use_extracted", boolean(c.use_extracted_tuples)},

      {"reasoning.target", text(c.target_phrase)},
      {"reasoning.source", text(c.source_phrase)},
      {"reasoning.d_max", integer(c.reasoning.d_max)},
      {"reasoning.epsilon", real(c.reasoning.epsilon)},
      {"reasoning.max_frontier", integer(c.reasoning.max_frontier)},
      {"reasoning.max_name_tokens", integer(c.reasoning.max_name_tokens)},
      {"reasoning.min_edge_weight", real(c.reasoning.min_edge_weight)},
      {"reasoning.kb_cross_penalty", real(c.reasoning.kb_cross_penalty)},
      {"reasoning.follow_kb", boolean(c.reasoning.follow_kb)},
      {"reasoning.chains", integer(c.chains)},
      {"reasoning.use_expanded", boolean(c.use_expanded_graph)},

      {"train.direction", direction(c.train.direction)},
      {"train.epochs", integer(c.train.epochs)},
      {"train.batch_size", integer(c.train.batch_size)},
      {"train.learning_rate", real(c.train.learning_rate)},
      {"train.hidden", integer(c.train.hidden)},
      {"train.embed", integer(c.train.embed)},
      {"train.max_phrase_len", integer(c.train.max_phrase_len)},
      {"train.clip_norm", real(c.train.clip_norm)},
      {"train.use_relation", boolean(c.train.use_relation)},
      {"train.vocab_budget", integer(c.vocab_budget)},

      {"neural.beam", integer(c.neural.beam)},
      {"neural.max_len", integer(c.neural.max_len)},
      {"neural.restrict_to_graph", boolean(c.restrict_to_graph)},
      {"neural.bleu_max_n", integer(c.bleu_max_n)},

      {"backtest.window", integer(c.backtest.window_days)},
      {"backtest.stride", integer(c.backtest.stride_days)},
      {"backtest.steps", steps(c.backtest.steps)},
      {"backtest.m", integer(c.backtest.m)},
      {"backtest.n", integer(c.backtest.n)},
      {"backtest.random_features", integer(c.random_features)},

      {"random.n_features", integer(c.random_analysis.n_features)},
      {"random.window", integer(c.random_analysis.window)},
      {"random.lag", integer(c.random_analysis.lag)},
      {"random.spike_days", integer(c.random_analysis.spike_days)},
      {"random.stride", integer(c.random_analysis.stride)},
      {"random.m", integer(c.random_analysis.m)},
      {"random.min_strength", real(c.random_analysis.min_strength)},
      {"random.max_strength", real(c.random_analysis.max_strength)},
  };
}

std::map<std::string, fs::path*> path_settings(PipelinePaths& p) {
  return {
      {"paths.corpus", &p.corpus},
      {"paths.targets", &p.targets},
      {"paths.topics", &p.topics},
      {"paths.lexicon_positive", &p.lexicon_positive},
      {"paths.lexicon_negative", &p.lexicon_negative},
      {"paths.tuples", &p.tuples},
      {"paths.aliases", &p.aliases},
      {"paths.kb_edges", &p.kb_edges},
      {"paths.word_vectors", &p.word_vectors},
      {"paths.eval_tuples", &p.eval_tuples},
      {"paths.out_dir", &p.out_dir},
  };
}

}  // namespace

PipelineConfig pipeline_config(const KeyValues& kv, const fs::path& base_dir) {
  PipelineConfig c;
  auto fields = settings(c);
  auto paths = path_settings(c.paths);
  for (const auto& [key, value] : kv) {
    if (auto it = paths.find(key); it != paths.end()) {
      const fs::path v = std::string(trim(value));
      *it->second = v.empty() || v.is_absolute() ? v : base_dir / v;
      continue;
    }
    auto it = fields.find(key);
    if (it == fields.end()) fail(ErrorCode::ConfigInvalid, "unknown setting '" + key + "'");
    try {
      it->second.set(value);
    } catch (const Error& e) {
      fail(ErrorCode::ConfigInvalid, key + ": " + e.what());
    }
  }
  if (!kv.contains("run.seed")) fail(ErrorCode::ConfigInvalid, "run.seed is mandatory");
  if (c.paths.out_dir.empty()) fail(ErrorCode::ConfigInvalid, "paths.out_dir is not set");
  if (c.paths.eval_tuples.empty()) c.paths.eval_tuples = c.paths.tuples;
  if (c.threads < 0) fail(ErrorCode::ConfigInvalid, "run.threads must be >= 0");
  if (c.n_max < 1 || c.n_max > 2) fail(ErrorCode::ConfigInvalid, "text.n_max must be 1 or 2");
  if (c.bleu_max_n < 1) fail(ErrorCode::ConfigInvalid, "neural.bleu_max_n must be >= 1");
  if (c.top_k == 0) fail(ErrorCode::ConfigInvalid, "granger.top_k must be >= 1");
  c.train.seed = c.seed;
  c.random_analysis.seed = c.seed;
  try {
    c.reasoning.validate();
    c.train.validate();
    c.backtest.validate();
  } catch (const Error& e) {
    fail(ErrorCode::ConfigInvalid, e.what());
  }
  return c;
}

KeyValues effective_settings(const PipelineConfig& cfg) {
  PipelineConfig copy = cfg;
  KeyValues out;
  for (const auto& [key, field] : settings(copy)) {
    if (key != "run.threads") out[key] = field.get();
  }
  return out;
}

}  // namespace tcause
