#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "tcause/cgraph.hpp"
#include "tcause/forecast.hpp"
#include "tcause/granger.hpp"
#include "tcause/neural.hpp"
#include "tcause/symbolic.hpp"
#include "tcause/text_features.hpp"

namespace tcause {

// Flat "section.key" -> value view of an INI file. Keys before any section
// header live in the "run" section.
using KeyValues = std::map<std::string, std::string>;

KeyValues read_ini(const std::filesystem::path& path);
// "section.key=value"; throws ConfigInvalid on malformed input.
void apply_override(KeyValues& kv, const std::string& assignment);

struct PipelinePaths {
  std::filesystem::path corpus;
  std::filesystem::path targets;
  std::filesystem::path topics;
  std::filesystem::path lexicon_positive;
  std::filesystem::path lexicon_negative;
  std::filesystem::path tuples;
  std::filesystem::path aliases;
  std::filesystem::path kb_edges;
  std::filesystem::path word_vectors;
  std::filesystem::path eval_tuples;  // eval-bleu; defaults to tuples
  std::filesystem::path out_dir;
};

struct PipelineConfig {
  PipelinePaths paths;
  std::uint64_t seed = 0;
  int threads = 0;

  // extract
  int n_max = 2;
  int min_freq = 5;
  double peak_frac = 0.1;
  DynamicsPolicy dynamics;
  std::size_t tuple_phrase_len = 8;

  // score
  GrangerParams granger;
  std::size_t top_k = 10;

  // graph-build / graph-expand
  GraphFilter graph;
  bool use_extracted_tuples = true;

  // explain-symbolic / explain-neural
  ReasoningConfig reasoning;
  std::string target_phrase;  // empty: target series name
  std::string source_phrase;  // empty: best scored feature found in the graph
  std::size_t chains = 3;
  bool use_expanded_graph = false;

  // train-reasoner / explain-neural / eval-bleu
  TrainConfig train;
  std::size_t vocab_budget = 5000;
  NeuralChainConfig neural;
  bool restrict_to_graph = true;
  int bleu_max_n = 4;

  // forecast / random-analysis
  BacktestConfig backtest;
  std::size_t random_features = 0;  // 0: same count as the composition
  RandomAnalysisConfig random_analysis;
};

// Relative paths resolve against base_dir. Every key must be known; the seed
// is mandatory. File existence is checked per subcommand.
PipelineConfig pipeline_config(const KeyValues& kv, const std::filesystem::path& base_dir);

// Every non-path setting with its effective value.
KeyValues effective_settings(const PipelineConfig& cfg);

}  // namespace tcause
