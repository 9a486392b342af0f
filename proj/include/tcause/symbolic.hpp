#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tcause/cgraph.hpp"
#include "tcause/granger.hpp"
#include "tcause/timeseries.hpp"

namespace tcause {

struct ReasoningConfig {
  std::size_t d_max = 3;
  double epsilon = 0.1;
  std::size_t max_frontier = 200;
  std::size_t max_name_tokens = 8;
  double min_edge_weight = 1.0;
  double kb_cross_penalty = 0.0;  // subtracted from the hop score of KBcross edges
  bool follow_kb = true;

  void validate() const;
};

// Granger totals of phrase series against one target, computed up front.
// Phrases without a series score 0 and are reported as unscored.
class CausalityOracle {
 public:
  CausalityOracle() = default;
  static CausalityOracle from_totals(std::map<std::string, double> totals);
  // Series are aligned with y before scoring; series that cannot be aligned
  // or are too short for the lag setup count as missing.
  static CausalityOracle from_series(const TimeSeries& y, const std::vector<TimeSeries>& series,
                                     const GrangerParams& params = {}, int threads = 0);

  bool has_series(const std::string& phrase) const { return totals_.contains(phrase); }
  double total(const std::string& phrase) const;
  std::size_t size() const { return totals_.size(); }
  const std::map<std::string, double>& totals() const { return totals_; }

 private:
  std::map<std::string, double> totals_;
};

struct FrontierNode {
  std::string phrase;
  double score = 0;  // Granger total against the target, 0 when unscored
  bool scored = false;
};

// layers[d] holds the nodes admitted at backward depth d; layers[0] is the
// resolved target node.
struct Frontiers {
  std::string target;
  std::vector<std::vector<FrontierNode>> layers;

  std::size_t node_count() const;
  bool contains(const std::string& phrase) const;
};

// Backward BFS from the target. A node enters layer d when its backward
// distance to the target is d, it has an edge into layer d-1, it satisfies
// the name/weight restrictions, and either its Granger total reaches epsilon
// or it has no series at all. Each layer keeps the max_frontier nodes with the
// heaviest edge into the previous layer (ties by phrase).
Frontiers backward_infer(const CGraph& g, const std::string& target, const CausalityOracle& oracle,
                         const ReasoningConfig& cfg, const AliasTable* aliases = nullptr);

struct ExplanationChain {
  std::vector<CausalTuple> hops;
  std::vector<double> hop_scores;
  double total_score = 0;

  std::vector<std::string> nodes() const;
};

// Top-k simple source->target paths with at most d_max hops through frontier
// nodes. A hop scores log(1 + w) minus the KBcross penalty plus the Granger
// total of its cause node. Ordering: score desc, fewer hops, then the node
// sequence and relations lexicographically.
std::vector<ExplanationChain> assemble_chains(const Frontiers& frontiers, const CGraph& g, const std::string& source,
                                              std::size_t k, const CausalityOracle& oracle,
                                              const ReasoningConfig& cfg, const AliasTable* aliases = nullptr);

// "a --rel--> b --rel--> c"
std::string chain_text(const ExplanationChain& chain);
void write_chains_text(const std::vector<ExplanationChain>& chains, const std::filesystem::path& path);
void write_chains_tsv(const std::vector<ExplanationChain>& chains, const std::filesystem::path& path);
void write_chains_dot(const std::vector<ExplanationChain>& chains, const std::filesystem::path& path);
void write_frontiers_tsv(const Frontiers& frontiers, const std::filesystem::path& path);

// Shared by the chain writers and the neural reasoner.
std::string edge_kind_name(EdgeKind k);

}  // namespace tcause
