#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tcause/granger.hpp"

namespace tcause {

// Feature x target matrix of causality totals. mask(i, j) is false where the
// pair was never scored.
struct BipartiteCausalGraph {
  std::vector<std::string> features;
  std::vector<std::string> targets;
  Eigen::MatrixXd weights;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;

  BipartiteCausalGraph(std::vector<std::string> features, std::vector<std::string> targets);

  std::size_t feature_index(const std::string& name) const;
  std::size_t target_index(const std::string& name) const;  // throws UnknownTarget
};

// Features and targets are taken in first-seen order from the scores; pairs
// absent from the list are left unobserved.
BipartiteCausalGraph build_bipartite(const std::vector<CausalityScore>& scores);

// Reweights each edge by log(|targets| / df(feature)) where df counts the
// targets the feature reaches with weight above edge_threshold, then zeroes
// all but the top ceil(keep_frac * edges) reweighted edges.
BipartiteCausalGraph tfidf_prune(const BipartiteCausalGraph& g, double keep_frac, double edge_threshold = 0.0);

struct NmfResult {
  Eigen::MatrixXd W;
  Eigen::MatrixXd H;
  std::vector<double> objective;  // masked squared error after each iteration
};

// Multiplicative updates restricted to observed entries.
NmfResult nmf_masked(const Eigen::MatrixXd& V, const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask,
                     int rank, int iters, std::uint64_t seed = 0);

// Fills unobserved entries with W*H; observed entries are copied unchanged.
BipartiteCausalGraph nmf_impute(const BipartiteCausalGraph& g, int rank, int iters, std::uint64_t seed = 0);

struct Composition {
  std::string target;
  std::vector<std::pair<std::string, double>> selected;  // descending score
};

// Top-k features for a target; equal scores are ordered by feature name.
Composition compose(const BipartiteCausalGraph& g, const std::string& target, std::size_t k);

void save_compositions(const std::vector<Composition>& comps, const std::filesystem::path& path);
std::vector<Composition> load_compositions(const std::filesystem::path& path);

}  // namespace tcause
