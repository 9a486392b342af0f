#include "tcause/bipartite.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <json.hpp>

#include "tcause/error.hpp"
#include "tcause/random.hpp"

namespace tcause {

BipartiteCausalGraph::BipartiteCausalGraph(std::vector<std::string> f, std::vector<std::string> t)
    : features(std::move(f)), targets(std::move(t)) {
  const auto nf = static_cast<Eigen::Index>(features.size());
  const auto nt = static_cast<Eigen::Index>(targets.size());
  weights = Eigen::MatrixXd::Zero(nf, nt);
  mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(nf, nt, false);
}

std::size_t BipartiteCausalGraph::feature_index(const std::string& name) const {
  const auto it = std::find(features.begin(), features.end(), name);
  if (it == features.end()) fail(ErrorCode::InvalidParams, "unknown feature '" + name + "'");
  return static_cast<std::size_t>(it - features.begin());
}

std::size_t BipartiteCausalGraph::target_index(const std::string& name) const {
  const auto it = std::find(targets.begin(), targets.end(), name);
  if (it == targets.end()) fail(ErrorCode::UnknownTarget, "unknown target '" + name + "'");
  return static_cast<std::size_t>(it - targets.begin());
}

BipartiteCausalGraph build_bipartite(const std::vector<CausalityScore>& scores) {
  std::vector<std::string> features, targets;
  std::map<std::string, std::size_t> fi, ti;
  for (const auto& s : scores) {
    if (fi.emplace(s.feature, features.size()).second) features.push_back(s.feature);
    if (ti.emplace(s.target, targets.size()).second) targets.push_back(s.target);
  }
  BipartiteCausalGraph g(std::move(features), std::move(targets));
  for (const auto& s : scores) {
    const auto i = static_cast<Eigen::Index>(fi[s.feature]);
    const auto j = static_cast<Eigen::Index>(ti[s.target]);
    g.weights(i, j) = s.total;
    g.mask(i, j) = true;
  }
  return g;
}

BipartiteCausalGraph tfidf_prune(const BipartiteCausalGraph& g, double keep_frac, double edge_threshold) {
  if (!(keep_frac > 0 && keep_frac <= 1)) fail(ErrorCode::InvalidParams, "keep_frac must be in (0, 1]");
  const Eigen::Index nf = g.weights.rows(), nt = g.weights.cols();
  BipartiteCausalGraph out = g;
  out.weights.setZero();

  struct Edge {
    Eigen::Index i, j;
    double w;
  };
  std::vector<Edge> edges;
  for (Eigen::Index i = 0; i < nf; ++i) {
    Eigen::Index df = 0;
    for (Eigen::Index j = 0; j < nt; ++j) {
      if (g.mask(i, j) && g.weights(i, j) > edge_threshold) ++df;
    }
    if (df == 0) continue;
    const double idf = std::log(static_cast<double>(nt) / static_cast<double>(df));
    for (Eigen::Index j = 0; j < nt; ++j) {
      if (g.mask(i, j) && g.weights(i, j) > edge_threshold) edges.push_back({i, j, g.weights(i, j) * idf});
    }
  }
  std::sort(edges.begin(), edges.end(), [&](const Edge& a, const Edge& b) {
    if (a.w != b.w) return a.w > b.w;
    const auto& fa = g.features[static_cast<std::size_t>(a.i)];
    const auto& fb = g.features[static_cast<std::size_t>(b.i)];
    if (fa != fb) return fa < fb;
    return g.targets[static_cast<std::size_t>(a.j)] < g.targets[static_cast<std::size_t>(b.j)];
  });
  const auto keep = static_cast<std::size_t>(std::ceil(keep_frac * static_cast<double>(edges.size()) - 1e-9));
  for (std::size_t e = 0; e < std::min(keep, edges.size()); ++e) {
    if (edges[e].w > 0) out.weights(edges[e].i, edges[e].j) = edges[e].w;
  }
  return out;
}

namespace {

double masked_error(const Eigen::MatrixXd& V, const Eigen::MatrixXd& M, const Eigen::MatrixXd& W,
                    const Eigen::MatrixXd& H) {
  return (M.array() * (V - W * H).array()).square().sum();
}

// x <- x * num / den elementwise; entries with a zero denominator are kept.
void multiplicative_step(Eigen::MatrixXd& x, const Eigen::MatrixXd& num, const Eigen::MatrixXd& den) {
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      if (den(r, c) > 0) x(r, c) *= num(r, c) / den(r, c);
    }
  }
}

}  // namespace

NmfResult nmf_masked(const Eigen::MatrixXd& V, const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask,
                     int rank, int iters, std::uint64_t seed) {
  const Eigen::Index rows = V.rows(), cols = V.cols();
  if (rank < 1 || rank > std::min(rows, cols)) fail(ErrorCode::InvalidRank, "nmf: rank must be in [1, min(dims)]");
  if ((V.array() < 0).any()) fail(ErrorCode::InvalidParams, "nmf: weights must be non-negative");
  const Eigen::MatrixXd M = mask.cast<double>();
  const Eigen::MatrixXd MV = M.cwiseProduct(V);

  const double observed = std::max(1.0, M.sum());
  const double scale = std::sqrt(std::max(MV.sum() / observed, 0.0) / rank);
  Rng rng(seed);
  NmfResult res;
  res.W.resize(rows, rank);
  res.H.resize(rank, cols);
  for (Eigen::Index i = 0; i < res.W.size(); ++i) res.W.data()[i] = scale * rng.uniform(0.5, 1.5);
  for (Eigen::Index i = 0; i < res.H.size(); ++i) res.H.data()[i] = scale * rng.uniform(0.5, 1.5);

  res.objective.reserve(static_cast<std::size_t>(std::max(iters, 0)));
  for (int it = 0; it < iters; ++it) {
    Eigen::MatrixXd MWH = M.cwiseProduct(res.W * res.H);
    multiplicative_step(res.H, res.W.transpose() * MV, res.W.transpose() * MWH);
    MWH = M.cwiseProduct(res.W * res.H);
    multiplicative_step(res.W, MV * res.H.transpose(), MWH * res.H.transpose());
    res.objective.push_back(masked_error(V, M, res.W, res.H));
  }
  return res;
}

BipartiteCausalGraph nmf_impute(const BipartiteCausalGraph& g, int rank, int iters, std::uint64_t seed) {
  const auto res = nmf_masked(g.weights, g.mask, rank, iters, seed);
  const Eigen::MatrixXd fill = res.W * res.H;
  BipartiteCausalGraph out = g;
  for (Eigen::Index j = 0; j < g.weights.cols(); ++j) {
    for (Eigen::Index i = 0; i < g.weights.rows(); ++i) {
      if (!g.mask(i, j)) out.weights(i, j) = std::max(0.0, fill(i, j));
    }
  }
  return out;
}

Composition compose(const BipartiteCausalGraph& g, const std::string& target, std::size_t k) {
  const auto j = static_cast<Eigen::Index>(g.target_index(target));
  std::vector<std::size_t> order(g.features.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double wa = g.weights(static_cast<Eigen::Index>(a), j);
    const double wb = g.weights(static_cast<Eigen::Index>(b), j);
    if (wa != wb) return wa > wb;
    return g.features[a] < g.features[b];
  });
  Composition c{target, {}};
  for (std::size_t r = 0; r < std::min(k, order.size()); ++r) {
    c.selected.emplace_back(g.features[order[r]], g.weights(static_cast<Eigen::Index>(order[r]), j));
  }
  return c;
}

void save_compositions(const std::vector<Composition>& comps, const std::filesystem::path& path) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& c : comps) {
    nlohmann::ordered_json feats = nlohmann::ordered_json::array();
    for (const auto& [name, score] : c.selected) {
      feats.push_back({{"feature", name}, {"score", score}});
    }
    doc.push_back({{"target", c.target}, {"features", feats}});
  }
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

std::vector<Composition> load_compositions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<Composition> out;
  try {
    const auto doc = nlohmann::json::parse(in);
    for (const auto& c : doc) {
      Composition comp{c.at("target").get<std::string>(), {}};
      for (const auto& f : c.at("features")) {
        comp.selected.emplace_back(f.at("feature").get<std::string>(), f.at("score").get<double>());
      }
      out.push_back(std::move(comp));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidInput, path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace tcause
