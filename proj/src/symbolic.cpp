#include "tcause/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <set>
#include <tuple>

#include <omp.h>

#include "tcause/error.hpp"
#include "tcause/format.hpp"

namespace tcause {

void ReasoningConfig::validate() const {
  if (d_max > 64) fail(ErrorCode::InvalidParams, "reasoning d_max too large");
  if (!(epsilon >= 0) || !std::isfinite(epsilon)) fail(ErrorCode::InvalidParams, "reasoning epsilon must be >= 0");
  if (max_frontier < 1) fail(ErrorCode::InvalidParams, "reasoning max_frontier must be >= 1");
  if (max_name_tokens < 1) fail(ErrorCode::InvalidParams, "reasoning max_name_tokens must be >= 1");
  if (!std::isfinite(min_edge_weight) || !std::isfinite(kb_cross_penalty)) {
    fail(ErrorCode::InvalidParams, "reasoning weights must be finite");
  }
}

CausalityOracle CausalityOracle::from_totals(std::map<std::string, double> totals) {
  CausalityOracle o;
  o.totals_ = std::move(totals);
  return o;
}

CausalityOracle CausalityOracle::from_series(const TimeSeries& y, const std::vector<TimeSeries>& series,
                                             const GrangerParams& params, int threads) {
  // Features sharing a date range share one factorized restricted model.
  std::vector<std::optional<std::pair<TimeSeries, TimeSeries>>> aligned(series.size());
  std::map<std::pair<std::int32_t, std::size_t>, std::optional<CausalityKernel>> kernels;
  for (std::size_t i = 0; i < series.size(); ++i) {
    try {
      auto [ya, fa] = align(y, series[i]);
      const auto key = std::make_pair(ya.start().value, ya.size());
      if (!kernels.contains(key)) {
        try {
          kernels.emplace(key, CausalityKernel(ya, params));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::TooShort) throw;
          kernels.emplace(key, std::nullopt);
        }
      }
      aligned[i].emplace(std::move(ya), std::move(fa));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoOverlap) throw;
    }
  }

  std::vector<double> totals(series.size(), 0.0);
  std::vector<char> ok(series.size(), 0);
  const int nt = threads > 0 ? threads : omp_get_max_threads();
  const auto n = static_cast<std::ptrdiff_t>(series.size());
#pragma omp parallel for num_threads(nt) schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (!aligned[ui]) continue;
    const auto& ya = aligned[ui]->first;
    const auto& kernel = kernels.at({ya.start().value, ya.size()});
    if (!kernel) continue;
    totals[ui] = kernel->score(aligned[ui]->second).total;
    ok[ui] = 1;
  }

  CausalityOracle o;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (ok[i]) o.totals_[series[i].name()] = totals[i];
  }
  return o;
}

double CausalityOracle::total(const std::string& phrase) const {
  const auto it = totals_.find(phrase);
  return it == totals_.end() ? 0.0 : it->second;
}

std::size_t Frontiers::node_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.size();
  return n;
}

bool Frontiers::contains(const std::string& phrase) const {
  for (const auto& l : layers) {
    for (const auto& f : l) {
      if (f.phrase == phrase) return true;
    }
  }
  return false;
}

std::vector<std::string> ExplanationChain::nodes() const {
  std::vector<std::string> out;
  if (hops.empty()) return out;
  out.push_back(hops.front().cause);
  for (const auto& h : hops) out.push_back(h.effect);
  return out;
}

std::string edge_kind_name(EdgeKind k) {
  switch (k) {
    case EdgeKind::text: return "text";
    case EdgeKind::kb_kb: return "kb_kb";
    case EdgeKind::kb_cross: return "kb_cross";
  }
  return "text";
}

namespace {

bool edge_allowed(const GraphEdge& e, const ReasoningConfig& cfg) {
  if (e.weight < cfg.min_edge_weight) return false;
  return cfg.follow_kb || e.kind == EdgeKind::text;
}

std::vector<char> node_allowed(const CGraph& g, const ReasoningConfig& cfg) {
  std::vector<char> ok(g.node_count());
  for (std::uint32_t u = 0; u < g.node_count(); ++u) ok[u] = phrase_tokens(g.phrase(u)) <= cfg.max_name_tokens;
  return ok;
}

std::uint32_t resolve_or_throw(const CGraph& g, const std::string& name, const AliasTable* aliases, ErrorCode code) {
  const auto id = resolve_node(g, name, aliases);
  if (!id) fail(code, "'" + name + "' is not linked to any graph node");
  return *id;
}

}  // namespace

Frontiers backward_infer(const CGraph& g, const std::string& target, const CausalityOracle& oracle,
                         const ReasoningConfig& cfg, const AliasTable* aliases) {
  cfg.validate();
  const auto t = resolve_or_throw(g, target, aliases, ErrorCode::TargetNotInGraph);
  const auto allowed = node_allowed(g, cfg);
  constexpr auto kInf = std::numeric_limits<std::size_t>::max();

  // Backward distances on the restricted graph, ignoring the gate.
  std::vector<std::size_t> dist(g.node_count(), kInf);
  dist[t] = 0;
  std::deque<std::uint32_t> queue{t};
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    if (dist[v] >= cfg.d_max) continue;
    for (const auto& e : g.in_edges(v)) {
      if (!edge_allowed(e, cfg) || !allowed[e.node] || dist[e.node] != kInf) continue;
      dist[e.node] = dist[v] + 1;
      queue.push_back(e.node);
    }
  }

  Frontiers out;
  out.target = g.phrase(t);
  out.layers.push_back({FrontierNode{g.phrase(t), oracle.total(g.phrase(t)), oracle.has_series(g.phrase(t))}});
  std::vector<std::uint32_t> prev{t};

  for (std::size_t d = 1; d <= cfg.d_max && !prev.empty(); ++d) {
    // best edge weight from each candidate into the previous layer
    std::map<std::uint32_t, double> cand;
    for (const auto v : prev) {
      for (const auto& e : g.in_edges(v)) {
        if (dist[e.node] != d || !edge_allowed(e, cfg)) continue;
        auto [it, inserted] = cand.try_emplace(e.node, e.weight);
        if (!inserted) it->second = std::max(it->second, e.weight);
      }
    }
    std::vector<std::tuple<double, std::string, std::uint32_t>> kept;
    for (const auto& [u, w] : cand) {
      const auto& p = g.phrase(u);
      if (oracle.has_series(p) && !(oracle.total(p) >= cfg.epsilon)) continue;
      kept.emplace_back(w, p, u);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
      return std::get<1>(a) < std::get<1>(b);
    });
    if (kept.size() > cfg.max_frontier) kept.resize(cfg.max_frontier);
    if (kept.empty()) break;

    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return std::get<1>(a) < std::get<1>(b); });
    std::vector<FrontierNode> layer;
    prev.clear();
    for (const auto& [w, p, u] : kept) {
      layer.push_back({p, oracle.total(p), oracle.has_series(p)});
      prev.push_back(u);
    }
    out.layers.push_back(std::move(layer));
  }
  return out;
}

namespace {

struct Hop {
  std::uint32_t from;
  std::uint32_t to;
  const GraphEdge* edge;
  double score;
};

struct Candidate {
  std::vector<Hop> hops;
  double score;
};

}  // namespace

std::vector<ExplanationChain> assemble_chains(const Frontiers& frontiers, const CGraph& g, const std::string& source,
                                              std::size_t k, const CausalityOracle& oracle,
                                              const ReasoningConfig& cfg, const AliasTable* aliases) {
  cfg.validate();
  if (k == 0) fail(ErrorCode::InvalidParams, "assemble_chains: k must be >= 1");
  const auto t = g.find(frontiers.target);
  if (!t) fail(ErrorCode::TargetNotInGraph, "frontier target '" + frontiers.target + "' not in graph");
  const auto s_id = resolve_node(g, source, aliases);
  if (!s_id) fail(ErrorCode::NoPathFound, "source '" + source + "' is not linked to any graph node");
  const auto s = *s_id;

  std::vector<char> retained(g.node_count(), 0);
  for (const auto& layer : frontiers.layers) {
    for (const auto& f : layer) {
      if (const auto id = g.find(f.phrase)) retained[*id] = 1;
    }
  }
  if (!retained[s] || s == *t) fail(ErrorCode::NoPathFound, "source '" + source + "' is not on a retained path");

  // Best edge per ordered node pair: highest hop score, then relation, frame.
  const auto hop_score = [&](std::uint32_t from, const GraphEdge& e) {
    const double pen = e.kind == EdgeKind::kb_cross ? cfg.kb_cross_penalty : 0.0;
    return std::log1p(e.weight) - pen + oracle.total(g.phrase(from));
  };
  const auto best_edges = [&](std::uint32_t u) {
    std::map<std::uint32_t, Hop> best;
    for (const auto& e : g.out_edges(u)) {
      if (!retained[e.node] || !edge_allowed(e, cfg)) continue;
      const Hop h{u, e.node, &e, hop_score(u, e)};
      auto [it, inserted] = best.try_emplace(e.node, h);
      if (inserted) continue;
      const auto& cur = *it->second.edge;
      const auto key = [&](const GraphEdge& x) {
        return std::make_tuple(g.relation_name(x.relation), g.frame_name(x.frame), static_cast<int>(x.kind));
      };
      if (h.score > it->second.score || (h.score == it->second.score && key(e) < key(cur))) it->second = h;
    }
    return best;
  };

  std::vector<Candidate> found;
  std::vector<Hop> path;
  std::vector<char> on_path(g.node_count(), 0);
  on_path[s] = 1;
  std::map<std::uint32_t, std::map<std::uint32_t, Hop>> cache;
  // Depth-first enumeration of simple paths with at most d_max hops.
  const auto dfs = [&](auto&& self, std::uint32_t u) -> void {
    if (u == *t) {
      double total = 0;
      for (const auto& h : path) total += h.score;
      found.push_back({path, total});
      return;
    }
    if (path.size() >= cfg.d_max) return;
    auto it = cache.find(u);
    if (it == cache.end()) it = cache.emplace(u, best_edges(u)).first;
    for (const auto& [v, h] : it->second) {
      if (on_path[v]) continue;
      on_path[v] = 1;
      path.push_back(h);
      self(self, v);
      path.pop_back();
      on_path[v] = 0;
    }
  };
  dfs(dfs, s);
  if (found.empty()) fail(ErrorCode::NoPathFound, "no path from '" + source + "' to '" + frontiers.target + "'");

  const auto seq_key = [&](const Candidate& c) {
    std::vector<std::string> key;
    key.push_back(g.phrase(c.hops.front().from));
    for (const auto& h : c.hops) {
      key.push_back(g.phrase(h.to));
      key.push_back(g.relation_name(h.edge->relation));
    }
    return key;
  };
  std::sort(found.begin(), found.end(), [&](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.hops.size() != b.hops.size()) return a.hops.size() < b.hops.size();
    return seq_key(a) < seq_key(b);
  });
  if (found.size() > k) found.resize(k);

  std::vector<ExplanationChain> out;
  for (const auto& c : found) {
    ExplanationChain ch;
    for (const auto& h : c.hops) {
      ch.hops.push_back({g.phrase(h.from), g.relation_name(h.edge->relation), g.frame_name(h.edge->frame),
                         g.phrase(h.to), h.edge->weight, edge_kind_name(h.edge->kind)});
      ch.hop_scores.push_back(h.score);
    }
    ch.total_score = c.score;
    out.push_back(std::move(ch));
  }
  return out;
}

std::string chain_text(const ExplanationChain& chain) {
  if (chain.hops.empty()) return "";
  std::string out = chain.hops.front().cause;
  for (const auto& h : chain.hops) out += " --" + h.relation + "--> " + h.effect;
  return out;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_chains_text(const std::vector<ExplanationChain>& chains, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& c : chains) out << format_real(c.total_score) << '\t' << chain_text(c) << '\n';
}

void write_chains_tsv(const std::vector<ExplanationChain>& chains, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "chain\thop\tcause\trelation\tframe\teffect\tweight\tkind\thop_score\n";
  for (std::size_t i = 0; i < chains.size(); ++i) {
    for (std::size_t j = 0; j < chains[i].hops.size(); ++j) {
      const auto& h = chains[i].hops[j];
      out << i << '\t' << j << '\t' << h.cause << '\t' << h.relation << '\t' << h.frame << '\t' << h.effect << '\t'
          << format_real(h.weight) << '\t' << h.provenance << '\t' << format_real(chains[i].hop_scores[j]) << '\n';
    }
  }
}

void write_chains_dot(const std::vector<ExplanationChain>& chains, const std::filesystem::path& path) {
  auto out = open_out(path);
  std::set<std::tuple<std::string, std::string, std::string>> edges;
  for (const auto& c : chains) {
    for (const auto& h : c.hops) edges.insert({h.cause, h.effect, h.relation});
  }
  out << "digraph chains {\n  rankdir=LR;\n";
  for (const auto& [a, b, rel] : edges) {
    out << "  " << dot_quote(a) << " -> " << dot_quote(b) << " [label=" << dot_quote(rel) << "];\n";
  }
  out << "}\n";
}

void write_frontiers_tsv(const Frontiers& frontiers, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "depth\tphrase\tscored\tgranger_total\n";
  for (std::size_t d = 0; d < frontiers.layers.size(); ++d) {
    for (const auto& f : frontiers.layers[d]) {
      out << d << '\t' << f.phrase << '\t' << (f.scored ? 1 : 0) << '\t' << format_real(f.score) << '\n';
    }
  }
}

}  // namespace tcause
