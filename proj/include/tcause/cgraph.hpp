#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tcause/text_features.hpp"

namespace tcause {

struct CausalTuple {
  std::string cause;
  std::string relation;
  std::string frame;
  std::string effect;
  double weight = 1.0;
  std::string provenance;

  bool operator==(const CausalTuple&) const = default;
};

// Lowercase tokens joined by '_' ("Budget cuts" -> "budget_cuts").
std::string normalize_phrase(std::string_view text);
std::size_t phrase_tokens(std::string_view phrase);

struct CausativePattern {
  std::vector<std::string> lexemes;  // surface forms, possibly multi-word ("lead to")
  std::string frame;
};

// Causative verbs grouped by the frame they evoke.
std::vector<CausativePattern> default_patterns();

// Matches "<cause span> <causative verb> <effect span>" per sentence, one
// match per sentence with earlier patterns taking precedence. Spans
// are cut to max_phrase_len tokens next to the verb; duplicates are merged
// with summed weight.
std::vector<CausalTuple> extract_tuples(const std::vector<Document>& corpus,
                                        const std::vector<CausativePattern>& patterns,
                                        std::size_t max_phrase_len = 8);

struct GraphFilter {
  std::size_t max_degree = 1000;
  std::size_t min_tokens = 1;
  std::size_t max_tokens = 8;
  double min_weight = 1.0;
};

enum class EdgeKind : std::uint8_t { text = 0, kb_kb = 1, kb_cross = 2 };

struct GraphEdge {
  std::uint32_t node;  // destination for out-edges, source for in-edges
  std::uint32_t relation;
  std::uint32_t frame;
  EdgeKind kind;
  double weight;
};

enum class Direction { forward, backward };

// Immutable cause -> effect multigraph with interned phrases. Node ids are
// the lexicographic rank of the phrase; in-edges are the exact transpose of
// out-edges.
class CGraph {
 public:
  struct Record {
    std::string src;
    std::string dst;
    std::string relation;
    std::string frame;
    EdgeKind kind = EdgeKind::text;
    double weight = 1.0;
  };

  CGraph() = default;
  // Duplicate (src, dst, relation, frame, kind) records are merged with
  // summed weight.
  static CGraph from_records(std::vector<Record> records);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return fwd_.size(); }
  const std::string& phrase(std::uint32_t id) const { return nodes_[id]; }
  std::optional<std::uint32_t> find(std::string_view phrase) const;
  std::span<const GraphEdge> out_edges(std::uint32_t id) const;
  std::span<const GraphEdge> in_edges(std::uint32_t id) const;
  std::span<const GraphEdge> edges(std::uint32_t id, Direction d) const {
    return d == Direction::forward ? out_edges(id) : in_edges(id);
  }
  std::size_t degree(std::uint32_t id) const { return out_edges(id).size() + in_edges(id).size(); }
  const std::string& relation_name(std::uint32_t id) const { return relations_[id]; }
  const std::string& frame_name(std::uint32_t id) const { return frames_[id]; }
  std::size_t count_kind(EdgeKind k) const;

  std::vector<Record> records() const;  // canonical order
  std::vector<CausalTuple> tuples() const;  // text edges only

  // Canonical serialized form; its FNV-1a hash is the graph digest.
  std::vector<char> serialize() const;
  std::uint64_t digest() const;

  bool operator==(const CGraph& o) const { return serialize() == o.serialize(); }

 private:
  std::vector<std::string> nodes_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::string> relations_;
  std::vector<std::string> frames_;
  std::vector<std::uint64_t> fwd_offsets_, bwd_offsets_;
  std::vector<GraphEdge> fwd_, bwd_;

  friend CGraph load_graph(const std::filesystem::path& path);
  void rebuild_backward();
};

// Throws EmptyGraph if no edge survives the filters.
CGraph build(const std::vector<CausalTuple>& tuples, const GraphFilter& filter = {});

using AliasTable = std::map<std::string, std::set<std::string>>;

struct KbEdge {
  std::string src;
  std::string dst;
  EdgeKind kind = EdgeKind::kb_kb;
};

struct KbExpansion {
  std::size_t kb_kb = 0;     // undirected entity pairs added
  std::size_t kb_cross = 0;  // undirected entity-phrase links added
};

inline constexpr std::string_view kKbRelation = "related_to";
inline constexpr std::string_view kKbKbFrame = "KB-KB";
inline constexpr std::string_view kKbCrossFrame = "KBcross";

// Adds entity-entity edges and entity-phrase edges wherever an alias equals
// an existing text node. Both kinds are inserted in both directions.
CGraph expand_kb(const CGraph& g, const AliasTable& aliases, const std::vector<KbEdge>& kb_edges,
                 KbExpansion* stats = nullptr);

struct Neighbor {
  std::string phrase;
  std::string relation;
  std::string frame;
  double weight;
  EdgeKind kind;

  bool operator==(const Neighbor&) const = default;
};

// Descending weight, then phrase, relation, frame.
std::vector<Neighbor> neighbors(const CGraph& g, std::string_view node, Direction direction);

void save_graph(const CGraph& g, const std::filesystem::path& path);
// Throws CorruptFile on digest mismatch or truncation, EmptyGraph for a
// well-formed file without edges.
CGraph load_graph(const std::filesystem::path& path);

// cause<TAB>relation<TAB>frame<TAB>effect<TAB>weight
std::vector<CausalTuple> load_tuples_tsv(const std::filesystem::path& path);
void save_tuples_tsv(const std::vector<CausalTuple>& tuples, const std::filesystem::path& path);
// entity<TAB>name1,name2,...
AliasTable load_aliases(const std::filesystem::path& path);
// src<TAB>dst
std::vector<KbEdge> load_kb_edges(const std::filesystem::path& path);

// Resolves a name to a node: exact phrase first, then any alias of an entity
// whose canonical name or alias matches.
std::optional<std::uint32_t> resolve_node(const CGraph& g, std::string_view name, const AliasTable* aliases);

}  // namespace tcause
