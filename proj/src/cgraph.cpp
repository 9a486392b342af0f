#include "tcause/cgraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <tuple>

#include "tcause/binary_io.hpp"
#include "tcause/date.hpp"
#include "tcause/error.hpp"
#include "tcause/format.hpp"

namespace tcause {

namespace {

constexpr char kMagic[4] = {'C', 'G', 'R', 'F'};
constexpr std::uint32_t kVersion = 1;

std::string join(const std::vector<std::string>& toks, std::size_t lo, std::size_t hi, char sep) {
  std::string out;
  for (std::size_t i = lo; i < hi; ++i) {
    if (i > lo) out += sep;
    out += toks[i];
  }
  return out;
}

using RecordKey = std::tuple<std::string, std::string, std::string, std::string, EdgeKind>;

RecordKey key_of(const CGraph::Record& r) {
  return {r.src, r.dst, r.relation, r.frame, r.kind};
}

// Sums a group of weights in a fixed order so the merged value does not
// depend on input order.
double stable_sum(std::vector<double>& ws) {
  std::sort(ws.begin(), ws.end());
  double s = 0;
  for (double w : ws) s += w;
  return s;
}

std::uint32_t intern_index(const std::vector<std::string>& table, const std::string& s) {
  return static_cast<std::uint32_t>(std::lower_bound(table.begin(), table.end(), s) - table.begin());
}

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

std::string normalize_phrase(std::string_view text) {
  const auto toks = tokenize(text);
  return join(toks, 0, toks.size(), '_');
}

std::size_t phrase_tokens(std::string_view phrase) {
  if (phrase.empty()) return 0;
  return static_cast<std::size_t>(std::count(phrase.begin(), phrase.end(), '_')) + 1;
}

std::vector<CausativePattern> default_patterns() {
  return {
      {{"cause", "causes", "caused", "causing"}, "Causation"},
      {{"lead to", "leads to", "led to", "leading to"}, "Causation"},
      {{"result in", "results in", "resulted in", "resulting in"}, "Causation"},
      {{"trigger", "triggers", "triggered"}, "Causation"},
      {{"make", "makes", "made"}, "Causation"},
      {{"force", "forces", "forced"}, "Causation"},
      {{"heats", "heat up", "heats up"}, "Cause_temperature_change"},
      {{"raise", "raises", "raised", "cut", "cuts", "promote", "promotes", "promoted", "boost",
        "boosts", "boosted"},
       "Cause_change_of_position_on_a_scale"},
      {{"develop", "develops", "developing", "improve", "improves", "improved"},
       "Cause_to_make_progress"},
      {{"attract", "attracts", "attracted", "draw", "draws", "drew"}, "Cause_motion"},
  };
}

std::vector<CausalTuple> extract_tuples(const std::vector<Document>& corpus,
                                        const std::vector<CausativePattern>& patterns,
                                        std::size_t max_phrase_len) {
  if (patterns.empty()) fail(ErrorCode::InvalidParams, "extract_tuples: no patterns");
  if (max_phrase_len == 0) fail(ErrorCode::InvalidParams, "extract_tuples: max_phrase_len must be >= 1");

  struct Lexeme {
    std::vector<std::string> toks;
    std::string surface;
  };
  std::vector<std::vector<Lexeme>> groups;
  for (const auto& p : patterns) {
    auto& grp = groups.emplace_back();
    for (const auto& l : p.lexemes) {
      auto toks = tokenize(l);
      if (!toks.empty()) grp.push_back({toks, join(toks, 0, toks.size(), ' ')});
    }
    std::stable_sort(grp.begin(), grp.end(),
                     [](const Lexeme& a, const Lexeme& b) { return a.toks.size() > b.toks.size(); });
  }
  if (std::all_of(groups.begin(), groups.end(), [](const auto& g) { return g.empty(); })) {
    fail(ErrorCode::InvalidParams, "extract_tuples: patterns have no lexemes");
  }

  std::map<std::tuple<std::string, std::string, std::string, std::string>, CausalTuple> merged;
  for (const auto& doc : corpus) {
    const std::string prov = format_date(doc.date) + ":" + std::string(source_name(doc.source));
    std::size_t begin = 0;
    const std::string& text = doc.text;
    while (begin <= text.size()) {
      std::size_t end = text.find_first_of(".!?;\n", begin);
      if (end == std::string::npos) end = text.size();
      const auto toks = tokenize(std::string_view(text).substr(begin, end - begin));
      begin = end + 1;

      // Earlier patterns take precedence, which settles noun/verb clashes
      // such as "budget cuts lead to"; within a pattern the leftmost, then
      // longest, lexeme wins.
      const Lexeme* hit = nullptr;
      std::size_t at = 0;
      std::size_t p = 0;
      for (; p < groups.size() && !hit; ++p) {
        for (std::size_t i = 0; i < toks.size() && !hit; ++i) {
          for (const auto& lx : groups[p]) {
            if (i + lx.toks.size() <= toks.size() &&
                std::equal(lx.toks.begin(), lx.toks.end(), toks.begin() + static_cast<std::ptrdiff_t>(i))) {
              hit = &lx;
              at = i;
              break;
            }
          }
        }
      }
      if (hit) {
        const std::size_t after = at + hit->toks.size();
        const std::size_t c_lo = at > max_phrase_len ? at - max_phrase_len : 0;
        const std::size_t e_hi = std::min(toks.size(), after + max_phrase_len);
        if (c_lo < at && after < e_hi) {
          CausalTuple t{join(toks, c_lo, at, '_'), hit->surface, patterns[p - 1].frame,
                        join(toks, after, e_hi, '_'), 1.0, prov};
          if (t.cause != t.effect) {
            auto [it, inserted] = merged.try_emplace({t.cause, t.relation, t.frame, t.effect}, t);
            if (!inserted) {
              it->second.weight += 1.0;
              it->second.provenance = std::min(it->second.provenance, prov);
            }
          }
        }
      }
      if (end == text.size()) break;
    }
  }
  std::vector<CausalTuple> out;
  out.reserve(merged.size());
  for (auto& [k, t] : merged) out.push_back(std::move(t));
  return out;
}

CGraph CGraph::from_records(std::vector<Record> records) {
  std::map<RecordKey, std::vector<double>> groups;
  for (auto& r : records) {
    if (r.src.empty() || r.dst.empty()) fail(ErrorCode::InvalidInput, "graph edge with empty phrase");
    if (!(r.weight > 0) || !std::isfinite(r.weight)) fail(ErrorCode::InvalidInput, "graph edge weight must be positive");
    groups[key_of(r)].push_back(r.weight);
  }

  CGraph g;
  std::vector<std::string> nodes, rels, frames;
  for (const auto& [k, ws] : groups) {
    nodes.push_back(std::get<0>(k));
    nodes.push_back(std::get<1>(k));
    rels.push_back(std::get<2>(k));
    frames.push_back(std::get<3>(k));
  }
  g.nodes_ = sorted_unique(std::move(nodes));
  g.relations_ = sorted_unique(std::move(rels));
  g.frames_ = sorted_unique(std::move(frames));
  for (std::uint32_t i = 0; i < g.nodes_.size(); ++i) g.index_.emplace(g.nodes_[i], i);

  // groups is ordered by (src, dst, ...) so the CSR rows come out sorted.
  g.fwd_offsets_.assign(g.nodes_.size() + 1, 0);
  g.fwd_.reserve(groups.size());
  for (auto& [k, ws] : groups) {
    const auto src = g.index_.at(std::get<0>(k));
    g.fwd_offsets_[src + 1]++;
    g.fwd_.push_back({g.index_.at(std::get<1>(k)), intern_index(g.relations_, std::get<2>(k)),
                      intern_index(g.frames_, std::get<3>(k)), std::get<4>(k), stable_sum(ws)});
  }
  std::partial_sum(g.fwd_offsets_.begin(), g.fwd_offsets_.end(), g.fwd_offsets_.begin());
  g.rebuild_backward();
  return g;
}

void CGraph::rebuild_backward() {
  bwd_offsets_.assign(nodes_.size() + 1, 0);
  for (const auto& e : fwd_) bwd_offsets_[e.node + 1]++;
  std::partial_sum(bwd_offsets_.begin(), bwd_offsets_.end(), bwd_offsets_.begin());
  bwd_.assign(fwd_.size(), GraphEdge{});
  std::vector<std::uint64_t> cursor(bwd_offsets_.begin(), bwd_offsets_.end() - 1);
  // Iterating sources in id order keeps each in-list sorted by source.
  for (std::uint32_t u = 0; u < nodes_.size(); ++u) {
    for (auto i = fwd_offsets_[u]; i < fwd_offsets_[u + 1]; ++i) {
      const auto& e = fwd_[i];
      bwd_[cursor[e.node]++] = {u, e.relation, e.frame, e.kind, e.weight};
    }
  }
}

std::optional<std::uint32_t> CGraph::find(std::string_view phrase) const {
  const auto it = index_.find(std::string(phrase));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const GraphEdge> CGraph::out_edges(std::uint32_t id) const {
  return {fwd_.data() + fwd_offsets_[id], fwd_.data() + fwd_offsets_[id + 1]};
}

std::span<const GraphEdge> CGraph::in_edges(std::uint32_t id) const {
  return {bwd_.data() + bwd_offsets_[id], bwd_.data() + bwd_offsets_[id + 1]};
}

std::size_t CGraph::count_kind(EdgeKind k) const {
  return static_cast<std::size_t>(
      std::count_if(fwd_.begin(), fwd_.end(), [k](const GraphEdge& e) { return e.kind == k; }));
}

std::vector<CGraph::Record> CGraph::records() const {
  std::vector<Record> out;
  out.reserve(fwd_.size());
  for (std::uint32_t u = 0; u < nodes_.size(); ++u) {
    for (const auto& e : out_edges(u)) {
      out.push_back({nodes_[u], nodes_[e.node], relations_[e.relation], frames_[e.frame], e.kind, e.weight});
    }
  }
  return out;
}

std::vector<CausalTuple> CGraph::tuples() const {
  std::vector<CausalTuple> out;
  for (const auto& r : records()) {
    if (r.kind == EdgeKind::text) out.push_back({r.src, r.relation, r.frame, r.dst, r.weight, ""});
  }
  return out;
}

std::vector<char> CGraph::serialize() const {
  ByteWriter w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kVersion);
  for (const auto* table : {&nodes_, &relations_, &frames_}) {
    w.u32(static_cast<std::uint32_t>(table->size()));
    for (const auto& s : *table) w.str(s);
  }
  w.u64(fwd_.size());
  for (std::size_t i = 1; i < fwd_offsets_.size(); ++i) w.u64(fwd_offsets_[i]);
  for (const auto& e : fwd_) {
    w.u32(e.node);
    w.u32(e.relation);
    w.u32(e.frame);
    w.u8(static_cast<std::uint8_t>(e.kind));
    w.f64(e.weight);
  }
  return w.bytes();
}

std::uint64_t CGraph::digest() const {
  const auto bytes = serialize();
  Fnv1a h;
  h.update(bytes.data(), bytes.size());
  return h.digest();
}

CGraph build(const std::vector<CausalTuple>& tuples, const GraphFilter& filter) {
  if (filter.min_tokens < 1 || filter.max_tokens < filter.min_tokens) {
    fail(ErrorCode::InvalidParams, "graph filter token bounds invalid");
  }
  std::map<std::tuple<std::string, std::string, std::string, std::string>, std::vector<double>> groups;
  for (const auto& t : tuples) {
    std::string c = normalize_phrase(t.cause);
    std::string e = normalize_phrase(t.effect);
    if (c.empty() || e.empty() || c == e) continue;
    const auto nc = phrase_tokens(c), ne = phrase_tokens(e);
    if (nc < filter.min_tokens || nc > filter.max_tokens) continue;
    if (ne < filter.min_tokens || ne > filter.max_tokens) continue;
    if (!(t.weight > 0) || !std::isfinite(t.weight)) continue;
    groups[{std::move(c), std::string(trim(t.relation)), std::string(trim(t.frame)), std::move(e)}].push_back(t.weight);
  }

  std::vector<CGraph::Record> recs;
  std::map<std::string, std::size_t> degree;
  for (auto& [k, ws] : groups) {
    const double w = stable_sum(ws);
    if (w < filter.min_weight) continue;
    const auto& [c, rel, frame, e] = k;
    recs.push_back({c, e, rel, frame, EdgeKind::text, w});
    degree[c]++;
    degree[e]++;
  }
  std::erase_if(recs, [&](const CGraph::Record& r) {
    return degree[r.src] > filter.max_degree || degree[r.dst] > filter.max_degree;
  });
  if (recs.empty()) fail(ErrorCode::EmptyGraph, "no edge survives the graph filters");
  return CGraph::from_records(std::move(recs));
}

CGraph expand_kb(const CGraph& g, const AliasTable& aliases, const std::vector<KbEdge>& kb_edges,
                 KbExpansion* stats) {
  auto recs = g.records();
  std::set<std::pair<std::string, std::string>> kb_pairs, cross_pairs;
  for (const auto& e : kb_edges) {
    const std::string a(trim(e.src)), b(trim(e.dst));
    if (a.empty() || b.empty() || a == b) continue;
    kb_pairs.insert(std::minmax(a, b));
  }
  for (const auto& [entity, names] : aliases) {
    for (const auto& name : names) {
      if (name == entity) continue;
      const auto id = g.find(name);
      if (id) cross_pairs.insert({entity, name});
    }
  }
  const std::string rel(kKbRelation);
  for (const auto& [a, b] : kb_pairs) {
    recs.push_back({a, b, rel, std::string(kKbKbFrame), EdgeKind::kb_kb, 1.0});
    recs.push_back({b, a, rel, std::string(kKbKbFrame), EdgeKind::kb_kb, 1.0});
  }
  for (const auto& [entity, name] : cross_pairs) {
    recs.push_back({entity, name, rel, std::string(kKbCrossFrame), EdgeKind::kb_cross, 1.0});
    recs.push_back({name, entity, rel, std::string(kKbCrossFrame), EdgeKind::kb_cross, 1.0});
  }
  if (stats) {
    stats->kb_kb = kb_pairs.size();
    stats->kb_cross = cross_pairs.size();
  }
  return CGraph::from_records(std::move(recs));
}

std::vector<Neighbor> neighbors(const CGraph& g, std::string_view node, Direction direction) {
  const auto id = g.find(node);
  if (!id) fail(ErrorCode::UnknownNode, "unknown node: " + std::string(node));
  std::vector<Neighbor> out;
  for (const auto& e : g.edges(*id, direction)) {
    out.push_back({g.phrase(e.node), g.relation_name(e.relation), g.frame_name(e.frame), e.weight, e.kind});
  }
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return std::tie(a.phrase, a.relation, a.frame, a.kind) < std::tie(b.phrase, b.relation, b.frame, b.kind);
  });
  return out;
}

void save_graph(const CGraph& g, const std::filesystem::path& path) {
  ByteWriter w;
  const auto bytes = g.serialize();
  w.raw(bytes.data(), bytes.size());
  w.save(path);
}

CGraph load_graph(const std::filesystem::path& path) {
  auto r = ByteReader::open(path);
  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.u8());
  if (!std::equal(magic, magic + 4, kMagic)) fail(ErrorCode::CorruptFile, path.string() + ": not a graph file");
  if (r.u32() != kVersion) fail(ErrorCode::CorruptFile, path.string() + ": unsupported graph version");

  CGraph g;
  for (auto* table : {&g.nodes_, &g.relations_, &g.frames_}) {
    const auto n = r.u32();
    if (n > r.remaining()) fail(ErrorCode::CorruptFile, "string table larger than file");
    table->reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) table->push_back(r.str());
    if (!std::is_sorted(table->begin(), table->end()) ||
        std::adjacent_find(table->begin(), table->end()) != table->end()) {
      fail(ErrorCode::CorruptFile, "string table not canonical");
    }
  }
  const auto m = r.u64();
  if (m > r.remaining()) fail(ErrorCode::CorruptFile, "edge count larger than file");
  g.fwd_offsets_.assign(g.nodes_.size() + 1, 0);
  for (std::size_t i = 1; i <= g.nodes_.size(); ++i) {
    g.fwd_offsets_[i] = r.u64();
    if (g.fwd_offsets_[i] < g.fwd_offsets_[i - 1] || g.fwd_offsets_[i] > m) {
      fail(ErrorCode::CorruptFile, "adjacency offsets invalid");
    }
  }
  if (g.fwd_offsets_.back() != m) fail(ErrorCode::CorruptFile, "adjacency offsets invalid");
  g.fwd_.reserve(m);
  for (std::uint64_t i = 0; i < m; ++i) {
    GraphEdge e{};
    e.node = r.u32();
    e.relation = r.u32();
    e.frame = r.u32();
    const auto kind = r.u8();
    e.weight = r.f64();
    if (e.node >= g.nodes_.size() || e.relation >= g.relations_.size() || e.frame >= g.frames_.size() ||
        kind > 2) {
      fail(ErrorCode::CorruptFile, "edge references out of range");
    }
    e.kind = static_cast<EdgeKind>(kind);
    g.fwd_.push_back(e);
  }
  if (r.remaining() != 0) fail(ErrorCode::CorruptFile, "trailing bytes in graph file");
  if (m == 0) fail(ErrorCode::EmptyGraph, "graph file has no edges");
  for (std::uint32_t i = 0; i < g.nodes_.size(); ++i) g.index_.emplace(g.nodes_[i], i);
  g.rebuild_backward();
  return g;
}

namespace {

std::vector<std::vector<std::string>> read_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    rows.push_back(split(line, '\t'));
  }
  return rows;
}

}  // namespace

std::vector<CausalTuple> load_tuples_tsv(const std::filesystem::path& path) {
  std::vector<CausalTuple> out;
  std::size_t lineno = 0;
  for (const auto& f : read_tsv(path)) {
    ++lineno;
    if (f.size() < 4 || f.size() > 6) {
      fail(ErrorCode::InvalidInput, path.string() + ": tuple row " + std::to_string(lineno) + " needs 4-6 fields");
    }
    if (lineno == 1 && f[0] == "cause" && f[3] == "effect") continue;  // header
    CausalTuple t{f[0], f[1], f[2], f[3], f.size() >= 5 ? parse_double(f[4]) : 1.0,
                  f.size() == 6 ? f[5] : path.filename().string()};
    out.push_back(std::move(t));
  }
  return out;
}

void save_tuples_tsv(const std::vector<CausalTuple>& tuples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << "cause\trelation\tframe\teffect\tweight\n";
  for (const auto& t : tuples) {
    out << t.cause << '\t' << t.relation << '\t' << t.frame << '\t' << t.effect << '\t' << format_real(t.weight)
        << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "write failed: " + path.string());
}

AliasTable load_aliases(const std::filesystem::path& path) {
  AliasTable out;
  for (const auto& f : read_tsv(path)) {
    if (f.size() != 2) fail(ErrorCode::InvalidInput, path.string() + ": alias row needs 2 fields");
    const std::string entity(trim(f[0]));
    if (entity.empty()) fail(ErrorCode::InvalidInput, path.string() + ": empty entity");
    auto& names = out[entity];
    for (const auto& n : split(f[1], ',')) {
      auto norm = normalize_phrase(n);
      if (!norm.empty()) names.insert(std::move(norm));
    }
    if (names.empty()) fail(ErrorCode::InvalidInput, path.string() + ": entity " + entity + " has no aliases");
  }
  return out;
}

std::vector<KbEdge> load_kb_edges(const std::filesystem::path& path) {
  std::vector<KbEdge> out;
  for (const auto& f : read_tsv(path)) {
    if (f.size() != 2) fail(ErrorCode::InvalidInput, path.string() + ": kb edge row needs 2 fields");
    out.push_back({std::string(trim(f[0])), std::string(trim(f[1])), EdgeKind::kb_kb});
  }
  return out;
}

std::optional<std::uint32_t> resolve_node(const CGraph& g, std::string_view name, const AliasTable* aliases) {
  if (auto id = g.find(name)) return id;
  const auto norm = normalize_phrase(name);
  if (auto id = g.find(norm)) return id;
  if (!aliases) return std::nullopt;
  for (const auto& [entity, names] : *aliases) {
    if (entity != name && !names.contains(norm)) continue;
    if (auto id = g.find(entity)) return id;
    for (const auto& n : names) {
      if (auto id = g.find(n)) return id;
    }
  }
  return std::nullopt;
}

}  // namespace tcause
