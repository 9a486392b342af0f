#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "tcause/error.hpp"
#include "tcause/format.hpp"
#include "tcause/neural.hpp"

namespace tcause {

Vocab::Vocab() {
  tokens_ = {"<pad>", "<bos>", "<eos>", "<unk>"};
  for (int i = 0; i < kSpecials; ++i) index_.emplace(tokens_[static_cast<std::size_t>(i)], i);
}

Vocab Vocab::build(const std::map<std::string, std::size_t>& counts, std::size_t budget,
                   std::vector<std::string> relations) {
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> toks;
  for (const auto& [t, c] : ranked) {
    if (toks.size() >= budget) break;
    toks.push_back(t);
  }
  return from_tables(std::move(toks), std::move(relations));
}

Vocab Vocab::from_tables(std::vector<std::string> tokens, std::vector<std::string> relations) {
  Vocab v;
  for (auto& t : tokens) {
    if (t.empty() || v.index_.contains(t)) fail(ErrorCode::InvalidInput, "vocabulary token empty or duplicated");
    v.index_.emplace(t, static_cast<int>(v.tokens_.size()));
    v.tokens_.push_back(std::move(t));
  }
  if (relations.empty()) fail(ErrorCode::InvalidInput, "vocabulary needs at least one relation");
  std::sort(relations.begin(), relations.end());
  relations.erase(std::unique(relations.begin(), relations.end()), relations.end());
  v.relations_ = std::move(relations);
  for (std::size_t i = 0; i < v.relations_.size(); ++i) v.rel_index_.emplace(v.relations_[i], static_cast<int>(i));
  return v;
}

int Vocab::id(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

int Vocab::relation_id(const std::string& name) const {
  const auto it = rel_index_.find(name);
  if (it == rel_index_.end()) fail(ErrorCode::UnknownRelation, "unknown relation '" + name + "'");
  return it->second;
}

std::vector<int> Vocab::encode(const std::vector<std::string>& toks) const {
  std::vector<int> out;
  out.reserve(toks.size());
  for (const auto& t : toks) out.push_back(id(t));
  return out;
}

std::vector<std::string> Vocab::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  for (int i : ids) {
    if (i == kEos) break;
    if (i == kPad || i == kBos) continue;
    out.push_back(token(i));
  }
  return out;
}

std::vector<std::string> phrase_to_tokens(const std::string& phrase) {
  std::vector<std::string> out;
  for (auto& t : split(phrase, '_')) {
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::string tokens_to_phrase(const std::vector<std::string>& toks) {
  std::string out;
  for (const auto& t : toks) {
    if (!out.empty()) out += '_';
    out += t;
  }
  return out;
}

Dataset make_dataset(const std::vector<PhrasePair>& pairs, std::size_t vocab_budget, std::size_t max_phrase_len) {
  if (pairs.empty()) fail(ErrorCode::EmptyGraph, "no training pairs");
  if (max_phrase_len == 0) fail(ErrorCode::InvalidParams, "max_phrase_len must be >= 1");
  std::map<std::string, std::size_t> counts;
  std::vector<std::string> rels;
  const auto cut = [&](const std::vector<std::string>& t) {
    return std::vector<std::string>(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(std::min(t.size(), max_phrase_len)));
  };
  for (const auto& p : pairs) {
    if (p.src.empty() || p.dst.empty()) fail(ErrorCode::InvalidInput, "training pair with empty phrase");
    for (const auto& t : cut(p.src)) counts[t]++;
    for (const auto& t : cut(p.dst)) counts[t]++;
    rels.push_back(p.relation);
  }
  Dataset d{Vocab::build(counts, vocab_budget, rels), {}};
  for (const auto& p : pairs) {
    d.examples.push_back({d.vocab.encode(cut(p.src)), d.vocab.relation_id(p.relation), d.vocab.encode(cut(p.dst))});
  }
  return d;
}

Dataset make_dataset(const CGraph& g, ReasonDirection direction, std::size_t vocab_budget,
                     std::size_t max_phrase_len) {
  std::vector<PhrasePair> pairs;
  for (const auto& t : g.tuples()) {
    auto cause = phrase_to_tokens(t.cause);
    auto effect = phrase_to_tokens(t.effect);
    if (direction == ReasonDirection::forward) {
      pairs.push_back({std::move(cause), t.relation, std::move(effect)});
    } else {
      pairs.push_back({std::move(effect), t.relation, std::move(cause)});
    }
  }
  if (pairs.empty()) fail(ErrorCode::EmptyGraph, "graph has no text edges to train on");
  return make_dataset(pairs, vocab_budget, max_phrase_len);
}

WordVectors load_word_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  WordVectors out;
  std::string line;
  std::size_t dim = 0;
  bool first = true;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string word;
    if (!(ss >> word)) continue;
    std::vector<double> v;
    std::string x;
    while (ss >> x) v.push_back(parse_double(x));
    if (first) {
      first = false;
      if (v.size() == 1 && word.find_first_not_of("0123456789") == std::string::npos) continue;  // header
    }
    if (v.empty()) fail(ErrorCode::InvalidInput, path.string() + ": vector without values");
    if (dim == 0) dim = v.size();
    if (v.size() != dim) fail(ErrorCode::InvalidInput, path.string() + ": inconsistent vector dimension");
    out[word] = std::move(v);
  }
  return out;
}

}  // namespace tcause
