#include <algorithm>
#include <cmath>

#include "tcause/error.hpp"
#include "tcause/neural.hpp"

namespace tcause {

namespace {

void check_decode_args(const Seq2SeqModel& model, int relation, std::size_t max_len) {
  model.attention_slot(relation);
  if (max_len == 0) fail(ErrorCode::InvalidParams, "max_len must be >= 1");
}

bool decodable(int token) { return token != Vocab::kPad && token != Vocab::kBos; }

}  // namespace

std::vector<int> greedy_decode(const Seq2SeqModel& model, const std::vector<int>& src, int relation,
                               std::size_t max_len) {
  check_decode_args(model, relation, max_len);
  const auto enc = model.encode(src);
  Eigen::VectorXd s = model.initial_state(enc), lp;
  std::vector<int> out;
  int prev = Vocab::kBos;
  while (out.size() < max_len) {
    s = model.step(enc, relation, s, prev, lp);
    int best = -1;
    for (int t = 0; t < lp.size(); ++t) {
      if (decodable(t) && (best < 0 || lp(t) > lp(best))) best = t;
    }
    out.push_back(best);
    if (best == Vocab::kEos) break;
    prev = best;
  }
  return out;
}

BeamResult beam_decode(const Seq2SeqModel& model, const std::vector<int>& src, int relation, std::size_t k,
                       std::size_t max_len) {
  check_decode_args(model, relation, max_len);
  if (k == 0) fail(ErrorCode::InvalidParams, "beam width must be >= 1");
  const auto enc = model.encode(src);

  struct Beam {
    std::vector<int> tokens;
    double log_prob;
    Eigen::VectorXd state;
    bool done;
  };
  const auto better = [](const Beam& a, const Beam& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.tokens < b.tokens;
  };

  std::vector<Beam> beams{{{}, 0.0, model.initial_state(enc), false}};
  for (std::size_t step = 0; step < max_len; ++step) {
    if (std::all_of(beams.begin(), beams.end(), [](const Beam& b) { return b.done; })) break;
    std::vector<Beam> pool;
    for (const auto& b : beams) {
      if (b.done) {
        pool.push_back(b);
        continue;
      }
      Eigen::VectorXd lp;
      const int prev = b.tokens.empty() ? Vocab::kBos : b.tokens.back();
      const Eigen::VectorXd s = model.step(enc, relation, b.state, prev, lp);
      for (int t = 0; t < lp.size(); ++t) {
        if (!decodable(t)) continue;
        Beam nb{b.tokens, b.log_prob + lp(t), s, t == Vocab::kEos};
        nb.tokens.push_back(t);
        pool.push_back(std::move(nb));
      }
    }
    const auto keep = std::min(k, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(), better);
    pool.resize(keep);
    beams = std::move(pool);
  }
  std::sort(beams.begin(), beams.end(), better);
  BeamResult r;
  for (auto& b : beams) r.hypotheses.push_back({std::move(b.tokens), b.log_prob});
  return r;
}

double sequence_log_prob(const Seq2SeqModel& model, const std::vector<int>& src, int relation,
                         const std::vector<int>& tokens) {
  model.attention_slot(relation);
  const auto enc = model.encode(src);
  Eigen::VectorXd s = model.initial_state(enc), lp;
  int prev = Vocab::kBos;
  double total = 0;
  for (int t : tokens) {
    s = model.step(enc, relation, s, prev, lp);
    total += lp(t);
    prev = t;
  }
  return total;
}

}  // namespace tcause
