#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "tcause/error.hpp"
#include "tcause/neural.hpp"

namespace tcause {

ExplanationChain neural_backward_chain(const Seq2SeqModel& model_back, const std::string& target,
                                       const CausalityOracle& oracle, const ReasoningConfig& cfg,
                                       const NeuralChainConfig& ncfg) {
  cfg.validate();
  const auto& vocab = model_back.vocab();
  std::string current = normalize_phrase(target);
  if (current.empty()) fail(ErrorCode::InvalidInput, "empty target phrase");
  std::set<std::string> seen{current};

  struct Candidate {
    double log_prob;
    std::string phrase;
    int relation;
  };
  // Built effect-first, reversed at the end.
  std::vector<CausalTuple> hops;
  std::vector<double> scores;
  for (std::size_t depth = 0; depth < cfg.d_max; ++depth) {
    const auto src = vocab.encode(phrase_to_tokens(current));
    std::vector<Candidate> pool;
    for (int r = 0; r < static_cast<int>(vocab.relation_count()); ++r) {
      const auto beam = beam_decode(model_back, src, r, ncfg.beam, ncfg.max_len);
      for (const auto& h : beam.hypotheses) {
        if (std::find(h.tokens.begin(), h.tokens.end(), Vocab::kUnk) != h.tokens.end()) continue;
        const auto phrase = tokens_to_phrase(vocab.decode(h.tokens));
        if (phrase.empty()) continue;  // EOS only
        pool.push_back({h.log_prob, phrase, r});
      }
    }
    std::sort(pool.begin(), pool.end(), [&](const Candidate& a, const Candidate& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      return std::tie(a.phrase, vocab.relation_name(a.relation)) < std::tie(b.phrase, vocab.relation_name(b.relation));
    });

    const Candidate* pick = nullptr;
    for (const auto& c : pool) {
      if (seen.contains(c.phrase)) continue;
      if (ncfg.known_nodes && !ncfg.known_nodes->find(c.phrase)) continue;
      if (oracle.has_series(c.phrase) && !(oracle.total(c.phrase) >= cfg.epsilon)) continue;
      pick = &c;
      break;
    }
    if (!pick) break;

    hops.push_back({pick->phrase, vocab.relation_name(pick->relation), "neural", current, std::exp(pick->log_prob),
                    "neural"});
    scores.push_back(pick->log_prob + oracle.total(pick->phrase));
    seen.insert(pick->phrase);
    current = pick->phrase;
    if (oracle.has_series(pick->phrase)) break;  // scored and through the gate
  }
  if (hops.empty()) fail(ErrorCode::NoChainFound, "no predecessor predicted for '" + target + "'");

  ExplanationChain chain;
  chain.hops.assign(hops.rbegin(), hops.rend());
  chain.hop_scores.assign(scores.rbegin(), scores.rend());
  for (double s : chain.hop_scores) chain.total_score += s;
  return chain;
}

}  // namespace tcause
