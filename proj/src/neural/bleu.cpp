#include <cmath>
#include <map>

#include "tcause/neural.hpp"

namespace tcause {

namespace {

std::map<std::vector<std::string>, std::size_t> ngram_counts(const std::vector<std::string>& toks, std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    out[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                 toks.begin() + static_cast<std::ptrdiff_t>(i + n))]++;
  }
  return out;
}

}  // namespace

double bleu(const std::vector<std::string>& candidate, const std::vector<std::string>& reference, int max_n) {
  if (candidate.empty() || reference.empty() || max_n < 1) return 0.0;
  double log_sum = 0;
  for (int n = 1; n <= max_n; ++n) {
    const auto cand = ngram_counts(candidate, static_cast<std::size_t>(n));
    const auto ref = ngram_counts(reference, static_cast<std::size_t>(n));
    std::size_t matched = 0, total = 0;
    for (const auto& [g, c] : cand) {
      total += c;
      const auto it = ref.find(g);
      if (it != ref.end()) matched += std::min(c, it->second);
    }
    double p;
    if (n == 1) {
      if (matched == 0) return 0.0;
      p = static_cast<double>(matched) / static_cast<double>(total);
    } else {
      p = static_cast<double>(matched + 1) / static_cast<double>(total + 1);
    }
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(candidate.size()), r = static_cast<double>(reference.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return 100.0 * bp * std::exp(log_sum / max_n);
}

BleuAtK bleu_at_k(const BeamResult& predictions, const Vocab& vocab, const std::vector<std::string>& reference,
                  int max_n) {
  BleuAtK out;
  if (predictions.hypotheses.empty()) return out;
  double sum = 0;
  for (std::size_t i = 0; i < predictions.hypotheses.size(); ++i) {
    const double b = bleu(vocab.decode(predictions.hypotheses[i].tokens), reference, max_n);
    if (i == 0) out.b_at_1 = b;
    sum += b;
  }
  out.b_at_k_avg = sum / static_cast<double>(predictions.hypotheses.size());
  return out;
}

}  // namespace tcause
