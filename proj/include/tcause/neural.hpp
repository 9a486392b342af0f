#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tcause/cgraph.hpp"
#include "tcause/random.hpp"
#include "tcause/symbolic.hpp"

namespace tcause {

enum class ReasonDirection { forward, backward };

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kSpecials = 4;

  Vocab();
  // Keeps the `budget` most frequent tokens (ties by token), plus specials.
  static Vocab build(const std::map<std::string, std::size_t>& counts, std::size_t budget,
                     std::vector<std::string> relations);
  static Vocab from_tables(std::vector<std::string> tokens, std::vector<std::string> relations);

  std::size_t size() const { return tokens_.size(); }
  int id(const std::string& token) const;  // kUnk when absent
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::size_t relation_count() const { return relations_.size(); }
  int relation_id(const std::string& name) const;  // throws UnknownRelation
  const std::string& relation_name(int id) const { return relations_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& relations() const { return relations_; }

  std::vector<int> encode(const std::vector<std::string>& toks) const;
  // Stops at EOS and drops PAD/BOS.
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  bool operator==(const Vocab&) const = default;

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
  std::vector<std::string> relations_;
  std::map<std::string, int> rel_index_;
};

struct Example {
  std::vector<int> src;
  int relation = 0;
  std::vector<int> dst;  // without EOS
};

struct PhrasePair {
  std::vector<std::string> src;
  std::string relation;
  std::vector<std::string> dst;
};

struct Dataset {
  Vocab vocab;
  std::vector<Example> examples;
};

std::vector<std::string> phrase_to_tokens(const std::string& phrase);
std::string tokens_to_phrase(const std::vector<std::string>& toks);

// One example per text edge. Forward maps cause -> effect, backward maps
// effect -> cause. Throws EmptyGraph when the graph has no text edge.
Dataset make_dataset(const CGraph& g, ReasonDirection direction, std::size_t vocab_budget,
                     std::size_t max_phrase_len = 8);
Dataset make_dataset(const std::vector<PhrasePair>& pairs, std::size_t vocab_budget, std::size_t max_phrase_len = 8);

// Text vector format: "word v1 v2 ...", an optional "count dim" header line
// is skipped.
using WordVectors = std::map<std::string, std::vector<double>>;
WordVectors load_word_vectors(const std::filesystem::path& path);

struct TrainConfig {
  ReasonDirection direction = ReasonDirection::backward;
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  double learning_rate = 0.01;
  std::uint64_t seed = 1;
  std::size_t hidden = 64;
  std::size_t embed = 64;
  std::size_t max_phrase_len = 8;
  double clip_norm = 5.0;
  bool use_relation = true;  // false ties every relation to one attention layer

  void validate() const;
};

// GRU encoder/decoder with additive attention whose hidden layer depends on
// the relation:
//   logit_j = v[r]' tanh(Wh h_j + Ws s_{i-1} + b[r])
//   s_i = GRU([emb(y_{i-1}); c_i], s_{i-1}),   p_i = softmax(Wo [s_i; c_i] + bo)
// GRU: z = sig(Wz x + Uz h + bz), r = sig(Wr x + Ur h + br),
//      n = tanh(Wn x + Un (r * h) + bn), h' = (1 - z) * n + z * h.
// All parameters live in one flat vector addressed through named blocks.
class Seq2SeqModel {
 public:
  struct Block {
    std::string name;
    std::size_t offset;
    std::size_t rows;
    std::size_t cols;
    std::size_t size() const { return rows * cols; }
  };

  struct Encoded {
    Eigen::MatrixXd states;  // hidden x J
    Eigen::MatrixXd proj;    // Wh * states
  };

  struct AttentionResult {
    Eigen::VectorXd weights;
    Eigen::VectorXd context;
  };

  Seq2SeqModel() = default;
  Seq2SeqModel(Vocab vocab, std::size_t embed, std::size_t hidden, bool use_relation, ReasonDirection direction);

  void init_random(Rng& rng, double scale = 0.1);
  // Rows of known tokens are copied; other rows are drawn from [-0.05, 0.05].
  void init_embeddings(const WordVectors& vectors, Rng& rng);

  const Vocab& vocab() const { return vocab_; }
  std::size_t embed() const { return embed_; }
  std::size_t hidden() const { return hidden_; }
  bool use_relation() const { return use_relation_; }
  ReasonDirection direction() const { return direction_; }
  std::span<double> params() { return theta_; }
  std::span<const double> params() const { return theta_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(const std::string& name) const;
  Eigen::Map<Eigen::MatrixXd> view(const std::string& name);
  Eigen::Map<const Eigen::MatrixXd> view(const std::string& name) const;

  int attention_slot(int relation) const;  // throws UnknownRelation

  Encoded encode(const std::vector<int>& src) const;
  AttentionResult attention(const Encoded& enc, const Eigen::VectorXd& s_prev, int relation) const;
  // One decoder step: returns the new state and fills log-probabilities.
  Eigen::VectorXd step(const Encoded& enc, int relation, const Eigen::VectorXd& s_prev, int prev_token,
                       Eigen::VectorXd& log_probs) const;
  Eigen::VectorXd initial_state(const Encoded& enc) const { return enc.states.col(enc.states.cols() - 1); }

  // Summed token cross-entropy (targets dst + EOS) under teacher forcing.
  double loss(const Example& ex) const;
  // Same loss; adds its gradient into grad (same layout as params()).
  double loss_and_grad(const Example& ex, std::span<double> grad) const;

  std::vector<double> loss_history;  // mean token cross-entropy per epoch

  std::vector<char> serialize() const;
  std::uint64_t digest() const;

 private:
  Vocab vocab_;
  std::size_t embed_ = 0;
  std::size_t hidden_ = 0;
  bool use_relation_ = true;
  ReasonDirection direction_ = ReasonDirection::backward;
  std::vector<Block> blocks_;
  std::vector<double> theta_;

  void layout();
  friend Seq2SeqModel load_model(const std::filesystem::path& path);
};

void save_model(const Seq2SeqModel& model, const std::filesystem::path& path);
Seq2SeqModel load_model(const std::filesystem::path& path);

// Throws DivergedLoss on a non-finite loss.
Seq2SeqModel train(const Dataset& data, const TrainConfig& cfg, const WordVectors* vectors = nullptr);
void write_training_log(const Seq2SeqModel& model, const std::filesystem::path& path);

struct Hypothesis {
  std::vector<int> tokens;  // includes the final EOS when present
  double log_prob = 0;
};

struct BeamResult {
  std::vector<Hypothesis> hypotheses;  // best first
};

// Decodable tokens exclude PAD and BOS. max_len bounds the token count
// including EOS. Ties go to the smaller token id / lexicographically smaller
// sequence.
std::vector<int> greedy_decode(const Seq2SeqModel& model, const std::vector<int>& src, int relation,
                               std::size_t max_len = 12);
BeamResult beam_decode(const Seq2SeqModel& model, const std::vector<int>& src, int relation, std::size_t k = 5,
                       std::size_t max_len = 12);
double sequence_log_prob(const Seq2SeqModel& model, const std::vector<int>& src, int relation,
                         const std::vector<int>& tokens);

// Sentence BLEU in [0, 100]: clipped unigram precision, add-one smoothing for
// n >= 2, brevity penalty.
double bleu(const std::vector<std::string>& candidate, const std::vector<std::string>& reference, int max_n = 4);

struct BleuAtK {
  double b_at_1 = 0;
  double b_at_k_avg = 0;
};
BleuAtK bleu_at_k(const BeamResult& predictions, const Vocab& vocab, const std::vector<std::string>& reference,
                  int max_n = 4);

struct NeuralChainConfig {
  std::size_t beam = 5;
  std::size_t max_len = 12;
  const CGraph* known_nodes = nullptr;  // optional filter: only accept existing graph phrases
};

// Predicts causes backward from the target. At each depth every relation is
// decoded; candidates are tried by log-probability and the first one that is
// new to the chain, contains no UNK, and passes the gate (or has no series)
// is taken. Stops when an accepted candidate is scored and passes the gate,
// at d_max, or when nothing acceptable is predicted.
ExplanationChain neural_backward_chain(const Seq2SeqModel& model_back, const std::string& target,
                                       const CausalityOracle& oracle, const ReasoningConfig& cfg,
                                       const NeuralChainConfig& ncfg = {});

}  // namespace tcause
