#include <cmath>
#include <fstream>
#include <numeric>

#include "tcause/error.hpp"
#include "tcause/format.hpp"
#include "tcause/neural.hpp"

namespace tcause {

void TrainConfig::validate() const {
  if (epochs == 0 || batch_size == 0 || hidden == 0 || embed == 0 || max_phrase_len == 0) {
    fail(ErrorCode::InvalidParams, "training sizes must be positive");
  }
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) {
    fail(ErrorCode::InvalidParams, "learning rate must be finite and >= 0");
  }
  if (!(clip_norm > 0)) fail(ErrorCode::InvalidParams, "clip_norm must be > 0");
}

Seq2SeqModel train(const Dataset& data, const TrainConfig& cfg, const WordVectors* vectors) {
  cfg.validate();
  if (data.examples.empty()) fail(ErrorCode::EmptyGraph, "empty training set");
  Rng rng(cfg.seed);
  Seq2SeqModel model(data.vocab, cfg.embed, cfg.hidden, cfg.use_relation, cfg.direction);
  model.init_random(rng);
  if (vectors) model.init_embeddings(*vectors, rng);

  auto theta = model.params();
  const std::size_t P = theta.size();
  std::vector<double> grad(P), m(P, 0.0), v(P, 0.0);
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  std::size_t t = 0;

  std::vector<std::size_t> order(data.examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0;
    std::size_t epoch_tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0;
      std::size_t batch_tokens = 0;
      for (std::size_t i = start; i < end; ++i) {
        const auto& ex = data.examples[order[i]];
        batch_loss += model.loss_and_grad(ex, grad);
        batch_tokens += ex.dst.size() + 1;
      }
      if (!std::isfinite(batch_loss)) {
        fail(ErrorCode::DivergedLoss, "non-finite loss in epoch " + std::to_string(epoch + 1));
      }
      epoch_loss += batch_loss;
      epoch_tokens += batch_tokens;

      const double inv = 1.0 / static_cast<double>(batch_tokens);
      double norm2 = 0;
      for (auto& g : grad) {
        g *= inv;
        norm2 += g * g;
      }
      const double norm = std::sqrt(norm2);
      if (norm > cfg.clip_norm) {
        const double s = cfg.clip_norm / norm;
        for (auto& g : grad) g *= s;
      }
      ++t;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
      for (std::size_t i = 0; i < P; ++i) {
        m[i] = b1 * m[i] + (1 - b1) * grad[i];
        v[i] = b2 * v[i] + (1 - b2) * grad[i] * grad[i];
        theta[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
      }
    }
    model.loss_history.push_back(epoch_loss / static_cast<double>(epoch_tokens));
  }
  return model;
}

void write_training_log(const Seq2SeqModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << "epoch\tloss\n";
  for (std::size_t i = 0; i < model.loss_history.size(); ++i) {
    out << i + 1 << '\t' << format_real(model.loss_history[i]) << '\n';
  }
}

}  // namespace tcause
