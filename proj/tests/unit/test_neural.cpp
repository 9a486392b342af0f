#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "support/neural_oracle.hpp"
#include "tcause/error.hpp"
#include "tcause/neural.hpp"

using namespace tcause;
using neural_oracle::random_model;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidParams;
}

std::vector<PhrasePair> ten_pairs() {
  const std::vector<std::string> words{"oil",   "price", "rise", "tax",  "cut",   "jobs", "storm", "flood",
                                       "crop",  "loss",  "rate", "hike", "stock", "fall", "war",   "fear"};
  std::vector<PhrasePair> out;
  for (std::size_t i = 0; i < 10; ++i) {
    out.push_back({{words[i % 16], words[(i + 3) % 16]},
                   i % 2 ? "causes" : "lead to",
                   {words[(i + 7) % 16], words[(i * 5 + 1) % 16]}});
  }
  return out;
}

}  // namespace

TEST_CASE("vocabulary and dataset") {
  SUBCASE("budget") {
    std::map<std::string, std::size_t> counts;
    for (int i = 0; i < 50; ++i) counts["t" + std::to_string(i)] = static_cast<std::size_t>(100 - i);
    const auto v = Vocab::build(counts, 10, {"causes"});
    CHECK(v.size() == 14);
    CHECK(v.id("t0") == 4);
    CHECK(v.id("t9") == 13);
    CHECK(v.id("t10") == Vocab::kUnk);
    CHECK(code_of([&] { v.relation_id("nope"); }) == ErrorCode::UnknownRelation);
  }
  SUBCASE("directions") {
    const auto g = build({{"weapon equipped", "result", "Causation", "war", 1.0, ""}});
    const auto f = make_dataset(g, ReasonDirection::forward, 100);
    REQUIRE(f.examples.size() == 1);
    CHECK(f.vocab.decode(f.examples[0].src) == std::vector<std::string>{"weapon", "equipped"});
    CHECK(f.vocab.relation_name(f.examples[0].relation) == "result");
    CHECK(f.vocab.decode(f.examples[0].dst) == std::vector<std::string>{"war"});
    const auto b = make_dataset(g, ReasonDirection::backward, 100);
    CHECK(b.vocab.decode(b.examples[0].src) == std::vector<std::string>{"war"});
    CHECK(b.vocab.decode(b.examples[0].dst) == std::vector<std::string>{"weapon", "equipped"});
  }
  SUBCASE("kb-only graph has nothing to train on") {
    const auto g0 = build({{"a", "causes", "Causation", "b", 1.0, ""}});
    const auto g = expand_kb(g0, {{"e", {"a"}}}, {});
    CHECK(make_dataset(g, ReasonDirection::forward, 10).examples.size() == 1);
  }
}

TEST_CASE("attention") {
  auto m = random_model(3, 6, 3, 4, 5, 0.5);
  SUBCASE("single source position") {
    const auto enc = m.encode({5});
    const auto a = m.attention(enc, Eigen::VectorXd::Constant(5, 0.3), 1);
    REQUIRE(a.weights.size() == 1);
    CHECK(a.weights(0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("distribution and relation dependence") {
    const auto enc = m.encode({4, 5, 6, 7});
    const Eigen::VectorXd s = Eigen::VectorXd::LinSpaced(5, -1, 1);
    for (int r = 0; r < 3; ++r) {
      const auto a = m.attention(enc, s, r);
      CHECK(a.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(a.weights.minCoeff() >= 0.0);
      CHECK((a.context - enc.states * a.weights).norm() < 1e-14);
    }
    CHECK((m.attention(enc, s, 0).weights - m.attention(enc, s, 1).weights).norm() > 1e-6);
  }
  SUBCASE("zero relation layer gives uniform weights") {
    m.view("att_v").col(2).setZero();
    m.view("att_b").col(2).setZero();
    const auto a = m.attention(m.encode({4, 5, 6, 7}), Eigen::VectorXd::Ones(5), 2);
    for (int j = 0; j < 4; ++j) CHECK(a.weights(j) == doctest::Approx(0.25).epsilon(1e-14));
  }
  SUBCASE("unknown relation") {
    CHECK(code_of([&] { m.attention(m.encode({4}), Eigen::VectorXd::Zero(5), 3); }) == ErrorCode::UnknownRelation);
    CHECK(code_of([&] { beam_decode(m, {4}, -1, 2, 3); }) == ErrorCode::UnknownRelation);
  }
}

TEST_CASE("analytic gradients match central differences") {
  for (bool use_rel : {true, false}) {
    auto m = random_model(11, 7, 3, 3, 4, 0.6, use_rel);
    const std::vector<Example> batch{{{4, 5, 6}, 1, {7, 8}}, {{9, 4}, 2, {5}}};
    std::vector<neural_oracle::Probe> zeros;
    const auto probes = neural_oracle::probe_gradients(m, batch, 6, 5, &zeros);
    for (const auto& p : probes) {
      INFO(p.block, " index ", p.index);
      CHECK(p.rel_err() < 1e-4);
    }
    for (const auto& z : zeros) CHECK(std::abs(z.numeric - z.analytic) < 1e-7);
    CHECK(probes.size() >= 50);
  }
}

TEST_CASE("loss is a plain sum over examples") {
  auto m = random_model(2, 5, 2, 3, 3, 0.4);
  const Example a{{4, 5}, 0, {6}}, b{{7}, 1, {8, 4}};
  std::vector<double> g1(m.params().size(), 0.0), g2(m.params().size(), 0.0);
  const double l1 = m.loss_and_grad(a, g1) + m.loss_and_grad(b, g1);
  const double l2 = m.loss_and_grad(b, g2) + m.loss_and_grad(a, g2);
  CHECK(l1 == doctest::Approx(l2).epsilon(1e-14));
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == doctest::Approx(g2[i]).epsilon(1e-12));
  CHECK(m.loss(a) == doctest::Approx(-sequence_log_prob(m, a.src, 0, {6, Vocab::kEos})).epsilon(1e-14));
}

TEST_CASE("training contracts") {
  const auto data = make_dataset(ten_pairs(), 100);
  TrainConfig cfg;
  cfg.hidden = 24;
  cfg.embed = 16;
  cfg.batch_size = 2;
  cfg.learning_rate = 0.02;
  cfg.seed = 9;

  SUBCASE("learning rate zero") {
    auto c = cfg;
    c.learning_rate = 0;
    c.epochs = 3;
    const auto m = train(data, c);
    Rng rng(c.seed);
    Seq2SeqModel init(data.vocab, c.embed, c.hidden, true, c.direction);
    init.init_random(rng);
    CHECK(std::equal(m.params().begin(), m.params().end(), init.params().begin()));
    // epochs visit examples in different orders, so only rounding differs
    CHECK(m.loss_history[0] == doctest::Approx(m.loss_history[2]).epsilon(1e-13));
  }
  SUBCASE("overfit, memorize and determinism") {
    auto c = cfg;
    c.epochs = 200;
    const auto m = train(data, c);
    CHECK(m.loss_history.back() <= 0.5 * m.loss_history.front());
    std::size_t exact = 0;
    for (const auto& ex : data.examples) {
      auto out = greedy_decode(m, ex.src, ex.relation, 12);
      if (!out.empty() && out.back() == Vocab::kEos) out.pop_back();
      exact += out == ex.dst;
    }
    CHECK(exact == data.examples.size());
    const auto again = train(data, c);
    CHECK(again.digest() == m.digest());
    CHECK(again.loss_history.back() == m.loss_history.back());
  }
  SUBCASE("single example") {
    const auto one = make_dataset(std::vector<PhrasePair>{{{"greenhouse", "gases"}, "cause", {"global", "warming"}}}, 10);
    auto c = cfg;
    c.epochs = 60;
    const auto m = train(one, c);
    const auto out = greedy_decode(m, one.examples[0].src, 0, 12);
    CHECK(one.vocab.decode(out) == std::vector<std::string>{"global", "warming"});
    CHECK(out.back() == Vocab::kEos);
  }
  SUBCASE("invalid config") {
    auto c = cfg;
    c.epochs = 0;
    CHECK(code_of([&] { train(data, c); }) == ErrorCode::InvalidParams);
  }
  SUBCASE("divergence is reported") {
    auto c = cfg;
    c.learning_rate = 1e300;
    c.clip_norm = 1e300;
    c.epochs = 5;
    CHECK(code_of([&] { train(data, c); }) == ErrorCode::DivergedLoss);
  }
}

TEST_CASE("beam search") {
  SUBCASE("width 1 equals greedy") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto m = random_model(seed, 6, 2, 4, 5, 1.0);
      const std::vector<int> src{4, static_cast<int>(4 + seed % 6)};
      for (int r = 0; r < 2; ++r) {
        const auto b = beam_decode(m, src, r, 1, 6);
        REQUIRE(b.hypotheses.size() == 1);
        CHECK(b.hypotheses[0].tokens == greedy_decode(m, src, r, 6));
      }
    }
  }
  SUBCASE("exhaustive oracle on vocab {EOS, UNK, a}, max_len 2") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto m = random_model(seed * 7, 1, 2, 3, 3, 2.0);
      const std::vector<int> src{4, 4};
      const auto ranked = neural_oracle::ranked_outputs(m, src, 1, 2);
      REQUIRE(ranked.size() == 7);  // E, UE, UU, UA, AE, AU, AA
      double mass = 0;
      for (const auto& [lp, s] : ranked) mass += std::exp(lp);
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
      for (std::size_t k = 3; k <= 7; ++k) {
        const auto b = beam_decode(m, src, 1, k, 2);
        REQUIRE(b.hypotheses.size() == k);
        for (std::size_t i = 0; i < k; ++i) {
          CHECK(b.hypotheses[i].tokens == ranked[i].second);
          CHECK(b.hypotheses[i].log_prob == doctest::Approx(ranked[i].first).epsilon(1e-12));
        }
      }
    }
  }
  SUBCASE("distinct hypotheses, sorted") {
    const auto m = random_model(4, 8, 1, 4, 6, 0.8);
    const auto b = beam_decode(m, {5, 6, 7}, 0, 3, 5);
    REQUIRE(b.hypotheses.size() == 3);
    CHECK(b.hypotheses[0].tokens != b.hypotheses[1].tokens);
    CHECK(b.hypotheses[1].tokens != b.hypotheses[2].tokens);
    CHECK(b.hypotheses[0].tokens != b.hypotheses[2].tokens);
    CHECK(b.hypotheses[0].log_prob >= b.hypotheses[1].log_prob);
    CHECK(b.hypotheses[1].log_prob >= b.hypotheses[2].log_prob);
    for (const auto& h : b.hypotheses) CHECK((h.tokens.size() == 5 || h.tokens.back() == Vocab::kEos));
  }
}

TEST_CASE("BLEU") {
  using V = std::vector<std::string>;
  CHECK(bleu({"global", "warming"}, {"global", "warming"}) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(bleu({"a", "b", "c", "d", "e", "f"}, {"a", "b", "c", "d", "e", "f"}) == doctest::Approx(100.0));
  CHECK(bleu({"x", "y"}, {"a", "b"}) == 0.0);
  CHECK(bleu({}, {"a"}) == 0.0);
  // p1 = 1/3, p2 = (0+1)/(2+1), p3 = (0+1)/(1+1), p4 = 1, no brevity penalty
  CHECK(bleu(V{"the", "the", "the"}, V{"the", "cat"}) == doctest::Approx(100.0 * std::pow(1.0 / 18.0, 0.25)).epsilon(1e-12));
  // short candidate: p1 = 1, p2 = 2/2, p3 = p4 = 1, BP = exp(1 - 4/2)
  CHECK(bleu(V{"oil", "price"}, V{"oil", "price", "rise", "fast"}) == doctest::Approx(100.0 * std::exp(-1.0)).epsilon(1e-12));

  const Vocab v = Vocab::from_tables({"global", "warming", "ice"}, {"causes"});
  BeamResult r;
  r.hypotheses = {{{4, 5, Vocab::kEos}, -0.1}, {{6, Vocab::kEos}, -2.0}};
  const auto b = bleu_at_k(r, v, {"global", "warming"});
  CHECK(b.b_at_1 == doctest::Approx(100.0));
  CHECK(b.b_at_k_avg == doctest::Approx(50.0));
}

TEST_CASE("model file round trip") {
  const auto data = make_dataset(ten_pairs(), 100);
  TrainConfig c;
  c.hidden = 6;
  c.embed = 4;
  c.epochs = 2;
  const auto m = train(data, c);
  const auto dir = fs::temp_directory_path() / "tcause_neural_test";
  fs::create_directories(dir);
  save_model(m, dir / "m.bin");
  const auto back = load_model(dir / "m.bin");
  CHECK(back.digest() == m.digest());
  CHECK(back.vocab() == m.vocab());
  CHECK(back.loss_history == m.loss_history);
  fs::resize_file(dir / "m.bin", fs::file_size(dir / "m.bin") - 3);
  CHECK(code_of([&] { load_model(dir / "m.bin"); }) == ErrorCode::CorruptFile);

  write_training_log(m, dir / "log.tsv");
  std::ifstream in(dir / "log.tsv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "epoch\tloss");
}

TEST_CASE("word vectors") {
  const auto dir = fs::temp_directory_path() / "tcause_neural_test";
  fs::create_directories(dir);
  {
    std::ofstream o(dir / "vec.txt");
    o << "2 3\noil 1 0 0\nprice 0 1 0.5\n";
  }
  const auto wv = load_word_vectors(dir / "vec.txt");
  REQUIRE(wv.size() == 2);
  CHECK(wv.at("price")[2] == 0.5);
  const auto data = make_dataset(ten_pairs(), 100);
  Seq2SeqModel m(data.vocab, 3, 4, true, ReasonDirection::backward);
  Rng rng(1);
  m.init_embeddings(wv, rng);
  CHECK(m.view("emb")(data.vocab.id("price"), 1) == 1.0);
  CHECK(std::abs(m.view("emb")(data.vocab.id("tax"), 0)) <= 0.05);
  Seq2SeqModel wrong(data.vocab, 5, 4, true, ReasonDirection::backward);
  CHECK(code_of([&] { wrong.init_embeddings(wv, rng); }) == ErrorCode::InvalidInput);
}

TEST_CASE("neural backward chain") {
  // backward pairs: c -> b, b -> a
  const auto g = build({{"a", "causes", "Causation", "b", 1.0, ""}, {"b", "causes", "Causation", "c", 1.0, ""}});
  const auto data = make_dataset(g, ReasonDirection::backward, 100);
  TrainConfig c;
  c.hidden = 16;
  c.embed = 8;
  c.epochs = 150;
  c.batch_size = 2;
  c.learning_rate = 0.03;
  const auto m = train(data, c);

  ReasoningConfig rc;
  rc.d_max = 4;
  rc.epsilon = 0.5;
  const auto orc = CausalityOracle::from_totals({{"a", 0.9}});
  const auto chain = neural_backward_chain(m, "c", orc, rc);
  CHECK(chain.nodes() == std::vector<std::string>{"a", "b", "c"});
  for (std::size_t i = 1; i < chain.hops.size(); ++i) CHECK(chain.hops[i - 1].effect == chain.hops[i].cause);

  SUBCASE("d_max 0") {
    auto z = rc;
    z.d_max = 0;
    CHECK(code_of([&] { neural_backward_chain(m, "c", orc, z); }) == ErrorCode::NoChainFound);
  }
  SUBCASE("vacuous gate") {
    auto z = rc;
    z.epsilon = 0;
    z.d_max = 2;
    const auto ch = neural_backward_chain(m, "c", CausalityOracle{}, z);
    CHECK(ch.hops.size() == 2);
  }
  SUBCASE("failing gate rejects the candidate") {
    const auto low = CausalityOracle::from_totals({{"b", 0.1}});
    const auto ch = neural_backward_chain(m, "c", low, rc);
    CHECK(ch.hops.back().effect == "c");
    CHECK(ch.hops.back().cause != "b");
    for (const auto& h : ch.hops) CHECK(h.cause != "b");
  }
}
