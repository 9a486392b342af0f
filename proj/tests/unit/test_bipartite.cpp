#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "tcause/bipartite.hpp"
#include "tcause/error.hpp"
#include "tcause/random.hpp"

using namespace tcause;

namespace {

BipartiteCausalGraph toy(std::vector<std::string> f, std::vector<std::string> t, std::vector<std::vector<double>> w) {
  BipartiteCausalGraph g(std::move(f), std::move(t));
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = 0; j < w[i].size(); ++j) {
      g.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w[i][j];
      g.mask(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = true;
    }
  }
  return g;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidParams;
}

}  // namespace

TEST_CASE("build_bipartite places totals and marks observed pairs") {
  std::vector<CausalityScore> scores{{"a", "x", {}, 0.5}, {"b", "y", {}, 0.25}};
  const auto g = build_bipartite(scores);
  CHECK(g.features == std::vector<std::string>{"a", "b"});
  CHECK(g.targets == std::vector<std::string>{"x", "y"});
  CHECK(g.weights(0, 0) == 0.5);
  CHECK(g.mask(0, 0));
  CHECK_FALSE(g.mask(0, 1));
}

TEST_CASE("tfidf_prune removes features linked to every target") {
  const auto g = toy({"the", "budget"}, {"fb", "goog", "msft"}, {{0.9, 0.8, 0.7}, {0.5, 0, 0}});
  const auto p = tfidf_prune(g, 1.0);
  CHECK(p.weights.row(0).isZero());
  CHECK(p.weights(1, 0) == doctest::Approx(0.5 * std::log(3.0)));
}

TEST_CASE("tfidf_prune with keep_frac 1 and unit document frequency preserves ranking") {
  const auto g = toy({"a", "b", "c"}, {"x", "y"}, {{0.3, 0}, {0, 0.9}, {0.6, 0}});
  const auto p = tfidf_prune(g, 1.0);
  const double scale = std::log(2.0);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) CHECK(p.weights(i, j) == doctest::Approx(g.weights(i, j) * scale));
  }
}

TEST_CASE("tfidf_prune matches an exhaustive recomputation on a toy graph") {
  const auto g = toy({"f1", "f2", "f3"}, {"t1", "t2"}, {{0.8, 0.4}, {0.5, 0.0}, {0.0, 0.3}});
  for (double keep : {0.2, 0.5, 0.75, 1.0}) {
    const auto p = tfidf_prune(g, keep);
    // Oracle: reweight each edge by hand, rank edges by counting strictly
    // larger reweighted edges (ties broken by feature then target name).
    struct E { int i, j; double w; };
    std::vector<E> edges;
    for (int i = 0; i < 3; ++i) {
      int df = 0;
      for (int j = 0; j < 2; ++j) df += g.weights(i, j) > 0;
      for (int j = 0; j < 2; ++j) {
        if (g.weights(i, j) > 0) edges.push_back({i, j, g.weights(i, j) * std::log(2.0 / df)});
      }
    }
    const auto keep_n = static_cast<std::size_t>(std::ceil(keep * edges.size() - 1e-9));
    for (const auto& e : edges) {
      std::size_t rank = 0;
      for (const auto& o : edges) {
        if (o.w > e.w || (o.w == e.w && (o.i < e.i || (o.i == e.i && o.j < e.j)))) ++rank;
      }
      const bool kept = rank < keep_n && e.w > 0;
      CHECK((p.weights(e.i, e.j) > 0) == kept);
      if (kept) CHECK(p.weights(e.i, e.j) == doctest::Approx(e.w));
    }
  }
  CHECK(code_of([&] { tfidf_prune(g, 0.0); }) == ErrorCode::InvalidParams);
  CHECK(code_of([&] { tfidf_prune(g, 1.5); }) == ErrorCode::InvalidParams);
}

TEST_CASE("nmf recovers a masked rank-1 matrix") {
  Rng rng(1);
  Eigen::VectorXd u(12), v(9);
  for (auto& x : u) x = rng.uniform(0.2, 1.0);
  for (auto& x : v) x = rng.uniform(0.2, 1.0);
  const Eigen::MatrixXd truth = u * v.transpose();
  BipartiteCausalGraph g(std::vector<std::string>(12, "f"), std::vector<std::string>(9, "t"));
  g.weights = truth;
  std::vector<Eigen::Index> cells(static_cast<std::size_t>(truth.size()));
  for (Eigen::Index i = 0; i < truth.size(); ++i) cells[static_cast<std::size_t>(i)] = i;
  rng.shuffle(cells);
  g.mask.setConstant(true);
  const auto hidden = static_cast<std::size_t>(0.2 * truth.size());
  for (std::size_t c = 0; c < hidden; ++c) {
    g.mask.data()[cells[c]] = false;
    g.weights.data()[cells[c]] = 0;
  }
  const auto out = nmf_impute(g, 1, 2000, 5);
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    if (!g.mask.data()[i]) {
      CHECK(std::abs(out.weights.data()[i] - truth.data()[i]) < 1e-3);
    } else {
      CHECK(out.weights.data()[i] == g.weights.data()[i]);
    }
  }
}

TEST_CASE("nmf objective is monotone and output non-negative") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    Eigen::MatrixXd V(10, 7);
    for (auto& x : V.reshaped()) x = rng.uniform(0, 2);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> M(10, 7);
    for (auto& x : M.reshaped()) x = rng.uniform() > 0.3;
    const auto res = nmf_masked(V, M, 3, 200, seed);
    for (std::size_t i = 1; i < res.objective.size(); ++i) {
      CHECK(res.objective[i] <= res.objective[i - 1] * (1 + 1e-12) + 1e-15);
    }
    CHECK((res.W.array() >= 0).all());
    CHECK((res.H.array() >= 0).all());
  }
}

TEST_CASE("nmf on a zero matrix gives zero fill") {
  BipartiteCausalGraph g({"a", "b", "c"}, {"x", "y"});
  g.mask.setConstant(true);
  g.mask(0, 1) = false;
  const auto out = nmf_impute(g, 2, 50);
  CHECK(out.weights.isZero());
  const auto res = nmf_masked(g.weights, g.mask, 2, 5);
  CHECK((res.W * res.H).isZero());
}

TEST_CASE("nmf rank validation") {
  BipartiteCausalGraph g({"a", "b"}, {"x"});
  CHECK(code_of([&] { nmf_impute(g, 0, 10); }) == ErrorCode::InvalidRank);
  CHECK(code_of([&] { nmf_impute(g, 2, 10); }) == ErrorCode::InvalidRank);
}

TEST_CASE("compose picks top-k with a lexicographic tie-break") {
  const auto g = toy({"e", "d", "c", "b", "a"}, {"y"}, {{0.1}, {0.7}, {0.4}, {0.7}, {0.2}});
  const auto c = compose(g, "y", 3);
  REQUIRE(c.selected.size() == 3);
  CHECK(c.selected[0].first == "b");
  CHECK(c.selected[1].first == "d");
  CHECK(c.selected[2].first == "c");

  const auto all = compose(g, "y", 50);
  CHECK(all.selected.size() == 5);
  CHECK(all.selected.back().first == "e");

  CHECK(code_of([&] { compose(g, "nope", 1); }) == ErrorCode::UnknownTarget);
}

TEST_CASE("compose ranking is invariant under monotone rescaling") {
  Rng rng(3);
  BipartiteCausalGraph g({"a", "b", "c", "d", "e", "f"}, {"y"});
  for (auto& x : g.weights.reshaped()) x = rng.uniform(0, 1);
  auto h = g;
  for (auto& x : h.weights.reshaped()) x = std::exp(3 * x) + 2;
  const auto a = compose(g, "y", 4), b = compose(h, "y", 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a.selected[i].first == b.selected[i].first);
}

TEST_CASE("composition file round trip") {
  const std::vector<Composition> comps{{"fb", {{"martino", 0.9}, {"k_rod", 0.5}}}, {"goog", {}}};
  const auto path = std::filesystem::temp_directory_path() / "tcause_comp.json";
  save_compositions(comps, path);
  const auto back = load_compositions(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].target == "fb");
  CHECK(back[0].selected == comps[0].selected);
  CHECK(back[1].selected.empty());
  std::filesystem::remove(path);
}
