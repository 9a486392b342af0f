#include "tcause/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "tcause/bipartite.hpp"
#include "tcause/config.hpp"
#include "tcause/format.hpp"

namespace tcause {

namespace fs = std::filesystem;

int exit_code(ErrorCode code) {
  if (code == ErrorCode::ConfigInvalid) return 2;
  return 10 + static_cast<int>(code);
}

namespace {

struct Context {
  PipelineConfig cfg;
  fs::path out;
  std::ostream& log;
};

void require_file(const fs::path& p, const std::string& key) {
  if (p.empty()) fail(ErrorCode::ConfigInvalid, key + " is not set");
  if (!fs::is_regular_file(p)) fail(ErrorCode::ConfigInvalid, key + " does not exist: " + p.string());
}

// Artifacts written by an earlier subcommand.
fs::path artifact(const Context& c, const std::string& name, const std::string& producer) {
  auto p = c.out / name;
  if (!fs::exists(p)) fail(ErrorCode::IoError, "missing " + p.string() + " (run '" + producer + "' first)");
  return p;
}

TimeSeries load_target(const Context& c) {
  require_file(c.cfg.paths.targets, "paths.targets");
  return load_series_csv(c.cfg.paths.targets, c.cfg.paths.targets.stem().string());
}

std::string target_phrase(const Context& c, const TimeSeries& y) {
  return c.cfg.target_phrase.empty() ? y.name() : c.cfg.target_phrase;
}

// Target and features restricted to their common date range.
struct Aligned {
  TimeSeries y;
  std::vector<FeatureSeries> features;
};

Aligned load_aligned(const Context& c) {
  auto y = load_target(c);
  auto features = load_features(artifact(c, "features", "extract"));
  Day lo = y.start(), hi = y.end();
  for (const auto& f : features) {
    lo = std::max(lo, f.series.start());
    hi = std::min(hi, f.series.end());
  }
  if (hi.value - lo.value < 2) fail(ErrorCode::NoOverlap, "target and features share fewer than two days");
  const auto cut = [&](const TimeSeries& s) {
    return s.slice(static_cast<std::size_t>(lo.value - s.start().value), static_cast<std::size_t>(hi.value - lo.value));
  };
  for (auto& f : features) f.series = cut(f.series);
  return {cut(y), std::move(features)};
}

std::vector<TimeSeries> series_of(const std::vector<FeatureSeries>& features) {
  std::vector<TimeSeries> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(f.series.renamed(f.name));
  return out;
}

std::vector<CausalityScore> ranked(std::vector<CausalityScore> scores) {
  std::stable_sort(scores.begin(), scores.end(), [](const CausalityScore& a, const CausalityScore& b) {
    if (a.total != b.total) return a.total > b.total;
    return a.feature < b.feature;
  });
  return scores;
}

CGraph reasoning_graph(const Context& c) {
  return c.cfg.use_expanded_graph ? load_graph(artifact(c, "graph_expanded.bin", "graph-expand"))
                                  : load_graph(artifact(c, "graph.bin", "graph-build"));
}

std::optional<AliasTable> maybe_aliases(const Context& c) {
  if (c.cfg.paths.aliases.empty()) return std::nullopt;
  require_file(c.cfg.paths.aliases, "paths.aliases");
  return load_aliases(c.cfg.paths.aliases);
}

CausalityOracle make_oracle(const Context& c, const Aligned& a) {
  return CausalityOracle::from_series(a.y, series_of(a.features), c.cfg.granger, c.cfg.threads);
}

std::string direction_name(ReasonDirection d) { return d == ReasonDirection::backward ? "backward" : "forward"; }

void cmd_extract(Context& c) {
  require_file(c.cfg.paths.corpus, "paths.corpus");
  const auto corpus = load_corpus(c.cfg.paths.corpus);
  const auto counts = count_ngrams_parallel(corpus, c.cfg.n_max, c.cfg.min_freq, c.cfg.threads);
  const auto words = filter_features(make_features(counts, FeatureKind::word, c.cfg.peak_frac), c.cfg.dynamics);

  std::vector<FeatureSeries> all;
  for (const auto& [name, f] : words) all.push_back(f);
  std::size_t n_topics = 0, n_senti = 0;
  if (!c.cfg.paths.topics.empty()) {
    require_file(c.cfg.paths.topics, "paths.topics");
    const auto topics = load_topics(c.cfg.paths.topics);
    for (const auto& [name, f] : make_features(topic_series(corpus, topics), FeatureKind::topic, c.cfg.peak_frac)) {
      all.push_back(f);
      ++n_topics;
    }
    if (!c.cfg.paths.lexicon_positive.empty() || !c.cfg.paths.lexicon_negative.empty()) {
      require_file(c.cfg.paths.lexicon_positive, "paths.lexicon_positive");
      require_file(c.cfg.paths.lexicon_negative, "paths.lexicon_negative");
      const auto lex = load_lexicon(c.cfg.paths.lexicon_positive, c.cfg.paths.lexicon_negative);
      for (const auto& [name, f] :
           make_features(sentiment_series(corpus, topics, lex), FeatureKind::sentiment, c.cfg.peak_frac)) {
        all.push_back(f);
        ++n_senti;
      }
    }
  }
  fs::remove_all(c.out / "features");
  save_features(all, c.out / "features");

  const auto tuples = extract_tuples(corpus, default_patterns(), c.cfg.tuple_phrase_len);
  save_tuples_tsv(tuples, c.out / "tuples_extracted.tsv");

  c.log << "extract: " << corpus.size() << " documents, " << words.size() << " of " << counts.size()
        << " word features kept, " << n_topics << " topics, " << n_senti << " sentiment series, " << tuples.size()
        << " tuples\n";
}

void cmd_score(Context& c) {
  const auto a = load_aligned(c);
  const std::vector<TimeSeries> targets{a.y};
  const auto feats = series_of(a.features);
  const auto scores = ranked(score_pairs(targets, feats, c.cfg.granger, c.cfg.threads));
  save_scores_tsv(scores, c.out / "scores.tsv");

  const auto comp = compose(build_bipartite(scores), a.y.name(), c.cfg.top_k);
  save_compositions({comp}, c.out / "compositions.tsv");

  c.log << "score: " << scores.size() << " features against " << a.y.name();
  if (!scores.empty()) c.log << ", top " << scores.front().feature << " total=" << format_real(scores.front().total);
  c.log << ", composition of " << comp.selected.size() << "\n";
}

void cmd_graph_build(Context& c) {
  std::vector<CausalTuple> tuples;
  bool any = false;
  if (!c.cfg.paths.tuples.empty()) {
    require_file(c.cfg.paths.tuples, "paths.tuples");
    tuples = load_tuples_tsv(c.cfg.paths.tuples);
    any = true;
  }
  if (c.cfg.use_extracted_tuples && fs::exists(c.out / "tuples_extracted.tsv")) {
    auto more = load_tuples_tsv(c.out / "tuples_extracted.tsv");
    tuples.insert(tuples.end(), more.begin(), more.end());
    any = true;
  }
  if (!any) fail(ErrorCode::ConfigInvalid, "no tuple source: set paths.tuples or run 'extract' first");
  const auto g = build(tuples, c.cfg.graph);
  save_graph(g, c.out / "graph.bin");
  c.log << "graph-build: " << tuples.size() << " tuples -> " << g.node_count() << " nodes, " << g.edge_count()
        << " edges, digest " << hex64(g.digest()) << "\n";
}

void cmd_graph_expand(Context& c) {
  require_file(c.cfg.paths.aliases, "paths.aliases");
  const auto aliases = load_aliases(c.cfg.paths.aliases);
  std::vector<KbEdge> kb;
  if (!c.cfg.paths.kb_edges.empty()) {
    require_file(c.cfg.paths.kb_edges, "paths.kb_edges");
    kb = load_kb_edges(c.cfg.paths.kb_edges);
  }
  const auto g = load_graph(artifact(c, "graph.bin", "graph-build"));
  KbExpansion stats;
  const auto x = expand_kb(g, aliases, kb, &stats);
  save_graph(x, c.out / "graph_expanded.bin");
  c.log << "graph-expand: " << stats.kb_kb << " KB-KB and " << stats.kb_cross << " KBcross links, "
        << x.node_count() << " nodes, " << x.edge_count() << " edges\n";
}

std::string pick_source(const Context& c, const CGraph& g, const Frontiers& fr, const std::string& target,
                        const AliasTable* aliases) {
  if (!c.cfg.source_phrase.empty()) return c.cfg.source_phrase;
  for (const auto& s : ranked(load_scores_tsv(artifact(c, "scores.tsv", "score"), c.cfg.granger.significance))) {
    if (s.total <= 0) break;
    const auto id = resolve_node(g, s.feature, aliases);
    if (!id) continue;
    const auto& phrase = g.phrase(*id);
    if (phrase != fr.target && phrase != target && fr.contains(phrase)) return phrase;
  }
  fail(ErrorCode::NoPathFound, "no scored feature reaches '" + target + "'; set reasoning.source");
}

void cmd_explain_symbolic(Context& c) {
  const auto g = reasoning_graph(c);
  const auto aliases = maybe_aliases(c);
  const AliasTable* al = aliases ? &*aliases : nullptr;
  const auto a = load_aligned(c);
  const auto oracle = make_oracle(c, a);
  const auto target = target_phrase(c, a.y);

  const auto fr = backward_infer(g, target, oracle, c.cfg.reasoning, al);
  write_frontiers_tsv(fr, c.out / "frontiers.tsv");
  const auto source = pick_source(c, g, fr, target, al);
  const auto chains = assemble_chains(fr, g, source, c.cfg.chains, oracle, c.cfg.reasoning, al);
  write_chains_text(chains, c.out / "chains.txt");
  write_chains_tsv(chains, c.out / "chains.tsv");
  write_chains_dot(chains, c.out / "chains.dot");
  c.log << "explain-symbolic: " << fr.node_count() << " frontier nodes, " << chains.size() << " chains, best "
        << chain_text(chains.front()) << "\n";
}

void cmd_train_reasoner(Context& c) {
  const auto g = reasoning_graph(c);
  const auto data = make_dataset(g, c.cfg.train.direction, c.cfg.vocab_budget, c.cfg.train.max_phrase_len);
  std::optional<WordVectors> vectors;
  if (!c.cfg.paths.word_vectors.empty()) {
    require_file(c.cfg.paths.word_vectors, "paths.word_vectors");
    vectors = load_word_vectors(c.cfg.paths.word_vectors);
  }
  const auto model = train(data, c.cfg.train, vectors ? &*vectors : nullptr);
  const auto dir = direction_name(c.cfg.train.direction);
  save_model(model, c.out / ("model_" + dir + ".bin"));
  write_training_log(model, c.out / ("training_log_" + dir + ".tsv"));
  c.log << "train-reasoner: " << data.examples.size() << " examples, vocab " << data.vocab.size() << ", final loss "
        << format_real(model.loss_history.empty() ? 0.0 : model.loss_history.back()) << ", digest "
        << hex64(model.digest()) << "\n";
}

void cmd_explain_neural(Context& c) {
  const auto model = load_model(artifact(c, "model_backward.bin", "train-reasoner"));
  const auto a = load_aligned(c);
  const auto oracle = make_oracle(c, a);
  std::optional<CGraph> g;
  auto ncfg = c.cfg.neural;
  if (c.cfg.restrict_to_graph) {
    g = reasoning_graph(c);
    ncfg.known_nodes = &*g;
  }
  const auto chain = neural_backward_chain(model, target_phrase(c, a.y), oracle, c.cfg.reasoning, ncfg);
  write_chains_text({chain}, c.out / "neural_chain.txt");
  write_chains_tsv({chain}, c.out / "neural_chain.tsv");
  c.log << "explain-neural: " << chain.hops.size() << " hops, " << chain_text(chain) << "\n";
}

void cmd_forecast(Context& c) {
  const auto a = load_aligned(c);
  const auto scores = ranked(load_scores_tsv(artifact(c, "scores.tsv", "score"), c.cfg.granger.significance));
  const auto comps = load_compositions(artifact(c, "compositions.tsv", "score"));
  const std::size_t cap = std::min(c.cfg.top_k, c.cfg.backtest.max_features());

  std::map<std::string, const FeatureSeries*> by_name;
  for (const auto& f : a.features) by_name[f.name] = &f;

  FeatureSets sets;
  const auto family = [&](FeatureKind kind) {
    std::vector<TimeSeries> out;
    for (const auto& s : scores) {
      if (out.size() == cap || s.total <= 0) break;
      auto it = by_name.find(s.feature);
      if (it != by_name.end() && it->second->kind == kind) out.push_back(it->second->series.renamed(s.feature));
    }
    return out;
  };
  sets.words = family(FeatureKind::word);
  sets.topics = family(FeatureKind::topic);
  sets.senti = family(FeatureKind::sentiment);
  for (const auto& comp : comps) {
    if (comp.target != a.y.name()) continue;
    for (const auto& [name, score] : comp.selected) {
      auto it = by_name.find(name);
      if (sets.composition.size() < cap && score > 0 && it != by_name.end()) {
        sets.composition.push_back(it->second->series.renamed(name));
      }
    }
  }
  const std::size_t n_random =
      c.cfg.random_features ? c.cfg.random_features : std::max<std::size_t>(1, sets.composition.size());
  sets.random = random_features(a.y, std::min(n_random, c.cfg.backtest.max_features()), c.cfg.seed);

  const auto report = backtest(a.y, sets, c.cfg.backtest, c.cfg.threads);
  write_backtest_tsv(report, c.out / "backtest.tsv");
  const auto s0 = report.steps.front();
  c.log << "forecast: " << report.windows << " windows, step " << s0 << " RMSE ar_only "
        << format_real(report.at("ar_only", s0)) << ", composition " << format_real(report.at("varx_composition", s0))
        << "\n";
}

void cmd_random_analysis(Context& c) {
  const auto y = load_target(c);
  const auto rows = random_analysis(y, c.cfg.random_analysis, c.cfg.threads);
  write_random_analysis_csv(rows, c.out / "random_analysis.csv");
  write_random_analysis_svg(y, rows, c.out / "random_analysis.svg");
  const RandomAnalysisRow* best = nullptr;
  for (const auto& r : rows) {
    if (r.direction == "feature_to_target" && (!best || r.causality > best->causality)) best = &r;
  }
  c.log << "random-analysis: " << rows.size() << " rows";
  if (best) c.log << ", strongest at offset " << best->offset << " (" << format_real(best->causality) << ")";
  c.log << "\n";
}

void cmd_eval_bleu(Context& c) {
  const auto dir = direction_name(c.cfg.train.direction);
  const auto model = load_model(artifact(c, "model_" + dir + ".bin", "train-reasoner"));
  require_file(c.cfg.paths.eval_tuples, "paths.eval_tuples");
  const auto tuples = load_tuples_tsv(c.cfg.paths.eval_tuples);
  const auto& vocab = model.vocab();

  std::ofstream out(c.out / "bleu.tsv", std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + (c.out / "bleu.tsv").string());
  out << "source\trelation\treference\tprediction\tb_at_1\tb_at_k_avg\n";
  double sum1 = 0, sumk = 0;
  std::size_t n = 0, skipped = 0;
  for (const auto& t : tuples) {
    const auto rel = std::find(vocab.relations().begin(), vocab.relations().end(), t.relation);
    if (rel == vocab.relations().end()) {
      ++skipped;
      continue;
    }
    const bool back = model.direction() == ReasonDirection::backward;
    const auto src = phrase_to_tokens(normalize_phrase(back ? t.effect : t.cause));
    const auto ref = phrase_to_tokens(normalize_phrase(back ? t.cause : t.effect));
    const auto beam = beam_decode(model, vocab.encode(src), static_cast<int>(rel - vocab.relations().begin()),
                                  c.cfg.neural.beam, c.cfg.neural.max_len);
    const auto b = bleu_at_k(beam, vocab, ref, c.cfg.bleu_max_n);
    const auto pred = beam.hypotheses.empty() ? std::string() : tokens_to_phrase(vocab.decode(beam.hypotheses[0].tokens));
    out << tokens_to_phrase(src) << '\t' << t.relation << '\t' << tokens_to_phrase(ref) << '\t' << pred << '\t'
        << format_real(b.b_at_1) << '\t' << format_real(b.b_at_k_avg) << '\n';
    sum1 += b.b_at_1;
    sumk += b.b_at_k_avg;
    ++n;
  }
  if (n == 0) fail(ErrorCode::UnknownRelation, "no evaluation tuple uses a relation known to the model");
  out << "mean\t\t\t\t" << format_real(sum1 / n) << '\t' << format_real(sumk / n) << '\n';
  c.log << "eval-bleu: " << n << " tuples (" << skipped << " skipped), B@1 " << format_real(sum1 / n) << ", B@"
        << c.cfg.neural.beam << " avg " << format_real(sumk / n) << "\n";
}

struct Subcommand {
  const char* name;
  const char* help;
  void (*run)(Context&);
};

const std::vector<Subcommand>& subcommands() {
  static const std::vector<Subcommand> s{
      {"extract", "corpus -> feature series and causal tuples", cmd_extract},
      {"score", "Granger causality of every feature against the target", cmd_score},
      {"graph-build", "tuples -> cause-effect graph", cmd_graph_build},
      {"graph-expand", "add knowledge-base links to the graph", cmd_graph_expand},
      {"explain-symbolic", "backward search for explanation chains", cmd_explain_symbolic},
      {"train-reasoner", "train the relation-attention sequence model", cmd_train_reasoner},
      {"explain-neural", "neural backward explanation chain", cmd_explain_neural},
      {"forecast", "rolling backtest of the forecasting methods", cmd_forecast},
      {"random-analysis", "spike-offset causality sweep", cmd_random_analysis},
      {"eval-bleu", "BLEU of the trained reasoner on held-out tuples", cmd_eval_bleu},
  };
  return s;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

int report(std::ostream& err, ErrorCode code, const std::string& message) {
  const int rc = exit_code(code);
  err << "error: code=" << error_name(code) << " exit=" << rc << " message=" << one_line(message) << "\n";
  return rc;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Text-driven temporal causality and explanation chains", "tcause"};
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "INI configuration file")->required();
  app.add_option("--seed", seed, "overrides run.seed");
  app.add_option("--out-dir", out_dir, "overrides paths.out_dir");
  app.add_option("--threads", threads, "OpenMP threads, 0 = runtime default");
  app.add_option("--set", overrides, "section.key=value override, repeatable")->allow_extra_args(false);
  for (const auto& s : subcommands()) app.add_subcommand(s.name, s.help)->fallthrough();
  app.require_subcommand(1, 1);

  // CLI11 reports a stray word only as a missing subcommand; name it instead.
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    if (a.starts_with("-")) {
      if (a.find('=') == std::string::npos && a != "-h" && a != "--help") ++i;
      continue;
    }
    const bool known = std::any_of(subcommands().begin(), subcommands().end(),
                                   [&](const Subcommand& s) { return a == s.name; });
    if (!known) {
      err << app.help();
      return report(err, ErrorCode::ConfigInvalid, "unknown subcommand '" + a + "'");
    }
    break;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << app.help();
    return report(err, ErrorCode::ConfigInvalid, e.what());
  }

  const auto* chosen = app.get_subcommands().front();
  const auto it = std::find_if(subcommands().begin(), subcommands().end(),
                               [&](const Subcommand& s) { return chosen->get_name() == s.name; });
  try {
    const fs::path cfg_path = config_path;
    auto kv = read_ini(cfg_path);
    for (const auto& o : overrides) apply_override(kv, o);
    if (seed) kv["run.seed"] = std::to_string(*seed);
    if (threads) kv["run.threads"] = std::to_string(*threads);
    if (!out_dir.empty()) kv["paths.out_dir"] = fs::absolute(out_dir).string();

    Context ctx{pipeline_config(kv, cfg_path.parent_path()), {}, out};
    ctx.out = ctx.cfg.paths.out_dir;
    fs::create_directories(ctx.out);
    {
      std::ofstream eff(ctx.out / "config.effective.txt", std::ios::binary | std::ios::trunc);
      for (const auto& [k, v] : effective_settings(ctx.cfg)) eff << k << '=' << v << '\n';
    }
    it->run(ctx);
    return 0;
  } catch (const Error& e) {
    return report(err, e.code(), e.what());
  } catch (const fs::filesystem_error& e) {
    return report(err, ErrorCode::IoError, e.what());
  } catch (const std::exception& e) {
    err << "error: code=Internal exit=1 message=" << one_line(e.what()) << "\n";
    return 1;
  }
}

}  // namespace tcause
