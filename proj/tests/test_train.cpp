#include <doctest.h>

#include <cmath>

#include "negspan/corpus.hpp"
#include "negspan/errors.hpp"
#include "negspan/infer.hpp"
#include "negspan/metrics.hpp"
#include "negspan/train.hpp"

using namespace negspan;

namespace {

AnnotatedSentence make_sentence(int n, SpanSet gold, SpanSet hidden = {}) {
  AnnotatedSentence s;
  for (int i = 0; i < n; ++i) s.sentence.tokens.push_back("w" + std::to_string(i));
  s.gold = std::move(gold);
  s.hidden = std::move(hidden);
  return s;
}

std::set<std::pair<int, int>> as_set(const std::vector<std::pair<int, int>>& v) {
  return {v.begin(), v.end()};
}

Corpus tiny_corpus() {
  GeneratorConfig cfg;
  cfg.sentence_count = 10;
  cfg.min_len = 4;
  cfg.max_len = 8;
  cfg.phrases_per_type = 6;
  cfg.context_vocab = 12;
  return gen_synthetic(cfg, 77);
}

TrainConfig fast_config() {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.embed_dim = 6;
  cfg.hidden_dim = 8;
  cfg.scoring_dim = 8;
  cfg.dropout = 0.1;
  return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("train");

TEST_CASE("negative candidates exclude exactly the visible gold positions") {
  const auto s = make_sentence(3, {{1, 1, "PER"}});
  const auto cands = negative_candidates(s);
  CHECK(as_set(cands) ==
        std::set<std::pair<int, int>>{{1, 2}, {1, 3}, {2, 2}, {2, 3}, {3, 3}});
  CHECK(cands.size() == 5);

  CHECK(negative_candidates(make_sentence(4, {})).size() == 10);
  CHECK(negative_candidates(make_sentence(1, {{1, 1, "X"}})).empty());
}

TEST_CASE("sample size is the ceiling of lambda*n, robust to fp dust") {
  CHECK(negative_sample_size(0.35, 7) == 3);   // ceil(2.45)
  CHECK(negative_sample_size(0.35, 20) == 7);  // exactly 7
  CHECK(negative_sample_size(0.5, 4) == 2);    // integer product
  CHECK(negative_sample_size(0.05, 20) == 1);  // 0.05*20 = 1.0000000000000002
  CHECK(negative_sample_size(0.1, 10) == 1);
  CHECK(negative_sample_size(0.9, 3) == 3);
}

TEST_CASE("sample_negatives clamps, deduplicates, avoids gold") {
  const auto s = make_sentence(4, {{2, 3, "PER"}});
  const auto cands = negative_candidates(s);
  Rng rng(5);

  SUBCASE("clamp to the candidate count") {
    const auto tiny = make_sentence(1, {});
    const auto few = negative_candidates(tiny);  // single span (1,1)
    const auto sample = sample_negatives(few, 20, 0.35, rng);
    CHECK(sample.spans.size() == 1);
  }
  SUBCASE("size and disjointness") {
    for (int t = 0; t < 200; ++t) {
      const auto sample = sample_negatives(cands, 4, 0.35, rng);
      CHECK(sample.spans.size() == 2);  // ceil(1.4)
      auto uniq = as_set(sample.spans);
      CHECK(uniq.size() == sample.spans.size());
      CHECK_FALSE(uniq.count({2, 3}));
    }
  }
  SUBCASE("lambda validation") {
    CHECK_THROWS_AS(sample_negatives(cands, 4, 0.0, rng), ArgumentError);
    CHECK_THROWS_AS(sample_negatives(cands, 4, 1.0, rng), ArgumentError);
  }
}

TEST_CASE("inclusion frequency matches the hypergeometric k/N") {
  // n=10, m=2: N=53 candidates, k=4, inclusion probability 4/53
  const auto s = make_sentence(10, {{1, 1, "A"}, {2, 2, "A"}});
  const auto cands = negative_candidates(s);
  REQUIRE(cands.size() == 53);
  Rng rng(99);
  const int trials = 100000;
  std::vector<int> hits(3, 0);
  const std::vector<std::pair<int, int>> probes{cands[0], cands[26],
                                                cands[52]};
  for (int t = 0; t < trials; ++t) {
    const auto sample = sample_negatives(cands, 10, 0.35, rng);
    const auto got = as_set(sample.spans);
    for (std::size_t k = 0; k < probes.size(); ++k) {
      if (got.count(probes[k])) ++hits[k];
    }
  }
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const double freq = static_cast<double>(hits[k]) / trials;
    CHECK(std::abs(freq - 4.0 / 53.0) < 0.005);
  }
}

TEST_CASE("oracle-adjusted negatives skip gold and hidden") {
  const auto plain = make_sentence(3, {{1, 1, "A"}});
  CHECK(oracle_adjusted_negatives(plain) == negative_candidates(plain));

  const auto s = make_sentence(3, {{1, 1, "A"}}, {{2, 3, "B"}});
  CHECK(as_set(oracle_adjusted_negatives(s)) ==
        std::set<std::pair<int, int>>{{1, 2}, {1, 3}, {2, 2}, {3, 3}});

  Rng rng(31);
  for (int t = 0; t < 100; ++t) {
    const int n = static_cast<int>(rng.range(2, 8));
    SpanSet gold{{1, 1, "A"}};
    SpanSet hidden{{2, static_cast<int>(rng.range(2, n)), "B"}};
    const auto sent = make_sentence(n, gold, hidden);
    for (const auto& [i, j] : oracle_adjusted_negatives(sent)) {
      CHECK_FALSE((i == 1 && j == 1));
      const auto h = *hidden.begin();
      CHECK_FALSE((i == h.start && j == h.end));
    }
  }
}

TEST_CASE("span_loss closed forms and brute force") {
  SpanScoreTable table;
  table.sentence_len = 3;
  table.spans = enumerate_spans(3);
  const std::vector<std::string> labels{"A", "B", "C"};

  SUBCASE("probability one everywhere referenced gives zero loss") {
    table.scores = Tensor(6, 4, 1e-12);
    table.scores.at(table.row_of(1, 2), 0) = 1.0;  // gold (1,2,A)
    table.scores.at(table.row_of(3, 3), 3) = 1.0;  // negative O
    CHECK(span_loss(table, {{1, 2, "A"}}, {{3, 3}}, labels) ==
          doctest::Approx(0.0));
  }
  SUBCASE("uniform table: |gold|=2, |neg|=3, |L|=3 gives 5 ln 4") {
    table.scores = Tensor(6, 4, 0.25);
    const double loss = span_loss(table, {{1, 1, "A"}, {2, 3, "B"}},
                                  {{1, 2}, {2, 2}, {3, 3}}, labels);
    CHECK(loss == doctest::Approx(5.0 * std::log(4.0)));
  }
  SUBCASE("random tables match an independent summation") {
    Rng rng(13);
    for (int t = 0; t < 50; ++t) {
      Tensor scores(6, 4);
      for (std::size_t k = 0; k < scores.size(); ++k) {
        scores[k] = rng.uniform(0.01, 1.0);
      }
      table.scores = scores;
      const SpanSet gold{{1, 3, "C"}, {2, 2, "A"}};
      const std::vector<std::pair<int, int>> negs{{1, 1}, {3, 3}};
      double expected = 0.0;
      expected -= std::log(scores.at(table.row_of(1, 3), 2));
      expected -= std::log(scores.at(table.row_of(2, 2), 0));
      expected -= std::log(scores.at(table.row_of(1, 1), 3));
      expected -= std::log(scores.at(table.row_of(3, 3), 3));
      CHECK(span_loss(table, gold, negs, labels) ==
            doctest::Approx(expected).epsilon(1e-12));
    }
  }
  SUBCASE("a span capped out of the table is a contract violation") {
    SpanScoreTable capped;
    capped.sentence_len = 3;
    capped.max_span_len = 1;
    capped.spans = enumerate_spans(3, 1);
    capped.scores = Tensor(3, 4, 0.25);
    CHECK_THROWS_AS(span_loss(capped, {{1, 2, "A"}}, {}, labels),
                    ContractViolation);
  }
}

TEST_CASE("trainer subset scoring equals full-table span_loss") {
  const Corpus corpus = tiny_corpus();
  const auto& s = corpus.sentences[0];
  TrainConfig cfg = fast_config();
  cfg.dropout = 0.0;

  ModelBundle model;
  model.vocab = Vocabulary::build(corpus);
  model.labels = corpus.labels;
  model.encoder.embed_dim = cfg.embed_dim;
  model.encoder.hidden_dim = cfg.hidden_dim;
  model.encoder.dropout = 0.0;
  model.scorer.scoring_dim = cfg.scoring_dim;
  Rng rng(3);
  init_encoder_params(model.params, model.encoder, model.vocab.size(), rng);
  init_scorer_params(model.params, model.scorer, cfg.hidden_dim,
                     model.labels.size(), rng);

  const auto negatives = negative_candidates(s);

  // full table route
  Tape t1;
  ParamBinding b1(t1, model.params);
  const auto H1 =
      encode(t1, b1, model.encoder, model.vocab, s.sentence, Mode::eval);
  Tape::NodeId node = 0;
  const SpanScoreTable table = score_spans(t1, b1, H1, {}, &node);
  const double full_loss =
      span_loss(table, s.gold, negatives, model.labels);

  // trainer route: score only the referenced spans
  Tape t2;
  ParamBinding b2(t2, model.params);
  const auto H2 =
      encode(t2, b2, model.encoder, model.vocab, s.sentence, Mode::eval);
  std::vector<std::pair<int, int>> refs;
  for (const auto& g : s.gold) refs.emplace_back(g.start, g.end);
  refs.insert(refs.end(), negatives.begin(), negatives.end());
  std::sort(refs.begin(), refs.end());
  const auto scores = score_spans_node(t2, b2, H2, refs);
  SpanScoreTable subset;
  subset.sentence_len = s.sentence.length();
  subset.spans = refs;
  subset.scores = t2.value(scores);
  double subset_loss = 0.0;
  for (const auto& g : s.gold) {
    std::size_t li = 0;
    while (model.labels[li] != g.label) ++li;
    const auto it = std::lower_bound(refs.begin(), refs.end(),
                                     std::make_pair(g.start, g.end));
    subset_loss -= std::log(
        subset.scores.at(static_cast<std::size_t>(it - refs.begin()), li));
  }
  for (const auto& ij : negatives) {
    const auto it = std::lower_bound(refs.begin(), refs.end(), ij);
    subset_loss -= std::log(subset.scores.at(
        static_cast<std::size_t>(it - refs.begin()), model.labels.size()));
  }
  CHECK(subset_loss == doctest::Approx(full_loss).epsilon(1e-12));
}

TEST_CASE("train_model is deterministic given a seed") {
  const Corpus corpus = tiny_corpus();
  TrainConfig cfg = fast_config();
  cfg.seed = 21;
  const TrainResult a = train_model(corpus, nullptr, cfg);
  const TrainResult b = train_model(corpus, nullptr, cfg);
  REQUIRE(a.model.params.size() == b.model.params.size());
  for (const auto& entry : a.model.params.entries()) {
    const Tensor& other = b.model.params.get(entry.name);
    for (std::size_t k = 0; k < entry.value.size(); ++k) {
      CHECK(entry.value[k] == other[k]);
    }
  }
  CHECK(a.log.size() == cfg.epochs);
  for (std::size_t e = 0; e < a.log.size(); ++e) {
    CHECK(a.log[e].mean_loss == b.log[e].mean_loss);
  }

  cfg.seed = 22;
  const TrainResult c = train_model(corpus, nullptr, cfg);
  CHECK(c.log.back().mean_loss != a.log.back().mean_loss);
}

TEST_CASE("short overfit run memorizes and loss falls monotonically early") {
  const Corpus corpus = tiny_corpus();
  TrainConfig cfg = fast_config();
  cfg.epochs = 150;
  cfg.dropout = 0.0;
  cfg.embed_dim = 16;
  cfg.hidden_dim = 16;
  cfg.scoring_dim = 16;
  const TrainResult result = train_model(corpus, nullptr, cfg);

  for (int e = 1; e < 5; ++e) {
    CHECK(result.log[static_cast<std::size_t>(e)].mean_loss <
          result.log[static_cast<std::size_t>(e - 1)].mean_loss);
  }

  std::vector<SpanSet> pred, gold;
  for (const auto& s : corpus.sentences) {
    pred.push_back(predict(result.model, s.sentence));
    gold.push_back(s.gold);
  }
  CHECK(entity_f1(pred, gold).f1 == doctest::Approx(1.0));
}

TEST_CASE("regimes differ in what they feed the loss") {
  Corpus corpus = tiny_corpus();
  const Corpus masked = mask_entities(corpus, 0.5, 3);
  TrainConfig cfg = fast_config();

  cfg.regime = Regime::full;
  CHECK_NOTHROW(train_model(masked, nullptr, cfg));
  cfg.regime = Regime::oracle;
  CHECK_NOTHROW(train_model(masked, nullptr, cfg));

  cfg.model = ModelKind::tagger;
  cfg.regime = Regime::sampled;
  CHECK_THROWS_AS(train_model(masked, nullptr, cfg), ConfigError);
}

TEST_CASE("tagger training with plain and adjusted losses learns the corpus") {
  const Corpus corpus = tiny_corpus();
  TrainConfig cfg = fast_config();
  cfg.model = ModelKind::tagger;
  cfg.regime = Regime::full;
  cfg.epochs = 120;
  cfg.dropout = 0.0;
  cfg.embed_dim = 16;
  cfg.hidden_dim = 24;
  const TrainResult result = train_model(corpus, nullptr, cfg);
  CHECK(result.model.kind == ModelKind::tagger);

  std::vector<SpanSet> pred, gold;
  for (const auto& s : corpus.sentences) {
    pred.push_back(predict(result.model, s.sentence));
    gold.push_back(s.gold);
  }
  CHECK(entity_f1(pred, gold).f1 > 0.9);

  const Corpus masked = mask_entities(corpus, 0.4, 5);
  cfg.regime = Regime::oracle;
  cfg.epochs = 10;
  CHECK_NOTHROW(train_model(masked, nullptr, cfg));
}

TEST_CASE("invalid configurations are rejected") {
  TrainConfig cfg;
  cfg.lambda = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.lambda = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.lambda = 0.35;
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.epochs = 1;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("exploding updates abort with step identification") {
  const Corpus corpus = tiny_corpus();
  TrainConfig cfg = fast_config();
  cfg.lr = 1e14;
  cfg.epochs = 4;
  CHECK_THROWS_WITH_AS(train_model(corpus, nullptr, cfg),
                       doctest::Contains("epoch"), TrainingError);
}

TEST_CASE("dev selection keeps the best checkpoint") {
  const Corpus corpus = tiny_corpus();
  GeneratorConfig gcfg;
  gcfg.sentence_count = 6;
  gcfg.min_len = 4;
  gcfg.max_len = 8;
  gcfg.phrases_per_type = 6;
  gcfg.context_vocab = 12;
  const Corpus dev = gen_synthetic(gcfg, 78);

  TrainConfig cfg = fast_config();
  cfg.epochs = 30;
  const TrainResult result = train_model(corpus, &dev, cfg);
  CHECK_FALSE(std::isnan(result.best_dev_f1));
  double best_seen = -1.0;
  for (const auto& e : result.log) {
    best_seen = std::max(best_seen, e.dev_f1);
  }
  CHECK(result.best_dev_f1 == doctest::Approx(best_seen));
}

TEST_SUITE_END();
