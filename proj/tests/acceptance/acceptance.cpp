// Acceptance suite: every criterion prints one PASS/FAIL line; the exit code
// is the number of failures. The long criteria share one degradation sweep
// over the synthetic language.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "../conlleval_ref.hpp"
#include "../fd_check.hpp"
#include "negspan/corpus.hpp"
#include "negspan/infer.hpp"
#include "negspan/metrics.hpp"
#include "negspan/study.hpp"
#include "negspan/tagbaseline.hpp"
#include "negspan/train.hpp"

using namespace negspan;

namespace {

int g_failures = 0;
std::chrono::steady_clock::time_point g_started;

void begin(const char* /*name*/) { g_started = std::chrono::steady_clock::now(); }

void report(const char* name, bool pass, const std::string& detail) {
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                    g_started)
          .count();
  std::printf("%s %s %s (%.1fs)\n", name, pass ? "PASS" : "FAIL",
              detail.c_str(), secs);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

std::size_t sweep_jobs() {
  if (const char* env = std::getenv("NEGSPAN_AC_JOBS")) {
    return std::max(1ul, std::strtoul(env, nullptr, 10));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------
// AC-1: analytic gradients vs central finite differences on random small
// models (d <= 4, n <= 5), relative error < 1e-4.
void ac1_gradient_fidelity() {
  begin("AC-1");
  double worst = 0.0;
  std::string worst_at;
  Rng seeds(101);

  for (int trial = 0; trial < 6; ++trial) {
    Rng rng(seeds.next());
    const int n = 1 + static_cast<int>(rng.index(5));
    EncoderConfig enc;
    enc.embed_dim = 2 + rng.index(3);     // <= 4
    enc.hidden_dim = rng.bernoulli(0.5) ? 2 : 4;
    enc.dropout = 0.0;
    ScorerConfig scorer;
    scorer.scoring_dim = 2 + rng.index(3);

    Vocabulary vocab;
    for (const char* t : {"u", "v", "w", "x"}) vocab.add(t);
    const std::vector<std::string> labels{"A", "B"};

    Sentence sent;
    static const char* kTokens[] = {"u", "v", "w", "x", "zz"};
    for (int i = 0; i < n; ++i) sent.tokens.push_back(kTokens[rng.index(5)]);

    SpanSet gold;
    std::vector<std::pair<int, int>> negatives;
    for (int i = 1; i <= n; ++i) {
      for (int j = i; j <= n; ++j) {
        const double u = rng.uniform();
        if (u < 0.25) {
          gold.insert({i, j, labels[rng.index(2)]});
        } else if (u < 0.6) {
          negatives.emplace_back(i, j);
        }
      }
    }
    if (gold.empty() && negatives.empty()) negatives.emplace_back(1, 1);
    // keep BIO-compatible gold for the tagger path
    SpanSet flat_gold;
    int last_end = 0;
    for (const auto& g : gold) {
      if (g.start > last_end) {
        flat_gold.insert(g);
        last_end = g.end;
      }
    }

    // span model: encoder + scorer + span-level loss
    {
      ParamStore store;
      Rng init(seeds.next());
      init_encoder_params(store, enc, vocab.size(), init);
      init_scorer_params(store, scorer, enc.hidden_dim, labels.size(), init);

      auto loss_value = [&](const ParamStore& s) {
        Tape tape;
        ParamBinding binding(tape, s);
        const auto H = encode(tape, binding, enc, vocab, sent, Mode::eval);
        Tape::NodeId node = 0;
        const SpanScoreTable table = score_spans(tape, binding, H, {}, &node);
        return tape.value(
            span_loss_node(tape, node, table, gold, negatives, labels))[0];
      };
      Tape tape;
      ParamBinding binding(tape, store);
      const auto H = encode(tape, binding, enc, vocab, sent, Mode::eval);
      Tape::NodeId node = 0;
      const SpanScoreTable table = score_spans(tape, binding, H, {}, &node);
      tape.backward(
          span_loss_node(tape, node, table, gold, negatives, labels));
      const auto r = fd_check::run(store, binding.grads(), loss_value);
      if (r.max_rel_err > worst) {
        worst = r.max_rel_err;
        worst_at = "span/" + r.worst;
      }
    }

    // tagging baseline: plain and adjusted losses
    for (const bool adjusted : {false, true}) {
      ParamStore store;
      Rng init(seeds.next());
      init_encoder_params(store, enc, vocab.size(), init);
      init_tagger_params(store, enc.hidden_dim, labels.size(), init);

      // hidden spans come from the gold set, the way masking produces them
      AnnotatedSentence as;
      as.sentence = sent;
      as.gold = flat_gold;
      SpanSet hidden;
      if (adjusted && !flat_gold.empty()) {
        hidden.insert(*as.gold.begin());
        as.gold.erase(as.gold.begin());
      }
      const auto tagset = bio_tagset(labels);
      const auto z = bio_tag_indices(as, tagset);

      auto loss_value = [&](const ParamStore& s) {
        Tape tape;
        ParamBinding binding(tape, s);
        const auto H = encode(tape, binding, enc, vocab, sent, Mode::eval);
        const auto q = tag_distributions_node(tape, binding, H);
        const auto loss =
            adjusted ? adjusted_tagging_loss_node(tape, q, z, hidden)
                     : tagging_loss_node(tape, q, z);
        return tape.value(loss)[0];
      };
      Tape tape;
      ParamBinding binding(tape, store);
      const auto H = encode(tape, binding, enc, vocab, sent, Mode::eval);
      const auto q = tag_distributions_node(tape, binding, H);
      tape.backward(adjusted ? adjusted_tagging_loss_node(tape, q, z, hidden)
                             : tagging_loss_node(tape, q, z));
      const auto r = fd_check::run(store, binding.grads(), loss_value);
      if (r.max_rel_err > worst) {
        worst = r.max_rel_err;
        worst_at = (adjusted ? "tagger-adj/" : "tagger/") + r.worst;
      }
    }
  }
  report("AC-1", worst < 1e-4,
         fmt("gradient fidelity: max rel err %.2e at %s (tol 1e-4)", worst,
             worst_at.c_str()));
}

// ---------------------------------------------------------------------------
// AC-2: BIO round trip on 1000 random span sets; entity_f1 equals the
// conlleval reference to four decimals on 500 random tag-sequence pairs.
void ac2_conversion_oracles() {
  begin("AC-2");
  Rng rng(202);
  std::size_t roundtrip_failures = 0;
  for (int t = 0; t < 1000; ++t) {
    const int n = 1 + static_cast<int>(rng.index(14));
    AnnotatedSentence s;
    for (int i = 0; i < n; ++i) s.sentence.tokens.push_back("w");
    static const char* kLabels[] = {"PER", "LOC", "ORG", "MISC"};
    int pos = 1;
    while (pos <= n) {
      if (rng.bernoulli(0.45)) {
        const int len = 1 + static_cast<int>(rng.index(
            static_cast<std::uint64_t>(std::min(3, n - pos + 1))));
        s.gold.insert({pos, pos + len - 1, kLabels[rng.index(4)]});
        pos += len;
      } else {
        ++pos;
      }
    }
    if (bio_to_spans(spans_to_bio(s)) != s.gold) ++roundtrip_failures;
  }

  const char* kTags[] = {"O",     "B-PER", "I-PER", "B-LOC",
                         "I-LOC", "B-ORG", "I-ORG"};
  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>
      pairs;
  std::vector<SpanSet> pred, gold;
  for (int t = 0; t < 500; ++t) {
    const int n = 1 + static_cast<int>(rng.index(12));
    std::vector<std::string> gt, pt;
    for (int i = 0; i < n; ++i) {
      gt.push_back(kTags[rng.index(7)]);
      pt.push_back(kTags[rng.index(7)]);
    }
    gold.push_back(bio_to_spans(gt));
    pred.push_back(bio_to_spans(pt));
    pairs.emplace_back(std::move(gt), std::move(pt));
  }
  const EvalReport ours = entity_f1(pred, gold);
  const auto ref = conlleval_ref::score(pairs);
  const double dp = std::abs(ours.precision - ref.precision);
  const double dr = std::abs(ours.recall - ref.recall);
  const double df = std::abs(ours.f1 - ref.f1);
  const double max_delta = std::max({dp, dr, df});

  report("AC-2", roundtrip_failures == 0 && max_delta < 5e-5,
         fmt("conversion oracles: %zu/1000 round-trip failures, conlleval "
             "delta %.1e (tol 5e-5)",
             roundtrip_failures, max_delta));
}

// ---------------------------------------------------------------------------
// AC-3: the sampling law on the n/m grid, 100k trials per point.
void ac3_sampling_law() {
  begin("AC-3");
  bool pass = true;
  std::string detail;
  double worst_gap = 0.0;
  for (const int n : {5, 10, 20, 50}) {
    for (const std::size_t m :
         {std::size_t{1}, static_cast<std::size_t>(n / 2),
          static_cast<std::size_t>(n)}) {
      const BoundReport r =
          bound_montecarlo(n, m, 0.35, 100000, 303 + n + 7 * m);
      const double gap = std::abs(r.empirical - r.exact);
      worst_gap = std::max(worst_gap, gap);
      if (gap >= 0.005 || r.empirical < r.bound) {
        pass = false;
        detail += fmt(" [n=%d m=%zu emp=%.4f exact=%.4f bound=%.4f]", n, m,
                      r.empirical, r.exact, r.bound);
      }
    }
  }
  report("AC-3", pass,
         fmt("sampling law: 12 grid points, worst |emp-exact| %.4f "
             "(tol 0.005), all above 1-2/(n-3)%s",
             worst_gap, detail.c_str()));
}

// ---------------------------------------------------------------------------
// AC-4: sampled-regime overfit on 10 sentences for 200 epochs reaches
// training-set F1 = 1.
void ac4_overfit() {
  begin("AC-4");
  GeneratorConfig gen;
  gen.sentence_count = 10;
  const Corpus corpus = gen_synthetic(gen, 404);

  TrainConfig cfg;  // defaults: sampled, lambda 0.35, dropout 0.4, l2 1e-5
  cfg.epochs = 200;
  cfg.seed = 404;
  const TrainResult result = train_model(corpus, nullptr, cfg);

  std::vector<SpanSet> pred, gold;
  for (const auto& s : corpus.sentences) {
    pred.push_back(predict(result.model, s.sentence));
    gold.push_back(s.gold);
  }
  const double f1 = entity_f1(pred, gold).f1;
  report("AC-4", f1 == 1.0, fmt("overfit sanity: training-set F1 %.4f", f1));
}

// ---------------------------------------------------------------------------
// AC-5/6/8 share one degradation sweep over the synthetic language
// (2000 train / 300 dev / 500 test).
struct SweepData {
  StudyResult result;
  double beta_full[3] = {0, 0, 0};     // p = 0.2, 0.4, 0.6
  double beta_sampled[3] = {0, 0, 0};
};

SweepData run_sweep(const Corpus& train, const Corpus& dev,
                    const Corpus& test) {
  StudyConfig cfg;
  cfg.probs = {0.0, 0.1, 0.2, 0.4, 0.5, 0.6};
  cfg.regimes = {Regime::sampled, Regime::full, Regime::oracle};
  cfg.seeds = {1};
  cfg.train.epochs = 12;
  cfg.jobs = sweep_jobs();

  SweepData data;
  data.result = run_study(train, &dev, test, cfg);
  const double ps[3] = {0.2, 0.4, 0.6};
  for (int k = 0; k < 3; ++k) {
    for (const auto& row : data.result.degradation) {
      if (row.p == ps[k]) {
        data.beta_full[k] = row.beta_full;
        data.beta_sampled[k] = row.beta_sampled;
      }
    }
  }
  return data;
}

void ac5_robustness(const SweepData& sweep) {
  const auto& r = sweep.result;
  const double full_05 = r.mean_f1(0.5, Regime::full);
  const double sampled_05 = r.mean_f1(0.5, Regime::sampled, 0.35);
  const double sampled_01 = r.mean_f1(0.1, Regime::sampled, 0.35);
  const bool gap_ok = sampled_05 - full_05 >= 0.10;
  const bool drop_ok = sampled_01 - sampled_05 <= 0.05;
  const bool learnable = sampled_05 >= 0.90;  // the corpus stays learnable
  report("AC-5", gap_ok && drop_ok && learnable && r.all_ok,
         fmt("robustness: sampled@0.5 %.4f (>= 0.90) vs full@0.5 %.4f "
             "(gap %.1f pts, need >= 10); sampled@0.1 %.4f -> @0.5 drop "
             "%.1f pts (tol 5)",
             sampled_05, full_05, 100.0 * (sampled_05 - full_05), sampled_01,
             100.0 * (sampled_01 - sampled_05)));
}

void ac6_misguidance(const SweepData& sweep) {
  begin("AC-6");
  bool pass = true;
  std::string detail = "misguidance rates (sampled vs full):";
  const double ps[3] = {0.2, 0.4, 0.6};
  for (int k = 0; k < 3; ++k) {
    const bool below = sweep.beta_sampled[k] < sweep.beta_full[k];
    const bool small = sweep.beta_sampled[k] < 0.10;
    pass = pass && below && small;
    detail += fmt(" p=%.1f: %.4f<%.4f%s", ps[k], sweep.beta_sampled[k],
                  sweep.beta_full[k], below && small ? "" : " VIOLATED");
  }
  report("AC-6", pass, detail);
}

void ac8_metric_validity(const SweepData& sweep) {
  begin("AC-8");
  const double pcc_alpha = sweep.result.pcc_alpha_vs_full;
  const double pcc_beta = sweep.result.pcc_beta_full_vs_full;
  report("AC-8", pcc_alpha < -0.8 && pcc_beta < -0.8,
         fmt("metric validity: PCC(alpha,F1) %.4f, PCC(beta,F1) %.4f "
             "(both < -0.8)",
             pcc_alpha, pcc_beta));
}

// ---------------------------------------------------------------------------
// AC-7: the lambda curve at p = 0.4 is higher in the middle than at the
// extremes, averaged over three seeds.
void ac7_lambda_curve(const Corpus& train, const Corpus& dev,
                      const Corpus& test) {
  begin("AC-7");
  StudyConfig cfg;
  cfg.probs = {0.4};
  cfg.regimes = {Regime::sampled};
  cfg.seeds = {1, 2, 3};
  cfg.lambdas = {0.05, 0.3, 0.35, 0.4, 0.9};
  cfg.train.epochs = 12;
  cfg.jobs = sweep_jobs();
  const StudyResult result = run_study(train, &dev, test, cfg);

  const double low = result.mean_f1(0.4, Regime::sampled, 0.05);
  const double high = result.mean_f1(0.4, Regime::sampled, 0.9);
  const double mid[] = {result.mean_f1(0.4, Regime::sampled, 0.3),
                        result.mean_f1(0.4, Regime::sampled, 0.35),
                        result.mean_f1(0.4, Regime::sampled, 0.4)};
  bool pass = result.all_ok;
  for (const double f : mid) {
    pass = pass && f >= low && f >= high;
  }
  report("AC-7", pass,
         fmt("lambda curve at p=0.4: f(0.05)=%.4f | f(0.3)=%.4f f(0.35)=%.4f "
             "f(0.4)=%.4f | f(0.9)=%.4f",
             low, mid[0], mid[1], mid[2], high));
}

}  // namespace

int main() {
  std::printf("# acceptance suite (jobs=%zu)\n", sweep_jobs());
  ac1_gradient_fidelity();
  ac2_conversion_oracles();
  ac3_sampling_law();
  ac4_overfit();

  begin("sweep");
  GeneratorConfig gen;  // defaults: 2000 sentences, lengths 5..20, 3 types
  const Corpus train = gen_synthetic(gen, 505);
  GeneratorConfig dev_gen = gen;
  dev_gen.sentence_count = 300;
  const Corpus dev = gen_synthetic(dev_gen, 506);
  GeneratorConfig test_gen = gen;
  test_gen.sentence_count = 500;
  const Corpus test = gen_synthetic(test_gen, 507);

  const SweepData sweep = run_sweep(train, dev, test);
  ac5_robustness(sweep);
  ac6_misguidance(sweep);
  ac8_metric_validity(sweep);
  ac7_lambda_curve(train, dev, test);

  std::printf("# %d criterion failure(s)\n", g_failures);
  return g_failures;
}
