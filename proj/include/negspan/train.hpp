#ifndef NEGSPAN_TRAIN_HPP
#define NEGSPAN_TRAIN_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "negspan/corpus.hpp"
#include "negspan/model.hpp"
#include "negspan/rng.hpp"
#include "negspan/spanscorer.hpp"

namespace negspan {

enum class Regime { sampled, full, oracle };

Regime parse_regime(const std::string& name);
std::string regime_name(Regime r);

struct TrainConfig {
  Regime regime = Regime::sampled;
  ModelKind model = ModelKind::span;
  double lambda = 0.35;
  std::size_t epochs = 30;
  std::size_t batch_size = 1;
  double lr = 1e-3;
  double dropout = 0.4;
  double l2 = 1e-5;
  std::uint64_t seed = 1;
  std::optional<int> max_span_len;
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;
  std::size_t scoring_dim = 64;
  bool scorer_biases = false;
  std::optional<std::string> pretrained_embeddings;

  void validate() const;
};

// All spans (i, j) whose position carries no visible annotation; the
// candidate count is n(n+1)/2 - m.
std::vector<std::pair<int, int>> negative_candidates(const AnnotatedSentence& s);

// Candidates minus the hidden set as well: spans outside gold and hidden.
std::vector<std::pair<int, int>> oracle_adjusted_negatives(
    const AnnotatedSentence& s);

// Sample size per sentence: ceil(lambda * n), computed with a small epsilon
// so binary-fraction lambdas do not bump values like 1.0000000000000002 up.
std::size_t negative_sample_size(double lambda, int n);

struct NegativeSample {
  std::vector<std::pair<int, int>> spans;  // sorted, no duplicates
};

// Uniform sample without replacement of size min(ceil(lambda*n), |cands|).
NegativeSample sample_negatives(const std::vector<std::pair<int, int>>& cands,
                                int n, double lambda, Rng& rng);

// Sum of -log o_{i,j}[l] over gold plus -log o_{i,j}[O] over negatives.
double span_loss(const SpanScoreTable& table, const SpanSet& gold,
                 const std::vector<std::pair<int, int>>& negatives,
                 const std::vector<std::string>& labels);

// Same quantity as a differentiable node. `scores` must be the node the
// table was built from.
Tape::NodeId span_loss_node(Tape& tape, Tape::NodeId scores,
                            const SpanScoreTable& table, const SpanSet& gold,
                            const std::vector<std::pair<int, int>>& negatives,
                            const std::vector<std::string>& labels);

struct EpochLog {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double dev_f1 = 0.0;  // NaN when no dev corpus was given
};

struct TrainResult {
  ModelBundle model;
  std::vector<EpochLog> log;
  double best_dev_f1 = 0.0;  // NaN when no dev corpus was given
};

// Epoch loop over shuffled sentence-level steps. Per step: encode, score the
// spans the loss touches, build regime-specific negatives, take an Adam step
// with L2 weight decay. Negatives are drawn fresh at every visit, so the
// sampled regime resamples every epoch. Deterministic given cfg.seed.
TrainResult train_model(const Corpus& train, const Corpus* dev,
                        const TrainConfig& cfg);

void write_loss_log(const std::vector<EpochLog>& log, const std::string& path);

}  // namespace negspan

#endif  // NEGSPAN_TRAIN_HPP
