#include "negspan/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "negspan/errors.hpp"
#include "negspan/infer.hpp"
#include "negspan/metrics.hpp"
#include "negspan/tagbaseline.hpp"

namespace negspan {

Regime parse_regime(const std::string& name) {
  if (name == "sampled") return Regime::sampled;
  if (name == "full") return Regime::full;
  if (name == "oracle") return Regime::oracle;
  throw ArgumentError("unknown regime '" + name +
                      "' (expected sampled, full, or oracle)");
}

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::sampled: return "sampled";
    case Regime::full: return "full";
    case Regime::oracle: return "oracle";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (model == ModelKind::span && regime == Regime::sampled &&
      !(lambda > 0.0 && lambda < 1.0)) {
    throw ConfigError("lambda must lie in (0,1), got " +
                      std::to_string(lambda));
  }
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (model == ModelKind::tagger && regime == Regime::sampled) {
    throw ConfigError("the sampled regime applies to the span model only");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ConfigError("dropout must lie in [0,1)");
  }
  if (max_span_len && *max_span_len < 1) {
    throw ConfigError("max_span_len must be positive");
  }
}

std::vector<std::pair<int, int>> negative_candidates(
    const AnnotatedSentence& s) {
  const int n = s.sentence.length();
  std::set<std::pair<int, int>> taken;
  for (const auto& span : s.gold) taken.insert({span.start, span.end});
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(n) * (n + 1) / 2 - taken.size());
  for (int i = 1; i <= n; ++i) {
    for (int j = i; j <= n; ++j) {
      if (!taken.count({i, j})) out.emplace_back(i, j);
    }
  }
  return out;
}

std::vector<std::pair<int, int>> oracle_adjusted_negatives(
    const AnnotatedSentence& s) {
  const int n = s.sentence.length();
  std::set<std::pair<int, int>> taken;
  for (const auto& span : s.gold) taken.insert({span.start, span.end});
  for (const auto& span : s.hidden) taken.insert({span.start, span.end});
  std::vector<std::pair<int, int>> out;
  for (int i = 1; i <= n; ++i) {
    for (int j = i; j <= n; ++j) {
      if (!taken.count({i, j})) out.emplace_back(i, j);
    }
  }
  return out;
}

std::size_t negative_sample_size(double lambda, int n) {
  return static_cast<std::size_t>(std::ceil(lambda * n - 1e-9));
}

NegativeSample sample_negatives(const std::vector<std::pair<int, int>>& cands,
                                int n, double lambda, Rng& rng) {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw ArgumentError("lambda must lie in (0,1)");
  }
  const std::size_t want =
      std::min(negative_sample_size(lambda, n), cands.size());
  // partial Fisher-Yates over a copy
  std::vector<std::pair<int, int>> pool = cands;
  for (std::size_t k = 0; k < want; ++k) {
    const std::size_t pickk =
        k + static_cast<std::size_t>(rng.index(pool.size() - k));
    std::swap(pool[k], pool[pickk]);
  }
  pool.resize(want);
  std::sort(pool.begin(), pool.end());
  return {std::move(pool)};
}

namespace {

std::size_t label_index_of(const std::vector<std::string>& labels,
                           const std::string& label) {
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == label) return k;
  }
  throw ContractViolation("label '" + label + "' outside the label space");
}

}  // namespace

double span_loss(const SpanScoreTable& table, const SpanSet& gold,
                 const std::vector<std::pair<int, int>>& negatives,
                 const std::vector<std::string>& labels) {
  double loss = 0.0;
  for (const auto& span : gold) {
    const std::size_t row = table.row_of(span.start, span.end);
    loss -= std::log(table.scores.at(row, label_index_of(labels, span.label)));
  }
  for (const auto& [i, j] : negatives) {
    loss -= std::log(table.scores.at(table.row_of(i, j), table.o_index()));
  }
  return loss;
}

Tape::NodeId span_loss_node(Tape& tape, Tape::NodeId scores,
                            const SpanScoreTable& table, const SpanSet& gold,
                            const std::vector<std::pair<int, int>>& negatives,
                            const std::vector<std::string>& labels) {
  if (gold.empty() && negatives.empty()) {
    throw ContractViolation("span loss over no spans");
  }
  const Tape::NodeId logp = tape.log(scores);
  Tape::NodeId total = 0;
  bool first = true;
  auto accumulate = [&](std::size_t row, std::size_t col) {
    const Tape::NodeId term = tape.pick(logp, row, col);
    total = first ? term : tape.add(total, term);
    first = false;
  };
  for (const auto& span : gold) {
    accumulate(table.row_of(span.start, span.end),
               label_index_of(labels, span.label));
  }
  for (const auto& [i, j] : negatives) {
    accumulate(table.row_of(i, j), table.o_index());
  }
  return tape.scale(total, -1.0);
}

namespace {

// The trainer scores only the spans its loss references; unreferenced spans
// carry zero gradient, so the update equals full-table scoring at a fraction
// of the cost in the sampled regime.
std::size_t subset_row(const std::vector<std::pair<int, int>>& spans, int i,
                       int j) {
  const auto it = std::lower_bound(spans.begin(), spans.end(),
                                   std::make_pair(i, j));
  if (it == spans.end() || *it != std::make_pair(i, j)) {
    throw ContractViolation("span not in training subset");
  }
  return static_cast<std::size_t>(it - spans.begin());
}

}  // namespace

TrainResult train_model(const Corpus& train, const Corpus* dev,
                        const TrainConfig& cfg) {
  cfg.validate();
  TrainResult result;
  ModelBundle& model = result.model;
  model.kind = cfg.model;
  model.vocab = Vocabulary::build(train);
  model.labels = train.labels;
  model.encoder.embed_dim = cfg.embed_dim;
  model.encoder.hidden_dim = cfg.hidden_dim;
  model.encoder.dropout = cfg.dropout;
  model.scorer.scoring_dim = cfg.scoring_dim;
  model.scorer.biases = cfg.scorer_biases;

  Rng init_rng(split_seed(cfg.seed, 1));
  Rng shuffle_rng(split_seed(cfg.seed, 2));
  Rng dropout_rng(split_seed(cfg.seed, 3));
  Rng sample_rng(split_seed(cfg.seed, 4));

  init_encoder_params(model.params, model.encoder, model.vocab.size(),
                      init_rng);
  if (cfg.model == ModelKind::span) {
    init_scorer_params(model.params, model.scorer, cfg.hidden_dim,
                       model.labels.size(), init_rng);
  } else {
    init_tagger_params(model.params, cfg.hidden_dim, model.labels.size(),
                       init_rng);
  }
  if (cfg.pretrained_embeddings) {
    load_pretrained_embeddings(*cfg.pretrained_embeddings, model.vocab,
                               model.params.get("enc.embed"));
  }

  AdamConfig adam;
  adam.lr = cfg.lr;
  adam.weight_decay = cfg.l2;

  const auto tagset = bio_tagset(model.labels);

  std::vector<std::size_t> order(train.sentences.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;

  ParamStore best_params;
  double best_f1 = -1.0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // Fisher-Yates shuffle, deterministic across platforms
    for (std::size_t k = order.size(); k > 1; --k) {
      std::swap(order[k - 1], order[static_cast<std::size_t>(
                                  shuffle_rng.index(k))]);
    }

    double epoch_loss = 0.0;
    std::unordered_map<std::string, Tensor> grad_acc;
    std::size_t in_batch = 0;

    auto flush_batch = [&] {
      if (in_batch == 0) return;
      std::unordered_map<std::string, const Tensor*> grads;
      for (const auto& [name, g] : grad_acc) grads[name] = &g;
      adam_step(model.params, grads, adam);
      grad_acc.clear();
      in_batch = 0;
    };

    for (std::size_t step = 0; step < order.size(); ++step) {
      const AnnotatedSentence& s = train.sentences[order[step]];
      try {
        Tape tape;
        ParamBinding binding(tape, model.params);
        const auto H = encode(tape, binding, model.encoder, model.vocab,
                              s.sentence, Mode::train, &dropout_rng);

        Tape::NodeId loss_node = 0;
        if (cfg.model == ModelKind::span) {
          std::vector<std::pair<int, int>> negatives;
          switch (cfg.regime) {
            case Regime::sampled: {
              auto cands = negative_candidates(s);
              if (cfg.max_span_len) {
                std::erase_if(cands, [&](const auto& ij) {
                  return ij.second - ij.first + 1 > *cfg.max_span_len;
                });
              }
              negatives = sample_negatives(cands, s.sentence.length(),
                                           cfg.lambda, sample_rng)
                              .spans;
              break;
            }
            case Regime::full:
              negatives = negative_candidates(s);
              break;
            case Regime::oracle:
              negatives = oracle_adjusted_negatives(s);
              break;
          }
          if (cfg.max_span_len && cfg.regime != Regime::sampled) {
            std::erase_if(negatives, [&](const auto& ij) {
              return ij.second - ij.first + 1 > *cfg.max_span_len;
            });
          }

          std::vector<std::pair<int, int>> refs;
          refs.reserve(s.gold.size() + negatives.size());
          for (const auto& span : s.gold) {
            if (cfg.max_span_len &&
                span.end - span.start + 1 > *cfg.max_span_len) {
              throw ContractViolation(
                  "gold span longer than max_span_len cannot be scored");
            }
            refs.emplace_back(span.start, span.end);
          }
          refs.insert(refs.end(), negatives.begin(), negatives.end());
          std::sort(refs.begin(), refs.end());
          refs.erase(std::unique(refs.begin(), refs.end()), refs.end());
          if (refs.empty()) continue;  // n=1 sentence fully annotated

          const Tape::NodeId scores =
              score_spans_node(tape, binding, H, refs);
          const Tensor& probs = tape.value(scores);

          const Tape::NodeId logp = tape.log(scores);
          Tape::NodeId total = 0;
          bool first = true;
          auto accumulate = [&](std::size_t row, std::size_t col) {
            const Tape::NodeId term = tape.pick(logp, row, col);
            total = first ? term : tape.add(total, term);
            first = false;
          };
          for (const auto& span : s.gold) {
            accumulate(subset_row(refs, span.start, span.end),
                       label_index_of(model.labels, span.label));
          }
          const std::size_t o_col = probs.cols() - 1;
          for (const auto& [i, j] : negatives) {
            accumulate(subset_row(refs, i, j), o_col);
          }
          loss_node = tape.scale(total, -1.0);
        } else {
          const Tape::NodeId q = tag_distributions_node(tape, binding, H);
          const auto z = bio_tag_indices(s, tagset);
          loss_node = cfg.regime == Regime::oracle
                          ? adjusted_tagging_loss_node(tape, q, z, s.hidden)
                          : tagging_loss_node(tape, q, z);
        }

        const double loss = tape.value(loss_node)[0];
        if (!std::isfinite(loss)) {
          throw TrainingError("non-finite loss");
        }
        epoch_loss += loss;

        tape.backward(loss_node);
        for (const auto& [name, g] : binding.grads()) {
          const auto it = grad_acc.find(name);
          if (it == grad_acc.end()) {
            grad_acc.emplace(name, *g);
          } else {
            for (std::size_t k = 0; k < it->second.size(); ++k) {
              it->second[k] += (*g)[k];
            }
          }
        }
        if (++in_batch >= cfg.batch_size) flush_batch();
      } catch (const TrainingError& e) {
        throw TrainingError("epoch " + std::to_string(epoch) + ", sentence " +
                            std::to_string(order[step]) + ": " + e.what());
      } catch (const std::domain_error& e) {
        // degenerate probabilities behave like a non-finite loss
        throw TrainingError("epoch " + std::to_string(epoch) + ", sentence " +
                            std::to_string(order[step]) + ": " + e.what());
      }
    }
    flush_batch();

    EpochLog entry;
    entry.epoch = epoch;
    entry.mean_loss =
        train.sentences.empty()
            ? 0.0
            : epoch_loss / static_cast<double>(train.sentences.size());
    entry.dev_f1 = std::numeric_limits<double>::quiet_NaN();
    if (dev) {
      std::vector<SpanSet> pred, gold;
      pred.reserve(dev->sentences.size());
      for (const auto& ds : dev->sentences) {
        pred.push_back(predict(model, ds.sentence, cfg.max_span_len));
        gold.push_back(ds.gold);
      }
      entry.dev_f1 = entity_f1(pred, gold).f1;
      if (entry.dev_f1 > best_f1) {
        best_f1 = entry.dev_f1;
        best_params = model.params;
      }
    }
    result.log.push_back(entry);
  }

  if (dev) {
    model.params = std::move(best_params);
    result.best_dev_f1 = best_f1;
  } else {
    result.best_dev_f1 = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

void write_loss_log(const std::vector<EpochLog>& log,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write loss log: " + path);
  for (const auto& e : log) {
    out << e.epoch << '\t' << e.mean_loss << '\t';
    if (std::isnan(e.dev_f1)) {
      out << '-';
    } else {
      out << e.dev_f1;
    }
    out << '\n';
  }
}

}  // namespace negspan
