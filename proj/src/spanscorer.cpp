#include "negspan/spanscorer.hpp"

#include "negspan/errors.hpp"

namespace negspan {

void ScorerConfig::validate() const {
  if (scoring_dim < 1) throw ArgumentError("scoring_dim must be at least 1");
}

std::size_t SpanScoreTable::row_of(int i, int j) const {
  if (i >= 1 && j >= i && j <= sentence_len &&
      (!max_span_len || j - i + 1 <= *max_span_len)) {
    // spans are enumerated i ascending, then j ascending
    std::size_t row = 0;
    for (int s = 1; s < i; ++s) {
      const int longest = max_span_len
                              ? std::min(sentence_len - s + 1, *max_span_len)
                              : sentence_len - s + 1;
      row += static_cast<std::size_t>(longest);
    }
    row += static_cast<std::size_t>(j - i);
    return row;
  }
  throw ContractViolation("span (" + std::to_string(i) + "," +
                          std::to_string(j) + ") not present in score table");
}

std::vector<std::pair<int, int>> enumerate_spans(int n,
                                                 std::optional<int> cap) {
  std::vector<std::pair<int, int>> spans;
  for (int i = 1; i <= n; ++i) {
    for (int j = i; j <= n; ++j) {
      if (cap && j - i + 1 > *cap) break;
      spans.emplace_back(i, j);
    }
  }
  return spans;
}

void init_scorer_params(ParamStore& store, const ScorerConfig& cfg,
                        std::size_t hidden_dim, std::size_t label_count,
                        Rng& rng) {
  cfg.validate();
  store.add_uniform("scorer.v", cfg.scoring_dim, 4 * hidden_dim, rng);
  store.add_uniform("scorer.u", label_count + 1, cfg.scoring_dim, rng);
  if (cfg.biases) {
    store.add_uniform("scorer.bv", 1, cfg.scoring_dim, rng);
    store.add_uniform("scorer.bu", 1, label_count + 1, rng);
  }
}

Tape::NodeId span_repr(Tape& tape, const std::vector<Tape::NodeId>& H, int i,
                       int j) {
  const int n = static_cast<int>(H.size());
  if (i < 1 || j < i || j > n) {
    throw ContractViolation("span_repr indices (" + std::to_string(i) + "," +
                            std::to_string(j) + ") out of range for n=" +
                            std::to_string(n));
  }
  const Tape::NodeId hi = H[static_cast<std::size_t>(i - 1)];
  const Tape::NodeId hj = H[static_cast<std::size_t>(j - 1)];
  return tape.concat_columns(
      {hi, hj, tape.subtract(hi, hj), tape.multiply(hi, hj)});
}

Tape::NodeId score_spans_node(Tape& tape, ParamBinding& params,
                              const std::vector<Tape::NodeId>& H,
                              const std::vector<std::pair<int, int>>& spans) {
  if (spans.empty()) throw ContractViolation("no spans to score");
  std::vector<Tape::NodeId> rows;
  rows.reserve(spans.size());
  for (const auto& [i, j] : spans) {
    rows.push_back(span_repr(tape, H, i, j));
  }
  const Tape::NodeId stacked = tape.concat_rows(rows);

  Tape::NodeId pre = tape.matmul(stacked, tape.transpose(params["scorer.v"]));
  if (params.store().has("scorer.bv")) {
    pre = tape.add_row_broadcast(pre, params["scorer.bv"]);
  }
  Tape::NodeId logits =
      tape.matmul(tape.tanh(pre), tape.transpose(params["scorer.u"]));
  if (params.store().has("scorer.bu")) {
    logits = tape.add_row_broadcast(logits, params["scorer.bu"]);
  }
  return tape.softmax_rows(logits);
}

SpanScoreTable score_spans(Tape& tape, ParamBinding& params,
                           const std::vector<Tape::NodeId>& H,
                           std::optional<int> max_span_len,
                           Tape::NodeId* node_out) {
  SpanScoreTable table;
  table.sentence_len = static_cast<int>(H.size());
  table.max_span_len = max_span_len;
  table.spans = enumerate_spans(table.sentence_len, max_span_len);
  const Tape::NodeId node = score_spans_node(tape, params, H, table.spans);
  table.scores = tape.value(node);
  if (node_out) *node_out = node;
  return table;
}

}  // namespace negspan
