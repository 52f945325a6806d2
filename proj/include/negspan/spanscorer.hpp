#ifndef NEGSPAN_SPANSCORER_HPP
#define NEGSPAN_SPANSCORER_HPP

#include <optional>
#include <utility>
#include <vector>

#include "negspan/encoder.hpp"
#include "negspan/params.hpp"
#include "negspan/tape.hpp"

namespace negspan {

struct ScorerConfig {
  std::size_t scoring_dim = 64;  // paper-scale value is 256
  bool biases = false;           // the scoring equations carry none

  void validate() const;
};

// Label distributions o_{i,j} over L plus O for every enumerated span of one
// sentence. O sits at the last column (index |L|).
struct SpanScoreTable {
  int sentence_len = 0;
  std::optional<int> max_span_len;
  std::vector<std::pair<int, int>> spans;  // enumeration order: i asc, j asc
  Tensor scores;                           // spans.size() x (|L|+1)

  std::size_t label_count() const { return scores.cols() - 1; }
  std::size_t o_index() const { return scores.cols() - 1; }
  // Row of span (i, j); throws ContractViolation if the span was not
  // enumerated (out of bounds or capped away).
  std::size_t row_of(int i, int j) const;
};

// All spans 1 <= i <= j <= n, optionally restricted to length <= cap.
std::vector<std::pair<int, int>> enumerate_spans(int n,
                                                 std::optional<int> cap = {});

// V (scoring_dim x 4d) and U ((|L|+1) x scoring_dim), uniform in [-0.1, 0.1];
// bias rows only when cfg.biases is set.
void init_scorer_params(ParamStore& store, const ScorerConfig& cfg,
                        std::size_t hidden_dim, std::size_t label_count,
                        Rng& rng);

// s_{i,j} = h_i (+) h_j (+) (h_i - h_j) (+) (h_i . h_j), a 1 x 4d row.
Tape::NodeId span_repr(Tape& tape, const std::vector<Tape::NodeId>& H, int i,
                       int j);

// Stacked distributions softmax(U tanh(V s)) for the given spans, one row
// per span in the given order.
Tape::NodeId score_spans_node(Tape& tape, ParamBinding& params,
                              const std::vector<Tape::NodeId>& H,
                              const std::vector<std::pair<int, int>>& spans);

// Full-table scoring. When node_out is non-null it receives the tape node
// the table was copied from, for building a training loss on top.
SpanScoreTable score_spans(Tape& tape, ParamBinding& params,
                           const std::vector<Tape::NodeId>& H,
                           std::optional<int> max_span_len = {},
                           Tape::NodeId* node_out = nullptr);

}  // namespace negspan

#endif  // NEGSPAN_SPANSCORER_HPP
