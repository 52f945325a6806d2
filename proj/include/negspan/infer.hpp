#ifndef NEGSPAN_INFER_HPP
#define NEGSPAN_INFER_HPP

#include <iosfwd>
#include <optional>
#include <vector>

#include "negspan/corpus.hpp"
#include "negspan/model.hpp"
#include "negspan/spanscorer.hpp"

namespace negspan {

struct ScoredEntity {
  int start = 0;
  int end = 0;
  std::size_t label_index = 0;
  std::string label;
  double score = 0.0;  // winning probability o_{i,j}[l]
};

// One candidate per span whose argmax label is not O; argmax ties go to the
// lowest label index.
std::vector<ScoredEntity> decode_spans(const SpanScoreTable& table,
                                       const std::vector<std::string>& labels);

// Greedy conflict resolution: sort by (score desc, start asc, length asc,
// label index asc) and accept candidates that do not overlap anything
// accepted before them. Containment counts as overlap.
std::vector<ScoredEntity> resolve_conflicts(std::vector<ScoredEntity> cands);

SpanSet to_span_set(const std::vector<ScoredEntity>& entities);

// Full pipeline for one sentence. For span models the score is the winning
// span probability; for tagger models it is the mean winning tag probability
// over the span.
std::vector<ScoredEntity> predict_scored(
    const ModelBundle& model, const Sentence& x,
    std::optional<int> max_span_len = {});

SpanSet predict(const ModelBundle& model, const Sentence& x,
                std::optional<int> max_span_len = {});

// `sentenceIdx<TAB>i<TAB>j<TAB>label<TAB>score` with six-decimal scores,
// 0-based sentence indices in corpus order.
void write_predictions(std::ostream& out,
                       const std::vector<std::vector<ScoredEntity>>& batches);

}  // namespace negspan

#endif  // NEGSPAN_INFER_HPP
