#include "negspan/infer.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "negspan/errors.hpp"
#include "negspan/tagbaseline.hpp"

namespace negspan {

std::vector<ScoredEntity> decode_spans(const SpanScoreTable& table,
                                       const std::vector<std::string>& labels) {
  if (labels.size() + 1 != table.scores.cols()) {
    throw ContractViolation("label space does not match score table width");
  }
  std::vector<ScoredEntity> out;
  for (std::size_t row = 0; row < table.spans.size(); ++row) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < table.scores.cols(); ++c) {
      if (table.scores.at(row, c) > table.scores.at(row, best)) best = c;
    }
    if (best == table.o_index()) continue;
    out.push_back({table.spans[row].first, table.spans[row].second, best,
                   labels[best], table.scores.at(row, best)});
  }
  return out;
}

namespace {

bool spans_overlap(const ScoredEntity& a, const ScoredEntity& b) {
  return std::max(a.start, b.start) <= std::min(a.end, b.end);
}

}  // namespace

std::vector<ScoredEntity> resolve_conflicts(std::vector<ScoredEntity> cands) {
  std::stable_sort(cands.begin(), cands.end(),
                   [](const ScoredEntity& a, const ScoredEntity& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.start != b.start) return a.start < b.start;
                     const int la = a.end - a.start, lb = b.end - b.start;
                     if (la != lb) return la < lb;
                     return a.label_index < b.label_index;
                   });
  std::vector<ScoredEntity> accepted;
  for (const auto& cand : cands) {
    const bool blocked =
        std::any_of(accepted.begin(), accepted.end(),
                    [&](const ScoredEntity& a) { return spans_overlap(a, cand); });
    if (!blocked) accepted.push_back(cand);
  }
  std::sort(accepted.begin(), accepted.end(),
            [](const ScoredEntity& a, const ScoredEntity& b) {
              return std::tie(a.start, a.end, a.label_index) <
                     std::tie(b.start, b.end, b.label_index);
            });
  return accepted;
}

SpanSet to_span_set(const std::vector<ScoredEntity>& entities) {
  SpanSet out;
  for (const auto& e : entities) out.insert({e.start, e.end, e.label});
  return out;
}

namespace {

std::vector<ScoredEntity> predict_tagger(const ModelBundle& model,
                                         const Sentence& x) {
  Tape tape;
  ParamBinding binding(tape, model.params);
  const auto H =
      encode(tape, binding, model.encoder, model.vocab, x, Mode::eval);
  const auto q =
      tape.value(tag_distributions_node(tape, binding, H));
  const auto z = decode_tags(q);

  const auto tagset = bio_tagset(model.labels);
  std::vector<std::string> tags(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) tags[i] = tagset[z[i]];
  std::vector<ScoredEntity> out;
  for (const auto& span : bio_to_spans(tags)) {
    double score = 0.0;
    for (int k = span.start; k <= span.end; ++k) {
      score += q.at(static_cast<std::size_t>(k) - 1,
                    z[static_cast<std::size_t>(k) - 1]);
    }
    score /= span.end - span.start + 1;
    std::size_t label_index = 0;
    while (model.labels[label_index] != span.label) ++label_index;
    out.push_back({span.start, span.end, label_index, span.label, score});
  }
  return out;
}

}  // namespace

std::vector<ScoredEntity> predict_scored(const ModelBundle& model,
                                         const Sentence& x,
                                         std::optional<int> max_span_len) {
  if (model.kind == ModelKind::tagger) return predict_tagger(model, x);
  Tape tape;
  ParamBinding binding(tape, model.params);
  const auto H =
      encode(tape, binding, model.encoder, model.vocab, x, Mode::eval);
  const auto table = score_spans(tape, binding, H, max_span_len);
  return resolve_conflicts(decode_spans(table, model.labels));
}

SpanSet predict(const ModelBundle& model, const Sentence& x,
                std::optional<int> max_span_len) {
  return to_span_set(predict_scored(model, x, max_span_len));
}

void write_predictions(std::ostream& out,
                       const std::vector<std::vector<ScoredEntity>>& batches) {
  char score_text[32];
  for (std::size_t idx = 0; idx < batches.size(); ++idx) {
    for (const auto& e : batches[idx]) {
      std::snprintf(score_text, sizeof score_text, "%.6f", e.score);
      out << idx << '\t' << e.start << '\t' << e.end << '\t' << e.label << '\t'
          << score_text << '\n';
    }
  }
}

}  // namespace negspan
