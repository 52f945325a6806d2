#include "negspan/tagbaseline.hpp"

#include <cmath>

#include "negspan/errors.hpp"

namespace negspan {

std::vector<std::string> bio_tagset(const std::vector<std::string>& labels) {
  std::vector<std::string> tagset;
  tagset.reserve(2 * labels.size() + 1);
  for (const auto& l : labels) {
    tagset.push_back("B-" + l);
    tagset.push_back("I-" + l);
  }
  tagset.push_back("O");
  return tagset;
}

std::vector<std::size_t> bio_tag_indices(
    const AnnotatedSentence& s, const std::vector<std::string>& tagset) {
  const auto tags = spans_to_bio(s);
  std::vector<std::size_t> z(tags.size());
  for (std::size_t i = 0; i < tags.size(); ++i) {
    bool found = false;
    for (std::size_t t = 0; t < tagset.size(); ++t) {
      if (tagset[t] == tags[i]) {
        z[i] = t;
        found = true;
        break;
      }
    }
    if (!found) {
      throw ContractViolation("tag " + tags[i] + " outside the tagset");
    }
  }
  return z;
}

void init_tagger_params(ParamStore& store, std::size_t hidden_dim,
                        std::size_t label_count, Rng& rng) {
  store.add_uniform("tag.w", 2 * label_count + 1, hidden_dim, rng);
}

Tape::NodeId tag_distributions_node(Tape& tape, ParamBinding& params,
                                    const std::vector<Tape::NodeId>& H) {
  if (H.empty()) throw ContractViolation("tag_distributions on empty input");
  const Tape::NodeId stacked = tape.concat_rows(H);
  return tape.softmax_rows(
      tape.matmul(stacked, tape.transpose(params["tag.w"])));
}

double tagging_loss(const Tensor& q, const std::vector<std::size_t>& z) {
  if (q.rows() != z.size()) {
    throw ContractViolation("tagging_loss: " + std::to_string(z.size()) +
                            " tags for " + std::to_string(q.rows()) +
                            " distributions");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    loss -= std::log(q.at(i, z[i]));
  }
  return loss;
}

Tape::NodeId tagging_loss_node(Tape& tape, Tape::NodeId q,
                               const std::vector<std::size_t>& z) {
  if (tape.value(q).rows() != z.size()) {
    throw ContractViolation("tagging_loss: tag/distribution count mismatch");
  }
  const Tape::NodeId logq = tape.log(q);
  Tape::NodeId total = tape.pick(logq, 0, z[0]);
  for (std::size_t i = 1; i < z.size(); ++i) {
    total = tape.add(total, tape.pick(logq, i, z[i]));
  }
  return tape.scale(total, -1.0);
}

namespace {

void check_hidden_bounds(const SpanSet& hidden, std::size_t n) {
  for (const auto& span : hidden) {
    if (span.start < 1 || span.end < span.start ||
        span.end > static_cast<int>(n)) {
      throw ContractViolation("hidden span (" + std::to_string(span.start) +
                              "," + std::to_string(span.end) +
                              ") out of bounds for n=" + std::to_string(n));
    }
  }
}

}  // namespace

double adjusted_tagging_loss(const Tensor& q, const std::vector<std::size_t>& z,
                             const SpanSet& hidden) {
  check_hidden_bounds(hidden, z.size());
  double loss = tagging_loss(q, z);
  for (const auto& span : hidden) {
    for (int k = span.start; k <= span.end; ++k) {
      loss += std::log(q.at(static_cast<std::size_t>(k) - 1,
                            z[static_cast<std::size_t>(k) - 1]));
    }
  }
  return loss;
}

Tape::NodeId adjusted_tagging_loss_node(Tape& tape, Tape::NodeId q,
                                        const std::vector<std::size_t>& z,
                                        const SpanSet& hidden) {
  check_hidden_bounds(hidden, z.size());
  const Tape::NodeId base = tagging_loss_node(tape, q, z);
  if (hidden.empty()) return base;
  const Tape::NodeId logq = tape.log(q);
  Tape::NodeId removed = 0;
  bool first = true;
  for (const auto& span : hidden) {
    for (int k = span.start; k <= span.end; ++k) {
      const Tape::NodeId term =
          tape.pick(logq, static_cast<std::size_t>(k) - 1,
                    z[static_cast<std::size_t>(k) - 1]);
      removed = first ? term : tape.add(removed, term);
      first = false;
    }
  }
  // subtracting -log q terms == adding the log q terms back
  return tape.add(base, removed);
}

std::vector<std::size_t> decode_tags(const Tensor& q) {
  std::vector<std::size_t> out(q.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t t = 1; t < q.cols(); ++t) {
      if (q.at(i, t) > q.at(i, best)) best = t;
    }
    out[i] = best;
  }
  return out;
}

}  // namespace negspan
