#ifndef NEGSPAN_TAGBASELINE_HPP
#define NEGSPAN_TAGBASELINE_HPP

#include <string>
#include <vector>

#include "negspan/corpus.hpp"
#include "negspan/encoder.hpp"
#include "negspan/tape.hpp"

namespace negspan {

// BIO tagset over the label space: B-l and I-l per label in order, then O
// at the last index (2|L|).
std::vector<std::string> bio_tagset(const std::vector<std::string>& labels);

// Tag indices of the sentence's visible gold spans; hidden spans map to O.
std::vector<std::size_t> bio_tag_indices(const AnnotatedSentence& s,
                                         const std::vector<std::string>& tagset);

// W is (tagset_size x d), uniform in [-0.1, 0.1].
void init_tagger_params(ParamStore& store, std::size_t hidden_dim,
                        std::size_t label_count, Rng& rng);

// Per-token distributions q_i = softmax(W h_i), one row per token.
Tape::NodeId tag_distributions_node(Tape& tape, ParamBinding& params,
                                    const std::vector<Tape::NodeId>& H);

// Sum of -log q_i[z_i] over all positions.
double tagging_loss(const Tensor& q, const std::vector<std::size_t>& z);
Tape::NodeId tagging_loss_node(Tape& tape, Tape::NodeId q,
                               const std::vector<std::size_t>& z);

// tagging_loss minus the token losses inside hidden spans (per span, so two
// overlapping hidden spans would subtract a shared position twice; our
// corpora never produce overlaps).
double adjusted_tagging_loss(const Tensor& q, const std::vector<std::size_t>& z,
                             const SpanSet& hidden);
Tape::NodeId adjusted_tagging_loss_node(Tape& tape, Tape::NodeId q,
                                        const std::vector<std::size_t>& z,
                                        const SpanSet& hidden);

// Per-token argmax, ties broken by the lowest tag index.
std::vector<std::size_t> decode_tags(const Tensor& q);

}  // namespace negspan

#endif  // NEGSPAN_TAGBASELINE_HPP
