#ifndef NEGSPAN_ENCODER_HPP
#define NEGSPAN_ENCODER_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "negspan/corpus.hpp"
#include "negspan/params.hpp"
#include "negspan/tape.hpp"

namespace negspan {

// Token-to-index map with a reserved unknown slot at index 0.
class Vocabulary {
 public:
  static constexpr const char* kUnknown = "<unk>";

  Vocabulary();
  // Every token of the corpus, min frequency 1, first-occurrence order.
  static Vocabulary build(const Corpus& corpus);

  std::size_t add(const std::string& token);  // idempotent
  std::size_t lookup(const std::string& token) const;  // unknown -> 0
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct EncoderConfig {
  std::size_t embed_dim = 32;  // E
  std::size_t hidden_dim = 64; // d; split evenly across the two directions
  double dropout = 0.4;

  void validate() const;
};

enum class Mode { train, eval };

// Binds store parameters to tape leaves for one forward/backward pass.
// Leaves are created on first use, so only parameters touched by the pass
// appear in the gradient map.
class ParamBinding {
 public:
  ParamBinding(Tape& tape, const ParamStore& store)
      : tape_(&tape), store_(&store) {}

  Tape::NodeId operator[](const std::string& name);
  const ParamStore& store() const { return *store_; }

  // Gradients accumulated by Tape::backward, keyed by parameter name.
  std::unordered_map<std::string, const Tensor*> grads() const;

 private:
  Tape* tape_;
  const ParamStore* store_;
  std::unordered_map<std::string, Tape::NodeId> bound_;
};

// Embedding table plus one gated recurrent cell per direction, all uniform
// in [-0.1, 0.1].
void init_encoder_params(ParamStore& store, const EncoderConfig& cfg,
                         std::size_t vocab_size, Rng& rng);

// Contextual representations h_1..h_n, each 1 x d: a forward pass over
// tokens 1..i and a backward pass over i..n, halves concatenated. Dropout is
// applied to embeddings and outputs in train mode only (rng required then).
std::vector<Tape::NodeId> encode(Tape& tape, ParamBinding& params,
                                 const EncoderConfig& cfg,
                                 const Vocabulary& vocab, const Sentence& x,
                                 Mode mode, Rng* dropout_rng = nullptr);

// Overwrites embedding rows for tokens found in a whitespace-delimited text
// file `token v1 .. vE`; rows for absent tokens keep their initialization.
// Returns the number of rows overwritten. Wrong dimension or malformed lines
// throw ParseError with the line number.
std::size_t load_pretrained_embeddings(const std::string& path,
                                       const Vocabulary& vocab,
                                       Tensor& embedding);

}  // namespace negspan

#endif  // NEGSPAN_ENCODER_HPP
