#ifndef NEGSPAN_CORPUS_HPP
#define NEGSPAN_CORPUS_HPP

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace negspan {

struct Sentence {
  std::vector<std::string> tokens;

  int length() const { return static_cast<int>(tokens.size()); }
};

// A labeled token range, 1-based inclusive on both ends. The label is never
// "O"; non-entity spans are represented by absence.
struct EntitySpan {
  int start = 0;
  int end = 0;
  std::string label;

  auto operator<=>(const EntitySpan&) const = default;
};

using SpanSet = std::set<EntitySpan>;

struct AnnotatedSentence {
  Sentence sentence;
  SpanSet gold;    // visible annotations
  SpanSet hidden;  // masked-out entities; empty unless produced by masking

  // Throws ContractViolation if a span is out of bounds, labeled O, or if a
  // (start, end) pair appears more than once across gold and hidden.
  void validate() const;
};

struct Corpus {
  std::vector<AnnotatedSentence> sentences;
  std::vector<std::string> labels;  // label space L, ordered, excludes O

  std::size_t total_gold_spans() const;
  std::size_t total_hidden_spans() const;
};

// --- CoNLL text format ------------------------------------------------------
// One `token<TAB or space>tag` per line, blank line between sentences, BIO
// tags. An I-X with no live X chunk opens a new one (conlleval repair).
Corpus parse_conll(std::istream& in);
Corpus parse_conll_file(const std::string& path);
void write_conll(const Corpus& corpus, std::ostream& out);
void write_conll_file(const Corpus& corpus, const std::string& path);

// --- BIO conversion ---------------------------------------------------------
// Requires pairwise non-overlapping spans; throws ContractViolation otherwise.
std::vector<std::string> spans_to_bio(const AnnotatedSentence& s);
// Accepts any B-X/I-X/O sequence, applying the same repair as parse_conll.
// Unknown tag shapes throw ParseError.
SpanSet bio_to_spans(const std::vector<std::string>& tags);

// --- Synthetic masking ------------------------------------------------------
// Moves each gold span to hidden independently with probability p.
// Input must carry empty hidden sets. p outside [0,1] throws ArgumentError.
Corpus mask_entities(const Corpus& corpus, double p, std::uint64_t seed);

// Sidecar of hidden spans: `sentenceIdx<TAB>i<TAB>j<TAB>label`, 0-based
// sentence index in file order.
void write_sidecar(const Corpus& corpus, std::ostream& out);
void write_sidecar_file(const Corpus& corpus, const std::string& path);
// Attaches hidden spans from a sidecar to a corpus parsed from the masked
// CoNLL file. Out-of-range indices or span collisions throw ParseError.
void apply_sidecar(Corpus& corpus, std::istream& in);
void apply_sidecar_file(Corpus& corpus, const std::string& path);

// --- Synthetic language generator -------------------------------------------
// Desk-scale corpus where entity membership is decided by the lexicon alone:
// entity phrases are built from tokens that never occur as context and never
// occur inside another phrase.
struct GeneratorConfig {
  std::size_t sentence_count = 2000;
  int min_len = 5;
  int max_len = 20;
  std::size_t type_count = 3;
  int min_entities = 1;
  int max_entities = 3;

  // When empty, lexicons are synthesized deterministically from the counts
  // below; the synthesized lexicons do not depend on the generation seed, so
  // corpora drawn with different seeds share one language.
  std::vector<std::string> type_names;                         // size type_count
  std::vector<std::vector<std::vector<std::string>>> lexicons; // [type][phrase][token]
  std::vector<std::string> context_lexicon;

  std::size_t phrases_per_type = 240;
  int max_phrase_len = 3;
  std::size_t context_vocab = 200;

  // Skew of phrase usage (0 = uniform); a rare tail makes masking studies
  // more discriminative.
  double zipf_exponent = 0.3;
};

// Fills in default type names / lexicons where empty and checks the
// disjointness requirements. Throws ArgumentError on violations.
GeneratorConfig finalize_generator_config(GeneratorConfig cfg);

Corpus gen_synthetic(const GeneratorConfig& cfg, std::uint64_t seed);

}  // namespace negspan

#endif  // NEGSPAN_CORPUS_HPP
