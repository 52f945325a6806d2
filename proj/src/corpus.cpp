#include "negspan/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "negspan/errors.hpp"
#include "negspan/rng.hpp"

namespace negspan {

void AnnotatedSentence::validate() const {
  const int n = sentence.length();
  if (n < 1) throw ContractViolation("sentence must have at least one token");
  for (const auto& tok : sentence.tokens) {
    if (tok.empty()) throw ContractViolation("empty token in sentence");
  }
  std::set<std::pair<int, int>> seen;
  auto check = [&](const EntitySpan& s) {
    if (s.start < 1 || s.start > s.end || s.end > n) {
      throw ContractViolation("span (" + std::to_string(s.start) + "," +
                              std::to_string(s.end) + ") out of bounds for n=" +
                              std::to_string(n));
    }
    if (s.label == "O" || s.label.empty()) {
      throw ContractViolation("entity span labeled O");
    }
    if (!seen.insert({s.start, s.end}).second) {
      throw ContractViolation("duplicate span position (" +
                              std::to_string(s.start) + "," +
                              std::to_string(s.end) + ")");
    }
  };
  for (const auto& s : gold) check(s);
  for (const auto& s : hidden) check(s);
}

std::size_t Corpus::total_gold_spans() const {
  std::size_t c = 0;
  for (const auto& s : sentences) c += s.gold.size();
  return c;
}

std::size_t Corpus::total_hidden_spans() const {
  std::size_t c = 0;
  for (const auto& s : sentences) c += s.hidden.size();
  return c;
}

namespace {

// Used by both the line parser and bio_to_spans: a run of B-X/I-X tags is
// turned into a span, with a dangling I-X opening a new chunk (conlleval
// behaviour).
struct ChunkBuilder {
  SpanSet spans;
  int open_start = 0;  // 0 = no open chunk
  std::string open_label;

  void close(int last_pos) {
    if (open_start > 0) {
      spans.insert({open_start, last_pos, open_label});
      open_start = 0;
      open_label.clear();
    }
  }

  void feed(int pos, const std::string& tag) {
    if (tag == "O") {
      close(pos - 1);
      return;
    }
    if (tag.size() < 3 || (tag[0] != 'B' && tag[0] != 'I') || tag[1] != '-') {
      throw ParseError("unrecognized tag '" + tag + "'");
    }
    const std::string label = tag.substr(2);
    if (tag[0] == 'B') {
      close(pos - 1);
      open_start = pos;
      open_label = label;
    } else {  // I-
      if (open_start == 0 || open_label != label) {
        close(pos - 1);
        open_start = pos;  // repair: dangling I- opens a chunk
        open_label = label;
      }
    }
  }
};

void collect_labels(Corpus& corpus) {
  std::set<std::string> seen;
  corpus.labels.clear();
  for (const auto& s : corpus.sentences) {
    for (const auto& span : s.gold) {
      if (seen.insert(span.label).second) corpus.labels.push_back(span.label);
    }
    for (const auto& span : s.hidden) {
      if (seen.insert(span.label).second) corpus.labels.push_back(span.label);
    }
  }
  std::sort(corpus.labels.begin(), corpus.labels.end());
}

}  // namespace

Corpus parse_conll(std::istream& in) {
  Corpus corpus;
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  std::size_t lineno = 0;

  auto flush = [&] {
    if (tokens.empty()) return;
    AnnotatedSentence s;
    s.sentence.tokens = std::move(tokens);
    s.gold = bio_to_spans(tags);
    s.validate();
    corpus.sentences.push_back(std::move(s));
    tokens.clear();
    tags.clear();
  };

  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    const std::size_t sep = line.find_first_of(" \t");
    if (sep == std::string::npos || sep == 0 || sep + 1 >= line.size() ||
        line.find_first_of(" \t", sep + 1) != std::string::npos) {
      throw ParseError("line " + std::to_string(lineno) +
                       ": expected `token<sep>tag`, got '" + line + "'");
    }
    tokens.push_back(line.substr(0, sep));
    tags.push_back(line.substr(sep + 1));
  }
  flush();
  collect_labels(corpus);
  return corpus;
}

Corpus parse_conll_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus file: " + path);
  return parse_conll(in);
}

void write_conll(const Corpus& corpus, std::ostream& out) {
  for (std::size_t k = 0; k < corpus.sentences.size(); ++k) {
    const auto& s = corpus.sentences[k];
    const auto tags = spans_to_bio(s);
    for (std::size_t i = 0; i < s.sentence.tokens.size(); ++i) {
      out << s.sentence.tokens[i] << '\t' << tags[i] << '\n';
    }
    if (k + 1 < corpus.sentences.size()) out << '\n';
  }
}

void write_conll_file(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write corpus file: " + path);
  write_conll(corpus, out);
}

std::vector<std::string> spans_to_bio(const AnnotatedSentence& s) {
  const int n = s.sentence.length();
  std::vector<std::string> tags(static_cast<std::size_t>(n), "O");
  int prev_end = -1;
  const EntitySpan* prev = nullptr;
  for (const auto& span : s.gold) {  // SpanSet iterates in (start, end) order
    if (span.start < 1 || span.end > n) {
      throw ContractViolation("span out of bounds in spans_to_bio");
    }
    if (prev && span.start <= prev_end) {
      throw ContractViolation(
          "overlapping spans (" + std::to_string(prev->start) + "," +
          std::to_string(prev->end) + ") and (" + std::to_string(span.start) +
          "," + std::to_string(span.end) + ") cannot be written as BIO");
    }
    tags[static_cast<std::size_t>(span.start) - 1] = "B-" + span.label;
    for (int k = span.start + 1; k <= span.end; ++k) {
      tags[static_cast<std::size_t>(k) - 1] = "I-" + span.label;
    }
    prev_end = span.end;
    prev = &span;
  }
  return tags;
}

SpanSet bio_to_spans(const std::vector<std::string>& tags) {
  ChunkBuilder chunks;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    chunks.feed(static_cast<int>(i) + 1, tags[i]);
  }
  chunks.close(static_cast<int>(tags.size()));
  return std::move(chunks.spans);
}

Corpus mask_entities(const Corpus& corpus, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ArgumentError("masking probability must lie in [0,1], got " +
                        std::to_string(p));
  }
  for (const auto& s : corpus.sentences) {
    if (!s.hidden.empty()) {
      throw ArgumentError("mask_entities input already carries hidden spans");
    }
  }
  Rng rng(split_seed(seed, 0xa5));
  Corpus out = corpus;
  for (auto& s : out.sentences) {
    SpanSet keep;
    for (const auto& span : s.gold) {  // deterministic (start,end,label) order
      if (rng.bernoulli(p)) {
        s.hidden.insert(span);
      } else {
        keep.insert(span);
      }
    }
    s.gold = std::move(keep);
  }
  return out;
}

void write_sidecar(const Corpus& corpus, std::ostream& out) {
  for (std::size_t idx = 0; idx < corpus.sentences.size(); ++idx) {
    for (const auto& span : corpus.sentences[idx].hidden) {
      out << idx << '\t' << span.start << '\t' << span.end << '\t'
          << span.label << '\n';
    }
  }
}

void write_sidecar_file(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write sidecar file: " + path);
  write_sidecar(corpus, out);
}

void apply_sidecar(Corpus& corpus, std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::size_t idx = 0;
    EntitySpan span;
    if (!(fields >> idx >> span.start >> span.end >> span.label)) {
      throw ParseError("sidecar line " + std::to_string(lineno) +
                       ": expected `idx i j label`");
    }
    if (idx >= corpus.sentences.size()) {
      throw ParseError("sidecar line " + std::to_string(lineno) +
                       ": sentence index " + std::to_string(idx) +
                       " out of range");
    }
    auto& s = corpus.sentences[idx];
    s.hidden.insert(span);
    try {
      s.validate();
    } catch (const ContractViolation& e) {
      throw ParseError("sidecar line " + std::to_string(lineno) + ": " +
                       e.what());
    }
    if (std::find(corpus.labels.begin(), corpus.labels.end(), span.label) ==
        corpus.labels.end()) {
      corpus.labels.push_back(span.label);
      std::sort(corpus.labels.begin(), corpus.labels.end());
    }
  }
}

void apply_sidecar_file(Corpus& corpus, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open sidecar file: " + path);
  apply_sidecar(corpus, in);
}

namespace {

std::string default_type_name(std::size_t t) {
  static const char* kNames[] = {"PER", "LOC", "ORG", "MISC"};
  if (t < 4) return kNames[t];
  return "TYPE" + std::to_string(t);
}

// Phrase tokens are unique to (type, phrase, position), e.g. "per07b", so no
// phrase can occur inside another phrase or in context by construction.
std::vector<std::vector<std::string>> default_lexicon(
    const std::string& type_name, const GeneratorConfig& cfg) {
  std::string stem = type_name;
  std::transform(stem.begin(), stem.end(), stem.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  std::vector<std::vector<std::string>> phrases;
  phrases.reserve(cfg.phrases_per_type);
  for (std::size_t k = 0; k < cfg.phrases_per_type; ++k) {
    const int len = 1 + static_cast<int>(k % cfg.max_phrase_len);
    std::vector<std::string> phrase;
    char id[16];
    for (int pos = 0; pos < len; ++pos) {
      std::snprintf(id, sizeof id, "%02zu%c", k, static_cast<char>('a' + pos));
      phrase.push_back(stem + id);
    }
    phrases.push_back(std::move(phrase));
  }
  return phrases;
}

void check_lexicons(const GeneratorConfig& cfg) {
  // Phrase sets must be disjoint across types, no phrase may contain another
  // phrase, and context words may not appear inside any phrase.
  std::map<std::vector<std::string>, std::size_t> owner;
  std::set<std::string> entity_tokens;
  for (std::size_t t = 0; t < cfg.lexicons.size(); ++t) {
    for (const auto& phrase : cfg.lexicons[t]) {
      if (phrase.empty()) throw ArgumentError("empty phrase in lexicon");
      auto [it, fresh] = owner.insert({phrase, t});
      if (!fresh) {
        throw ArgumentError("phrase shared by type lexicons " +
                            cfg.type_names[it->second] + " and " +
                            cfg.type_names[t]);
      }
      for (const auto& tok : phrase) entity_tokens.insert(tok);
    }
  }
  for (const auto& [phrase, t] : owner) {
    for (const auto& [other, u] : owner) {
      if (&phrase == &other || phrase.size() >= other.size()) continue;
      for (std::size_t off = 0; off + phrase.size() <= other.size(); ++off) {
        if (std::equal(phrase.begin(), phrase.end(), other.begin() + off)) {
          throw ArgumentError("phrase of type " + cfg.type_names[t] +
                              " occurs inside a phrase of type " +
                              cfg.type_names[u]);
        }
      }
    }
  }
  for (const auto& w : cfg.context_lexicon) {
    if (entity_tokens.count(w)) {
      throw ArgumentError("context word '" + w + "' also used inside a phrase");
    }
  }
}

}  // namespace

GeneratorConfig finalize_generator_config(GeneratorConfig cfg) {
  if (cfg.min_len < 1 || cfg.max_len < cfg.min_len) {
    throw ArgumentError("invalid sentence length range");
  }
  if (cfg.min_entities < 0 || cfg.max_entities < cfg.min_entities) {
    throw ArgumentError("invalid entity count range");
  }
  if (cfg.type_names.empty()) {
    for (std::size_t t = 0; t < cfg.type_count; ++t) {
      cfg.type_names.push_back(default_type_name(t));
    }
  }
  cfg.type_count = cfg.type_names.size();
  if (cfg.lexicons.empty()) {
    for (const auto& name : cfg.type_names) {
      cfg.lexicons.push_back(default_lexicon(name, cfg));
    }
  }
  if (cfg.lexicons.size() != cfg.type_count) {
    throw ArgumentError("lexicon count does not match type count");
  }
  if (cfg.context_lexicon.empty()) {
    char id[16];
    for (std::size_t k = 0; k < cfg.context_vocab; ++k) {
      std::snprintf(id, sizeof id, "ctx%03zu", k);
      cfg.context_lexicon.emplace_back(id);
    }
  }
  check_lexicons(cfg);
  return cfg;
}

Corpus gen_synthetic(const GeneratorConfig& raw_cfg, std::uint64_t seed) {
  const GeneratorConfig cfg = finalize_generator_config(raw_cfg);
  Rng rng(split_seed(seed, 0x5e));

  // Flat phrase list with Zipf-ish usage weights so some phrases are rare.
  struct PhraseRef {
    std::size_t type;
    const std::vector<std::string>* tokens;
  };
  std::vector<PhraseRef> phrases;
  std::vector<double> cumulative;
  double total = 0.0;
  for (std::size_t t = 0; t < cfg.lexicons.size(); ++t) {
    for (std::size_t k = 0; k < cfg.lexicons[t].size(); ++k) {
      phrases.push_back({t, &cfg.lexicons[t][k]});
      total += 1.0 / std::pow(static_cast<double>(k + 1), cfg.zipf_exponent);
      cumulative.push_back(total);
    }
  }
  auto draw_phrase = [&]() -> const PhraseRef& {
    const double u = rng.uniform() * total;
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    const std::size_t idx =
        std::min(static_cast<std::size_t>(it - cumulative.begin()),
                 phrases.size() - 1);
    return phrases[idx];
  };

  Corpus corpus;
  corpus.labels = cfg.type_names;
  std::sort(corpus.labels.begin(), corpus.labels.end());
  corpus.sentences.reserve(cfg.sentence_count);

  for (std::size_t si = 0; si < cfg.sentence_count; ++si) {
    const int n = static_cast<int>(
        rng.range(static_cast<std::uint64_t>(cfg.min_len),
                  static_cast<std::uint64_t>(cfg.max_len)));
    int want = cfg.min_entities == cfg.max_entities
                   ? cfg.min_entities
                   : static_cast<int>(rng.range(
                         static_cast<std::uint64_t>(cfg.min_entities),
                         static_cast<std::uint64_t>(cfg.max_entities)));

    // Pick phrases until they fit into n tokens.
    std::vector<PhraseRef> chosen;
    int entity_tokens = 0;
    for (int e = 0; e < want; ++e) {
      const PhraseRef& p = draw_phrase();
      const int len = static_cast<int>(p.tokens->size());
      if (entity_tokens + len > n) break;
      chosen.push_back(p);
      entity_tokens += len;
    }

    // Distribute the leftover context tokens over the gaps around phrases.
    const int slack = n - entity_tokens;
    const std::size_t gaps = chosen.size() + 1;
    std::vector<int> gap_len(gaps, 0);
    for (int k = 0; k < slack; ++k) {
      gap_len[static_cast<std::size_t>(rng.index(gaps))]++;
    }

    AnnotatedSentence s;
    auto emit_context = [&](int count) {
      for (int k = 0; k < count; ++k) {
        s.sentence.tokens.push_back(
            cfg.context_lexicon[rng.index(cfg.context_lexicon.size())]);
      }
    };
    for (std::size_t e = 0; e < chosen.size(); ++e) {
      emit_context(gap_len[e]);
      const int start = s.sentence.length() + 1;
      for (const auto& tok : *chosen[e].tokens) {
        s.sentence.tokens.push_back(tok);
      }
      s.gold.insert({start, s.sentence.length(), cfg.type_names[chosen[e].type]});
    }
    emit_context(gap_len[chosen.size()]);
    s.validate();
    corpus.sentences.push_back(std::move(s));
  }
  return corpus;
}

}  // namespace negspan
