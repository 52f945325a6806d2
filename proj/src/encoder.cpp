#include "negspan/encoder.hpp"

#include <fstream>
#include <sstream>

#include "negspan/errors.hpp"

namespace negspan {

Vocabulary::Vocabulary() { add(kUnknown); }

Vocabulary Vocabulary::build(const Corpus& corpus) {
  Vocabulary vocab;
  for (const auto& s : corpus.sentences) {
    for (const auto& tok : s.sentence.tokens) vocab.add(tok);
  }
  return vocab;
}

std::size_t Vocabulary::add(const std::string& token) {
  const auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const std::size_t id = tokens_.size();
  tokens_.push_back(token);
  index_[token] = id;
  return id;
}

std::size_t Vocabulary::lookup(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? 0 : it->second;
}

void EncoderConfig::validate() const {
  if (embed_dim < 1) throw ArgumentError("embed_dim must be at least 1");
  if (hidden_dim < 2 || hidden_dim % 2 != 0) {
    throw ArgumentError("hidden_dim must be even and at least 2");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ArgumentError("dropout must lie in [0,1)");
  }
}

Tape::NodeId ParamBinding::operator[](const std::string& name) {
  const auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  const Tape::NodeId id = tape_->leaf(store_->get(name));
  bound_[name] = id;
  return id;
}

std::unordered_map<std::string, const Tensor*> ParamBinding::grads() const {
  std::unordered_map<std::string, const Tensor*> out;
  for (const auto& [name, id] : bound_) {
    out[name] = &tape_->grad(id);
  }
  return out;
}

namespace {

const char* kGateNames[] = {"wz", "uz", "bz", "wr", "ur", "br",
                            "wh", "uh", "bh"};

void init_direction(ParamStore& store, const std::string& prefix,
                    std::size_t embed_dim, std::size_t half, Rng& rng) {
  store.add_uniform(prefix + ".wz", embed_dim, half, rng);
  store.add_uniform(prefix + ".uz", half, half, rng);
  store.add_uniform(prefix + ".bz", 1, half, rng);
  store.add_uniform(prefix + ".wr", embed_dim, half, rng);
  store.add_uniform(prefix + ".ur", half, half, rng);
  store.add_uniform(prefix + ".br", 1, half, rng);
  store.add_uniform(prefix + ".wh", embed_dim, half, rng);
  store.add_uniform(prefix + ".uh", half, half, rng);
  store.add_uniform(prefix + ".bh", 1, half, rng);
}

struct GateIds {
  Tape::NodeId wz, uz, bz, wr, ur, br, wh, uh, bh;
};

GateIds bind_direction(ParamBinding& params, const std::string& prefix) {
  return {params[prefix + ".wz"], params[prefix + ".uz"],
          params[prefix + ".bz"], params[prefix + ".wr"],
          params[prefix + ".ur"], params[prefix + ".br"],
          params[prefix + ".wh"], params[prefix + ".uh"],
          params[prefix + ".bh"]};
}

// h' = h + z (hcand - h), gated recurrent step over row vectors.
Tape::NodeId gru_step(Tape& t, const GateIds& g, Tape::NodeId x,
                      Tape::NodeId h) {
  const auto z = t.sigmoid(
      t.add(t.add(t.matmul(x, g.wz), t.matmul(h, g.uz)), g.bz));
  const auto r = t.sigmoid(
      t.add(t.add(t.matmul(x, g.wr), t.matmul(h, g.ur)), g.br));
  const auto hcand = t.tanh(
      t.add(t.add(t.matmul(x, g.wh), t.matmul(t.multiply(r, h), g.uh)), g.bh));
  return t.add(h, t.multiply(z, t.subtract(hcand, h)));
}

}  // namespace

void init_encoder_params(ParamStore& store, const EncoderConfig& cfg,
                         std::size_t vocab_size, Rng& rng) {
  cfg.validate();
  const std::size_t half = cfg.hidden_dim / 2;
  store.add_uniform("enc.embed", vocab_size, cfg.embed_dim, rng);
  init_direction(store, "enc.fwd", cfg.embed_dim, half, rng);
  init_direction(store, "enc.bwd", cfg.embed_dim, half, rng);
}

std::vector<Tape::NodeId> encode(Tape& tape, ParamBinding& params,
                                 const EncoderConfig& cfg,
                                 const Vocabulary& vocab, const Sentence& x,
                                 Mode mode, Rng* dropout_rng) {
  cfg.validate();
  const int n = x.length();
  if (n < 1) throw ContractViolation("encode requires a non-empty sentence");
  const bool use_dropout = mode == Mode::train && cfg.dropout > 0.0;
  if (use_dropout && dropout_rng == nullptr) {
    throw ContractViolation("train-mode encode needs a dropout rng");
  }

  const Tape::NodeId embed = params["enc.embed"];
  std::vector<Tape::NodeId> inputs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::size_t id = vocab.lookup(x.tokens[static_cast<std::size_t>(i)]);
    Tape::NodeId e = tape.embedding_lookup(embed, {id});
    if (use_dropout) e = tape.dropout(e, cfg.dropout, *dropout_rng);
    inputs[static_cast<std::size_t>(i)] = e;
  }

  const std::size_t half = cfg.hidden_dim / 2;
  const GateIds fwd = bind_direction(params, "enc.fwd");
  const GateIds bwd = bind_direction(params, "enc.bwd");

  std::vector<Tape::NodeId> fwd_states(static_cast<std::size_t>(n));
  Tape::NodeId h = tape.leaf(Tensor(1, half));
  for (int i = 0; i < n; ++i) {
    h = gru_step(tape, fwd, inputs[static_cast<std::size_t>(i)], h);
    fwd_states[static_cast<std::size_t>(i)] = h;
  }

  std::vector<Tape::NodeId> bwd_states(static_cast<std::size_t>(n));
  h = tape.leaf(Tensor(1, half));
  for (int i = n - 1; i >= 0; --i) {
    h = gru_step(tape, bwd, inputs[static_cast<std::size_t>(i)], h);
    bwd_states[static_cast<std::size_t>(i)] = h;
  }

  std::vector<Tape::NodeId> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Tape::NodeId hi = tape.concat_columns(
        {fwd_states[static_cast<std::size_t>(i)],
         bwd_states[static_cast<std::size_t>(i)]});
    if (use_dropout) hi = tape.dropout(hi, cfg.dropout, *dropout_rng);
    out[static_cast<std::size_t>(i)] = hi;
  }
  return out;
}

std::size_t load_pretrained_embeddings(const std::string& path,
                                       const Vocabulary& vocab,
                                       Tensor& embedding) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open embedding file: " + path);
  const std::size_t dim = embedding.cols();
  std::string line;
  std::size_t lineno = 0;
  std::size_t loaded = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    std::vector<double> values;
    double v = 0.0;
    while (fields >> v) values.push_back(v);
    if (token.empty() || values.size() != dim) {
      throw ParseError("embedding line " + std::to_string(lineno) +
                       ": expected token plus " + std::to_string(dim) +
                       " values, got " + std::to_string(values.size()));
    }
    const std::size_t row = vocab.lookup(token);
    if (row == 0 && token != Vocabulary::kUnknown) continue;
    for (std::size_t c = 0; c < dim; ++c) embedding.at(row, c) = values[c];
    ++loaded;
  }
  return loaded;
}

}  // namespace negspan
