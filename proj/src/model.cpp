#include "negspan/model.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "negspan/errors.hpp"

namespace negspan {

namespace {

constexpr const char* kHeader = "negspan-ckpt v1";

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_checkpoint(const ModelBundle& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write checkpoint: " + path);
  out << kHeader << '\n';
  for (std::size_t i = 0; i < model.vocab.size(); ++i) {
    out << "vocab\t" << model.vocab.tokens()[i] << '\t' << i << '\n';
  }
  for (std::size_t i = 0; i < model.labels.size(); ++i) {
    out << "label\t" << model.labels[i] << '\t' << i << '\n';
  }
  for (const auto& entry : model.params.entries()) {
    out << entry.name << '\t' << entry.value.rows() << ','
        << entry.value.cols() << '\t';
    for (std::size_t k = 0; k < entry.value.size(); ++k) {
      if (k) out << ' ';
      out << format_value(entry.value[k]);
    }
    out << '\n';
  }
  if (!out) throw LoadError("write failure on checkpoint: " + path);
}

ModelBundle load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw LoadError("bad checkpoint header in " + path);
  }

  ModelBundle model;
  std::vector<std::string> vocab_tokens;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string head;
    std::getline(fields, head, '\t');
    if (head == "vocab" || head == "label") {
      std::string token, index_text;
      if (!std::getline(fields, token, '\t') ||
          !std::getline(fields, index_text)) {
        throw LoadError("checkpoint line " + std::to_string(lineno) +
                        ": malformed " + head + " entry");
      }
      const std::size_t index = std::stoul(index_text);
      auto& list = head == "vocab" ? vocab_tokens : model.labels;
      if (index != list.size()) {
        throw LoadError("checkpoint line " + std::to_string(lineno) + ": " +
                        head + " indices out of order");
      }
      list.push_back(token);
      continue;
    }
    std::string shape_text, values_text;
    if (!std::getline(fields, shape_text, '\t') ||
        !std::getline(fields, values_text)) {
      throw LoadError("checkpoint line " + std::to_string(lineno) +
                      ": malformed parameter entry");
    }
    const auto comma = shape_text.find(',');
    if (comma == std::string::npos) {
      throw LoadError("checkpoint line " + std::to_string(lineno) +
                      ": malformed shape " + shape_text);
    }
    const std::size_t rows = std::stoul(shape_text.substr(0, comma));
    const std::size_t cols = std::stoul(shape_text.substr(comma + 1));
    Tensor t(rows, cols);
    std::istringstream values(values_text);
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (!(values >> t[k])) {
        throw LoadError("checkpoint line " + std::to_string(lineno) +
                        ": expected " + std::to_string(t.size()) +
                        " values for " + head);
      }
    }
    double extra;
    if (values >> extra) {
      throw LoadError("checkpoint line " + std::to_string(lineno) +
                      ": too many values for " + head);
    }
    model.params.add(head, std::move(t));
  }

  if (vocab_tokens.empty() || vocab_tokens[0] != Vocabulary::kUnknown) {
    throw LoadError("checkpoint lacks a vocabulary with an unknown slot");
  }
  for (std::size_t i = 1; i < vocab_tokens.size(); ++i) {
    model.vocab.add(vocab_tokens[i]);
  }
  if (model.vocab.size() != vocab_tokens.size()) {
    throw LoadError("duplicate vocabulary tokens in checkpoint");
  }

  // Dimensions are recovered from parameter shapes.
  if (!model.params.has("enc.embed") || !model.params.has("enc.fwd.uz")) {
    throw LoadError("checkpoint lacks encoder parameters");
  }
  const Tensor& embed = model.params.get("enc.embed");
  if (embed.rows() != model.vocab.size()) {
    throw LoadError("embedding rows (" + std::to_string(embed.rows()) +
                    ") do not match vocabulary size (" +
                    std::to_string(model.vocab.size()) + ")");
  }
  model.encoder.embed_dim = embed.cols();
  model.encoder.hidden_dim = 2 * model.params.get("enc.fwd.uz").rows();
  model.encoder.dropout = 0.0;  // checkpoints are for inference

  if (model.params.has("scorer.v")) {
    model.kind = ModelKind::span;
    model.scorer.scoring_dim = model.params.get("scorer.v").rows();
    model.scorer.biases = model.params.has("scorer.bv");
    if (model.params.get("scorer.u").rows() != model.labels.size() + 1) {
      throw LoadError("scorer output width does not match the label space");
    }
  } else if (model.params.has("tag.w")) {
    model.kind = ModelKind::tagger;
    if (model.params.get("tag.w").rows() != 2 * model.labels.size() + 1) {
      throw LoadError("tagger output width does not match the label space");
    }
  } else {
    throw LoadError("checkpoint lacks a model head");
  }
  return model;
}

}  // namespace negspan
