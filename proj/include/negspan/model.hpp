#ifndef NEGSPAN_MODEL_HPP
#define NEGSPAN_MODEL_HPP

#include <string>
#include <vector>

#include "negspan/encoder.hpp"
#include "negspan/params.hpp"
#include "negspan/spanscorer.hpp"

namespace negspan {

enum class ModelKind { span, tagger };

// Everything needed to run inference: encoder + head parameters, the
// vocabulary and the label space.
struct ModelBundle {
  ModelKind kind = ModelKind::span;
  Vocabulary vocab;
  std::vector<std::string> labels;
  EncoderConfig encoder;
  ScorerConfig scorer;
  ParamStore params;
};

// Versioned text checkpoint. Header `negspan-ckpt v1`, then
//   vocab<TAB>token<TAB>index
//   label<TAB>name<TAB>index
//   param-name<TAB>rows,cols<TAB>v1 v2 ...
// Values are printed with 17 significant digits so doubles round-trip
// bit-exactly.
void save_checkpoint(const ModelBundle& model, const std::string& path);
ModelBundle load_checkpoint(const std::string& path);

}  // namespace negspan

#endif  // NEGSPAN_MODEL_HPP
