#ifndef NEGSPAN_PARAMS_HPP
#define NEGSPAN_PARAMS_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "negspan/rng.hpp"
#include "negspan/tensor.hpp"

namespace negspan {

// Named parameter tensors with stable iteration order and per-parameter Adam
// moments. The optimizer step count is shared across all parameters.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor m;  // first moment
    Tensor v;  // second moment
  };

  Tensor& add(const std::string& name, Tensor init);
  Tensor& add_uniform(const std::string& name, std::size_t rows,
                      std::size_t cols, Rng& rng, double half_width = 0.1);

  bool has(const std::string& name) const;
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::uint64_t step_count() const { return step_count_; }
  void bump_step() { ++step_count_; }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t step_count_ = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // L2 term added to gradients
};

// One Adam update over the whole store. `grads` maps parameter name to a
// gradient of the same shape; an absent entry means a zero gradient. Throws
// TrainingError on non-finite gradients, naming the parameter.
void adam_step(ParamStore& store,
               const std::unordered_map<std::string, const Tensor*>& grads,
               const AdamConfig& cfg);

}  // namespace negspan

#endif  // NEGSPAN_PARAMS_HPP
