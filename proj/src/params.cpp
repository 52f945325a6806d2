#include "negspan/params.hpp"

#include <cmath>

#include "negspan/errors.hpp"

namespace negspan {

Tensor& ParamStore::add(const std::string& name, Tensor init) {
  if (index_.count(name)) {
    throw ContractViolation("duplicate parameter name: " + name);
  }
  index_[name] = entries_.size();
  Tensor m(init.rows(), init.cols());
  Tensor v(init.rows(), init.cols());
  entries_.push_back({name, std::move(init), std::move(m), std::move(v)});
  return entries_.back().value;
}

Tensor& ParamStore::add_uniform(const std::string& name, std::size_t rows,
                                std::size_t cols, Rng& rng,
                                double half_width) {
  Tensor t(rows, cols);
  for (std::size_t k = 0; k < t.size(); ++k) {
    t[k] = rng.uniform(-half_width, half_width);
  }
  return add(name, std::move(t));
}

bool ParamStore::has(const std::string& name) const {
  return index_.count(name) > 0;
}

Tensor& ParamStore::get(const std::string& name) {
  const auto it = index_.find(name);
  if (it == index_.end()) {
    throw ContractViolation("unknown parameter: " + name);
  }
  return entries_[it->second].value;
}

const Tensor& ParamStore::get(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) {
    throw ContractViolation("unknown parameter: " + name);
  }
  return entries_[it->second].value;
}

void adam_step(ParamStore& store,
               const std::unordered_map<std::string, const Tensor*>& grads,
               const AdamConfig& cfg) {
  store.bump_step();
  const double t = static_cast<double>(store.step_count());
  const double m_corr = 1.0 - std::pow(cfg.beta1, t);
  const double v_corr = 1.0 - std::pow(cfg.beta2, t);

  for (auto& entry : store.entries()) {
    const Tensor* grad = nullptr;
    if (const auto it = grads.find(entry.name); it != grads.end()) {
      grad = it->second;
      if (!grad->same_shape(entry.value)) {
        throw ContractViolation("gradient shape " + grad->shape_string() +
                                " does not match parameter " + entry.name);
      }
    }
    for (std::size_t k = 0; k < entry.value.size(); ++k) {
      double g = grad ? (*grad)[k] : 0.0;
      if (!std::isfinite(g)) {
        throw TrainingError("non-finite gradient for parameter " + entry.name);
      }
      g += cfg.weight_decay * entry.value[k];
      entry.m[k] = cfg.beta1 * entry.m[k] + (1.0 - cfg.beta1) * g;
      entry.v[k] = cfg.beta2 * entry.v[k] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = entry.m[k] / m_corr;
      const double v_hat = entry.v[k] / v_corr;
      entry.value[k] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

}  // namespace negspan
