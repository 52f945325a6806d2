#include "negspan/tape.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace negspan {

namespace {

using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EigenRowMajor>;
using ConstMap = Eigen::Map<const EigenRowMajor>;

ConstMap view(const Tensor& t) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

Map view(Tensor& t) {
  return Map(t.data(), static_cast<Eigen::Index>(t.rows()),
             static_cast<Eigen::Index>(t.cols()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ContractViolation(std::string(op) + ": shape mismatch " +
                            a.shape_string() + " vs " + b.shape_string());
  }
}

}  // namespace

Tape::NodeId Tape::push(Tensor value, std::function<void(Tape&)> back) {
  if (!value.all_finite()) {
    throw TrainingError("non-finite values produced on the tape");
  }
  Tensor grad(value.rows(), value.cols());
  nodes_.push_back({std::move(value), std::move(grad), std::move(back)});
  return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::NodeId Tape::leaf(Tensor value) { return push(std::move(value), {}); }

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.cols() != tb.rows()) {
    throw ContractViolation("matmul: shape mismatch " + ta.shape_string() +
                            " * " + tb.shape_string());
  }
  Tensor out(ta.rows(), tb.cols());
  view(out).noalias() = view(ta) * view(tb);
  const NodeId id = push(std::move(out), {});
  nodes_[id].back = [a, b, id](Tape& t) {
    const ConstMap g = view(t.grad(id));
    view(t.grad_mut(a)).noalias() += g * view(t.value(b)).transpose();
    view(t.grad_mut(b)).noalias() += view(t.value(a)).transpose() * g;
  };
  return id;
}

Tape::NodeId Tape::transpose(NodeId a) {
  const Tensor& ta = value(a);
  Tensor out(ta.cols(), ta.rows());
  view(out) = view(ta).transpose();
  const NodeId id = push(std::move(out), {});
  nodes_[id].back = [a, id](Tape& t) {
    view(t.grad_mut(a)) += view(t.grad(id)).transpose();
  };
  return id;
}

Tape::NodeId Tape::add_row_broadcast(NodeId a, NodeId row) {
  const Tensor& ta = value(a);
  const Tensor& tr = value(row);
  if (tr.rows() != 1 || tr.cols() != ta.cols()) {
    throw ContractViolation("add_row_broadcast: " + tr.shape_string() +
                            " cannot broadcast over " + ta.shape_string());
  }
  Tensor out = ta;
  view(out).rowwise() += view(tr).row(0);
  const NodeId id = push(std::move(out), {});
  nodes_[id].back = [a, row, id](Tape& t) {
    const ConstMap g = view(t.grad(id));
    view(t.grad_mut(a)) += g;
    view(t.grad_mut(row)).row(0) += g.colwise().sum();
  };
  return id;
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  require_same_shape(value(a), value(b), "add");
  Tensor out = value(a);
  view(out) += view(value(b));
  const NodeId id = push(std::move(out), {});
  nodes_[id].back = [a, b, id](Tape& t) {
    view(t.grad_mut(a)) += view(t.grad(id));
    view(t.grad_mut(b)) += view(t.grad(id));
  };
  return id;
}

Tape::NodeId Tape::subtract(NodeId a, NodeId b) {
  require_same_shape(value(a), value(b), "subtract");
  Tensor out = value(a);
  view(out) -= view(value(b));
  const NodeId id = push(std::move(out), {});
  nodes_[id].back = [a, b, id](Tape& t) {
    view(t.grad_mut(a)) += view(t.grad(id));
    view(t.grad_mut(b)) -= view(t.grad(id));
  };
  return id;
}

Tape::NodeId Tape::multiply(NodeId a, NodeId b) {
  require_same_shape(value(a), value(b), "multiply");
  Tensor out = value(a);
  view(out).array() *= view(value(b)).array();
  const NodeId id = push(std::move(out), {});
  nodes_[id].back = [a, b, id](Tape& t) {
    const ConstMap g = view(t.grad(id));
    view(t.grad_mut(a)).array() += g.array() * view(t.value(b)).array();
    view(t.grad_mut(b)).array() += g.array() * view(t.value(a)).array();
  };
  return id;
}

Tape::NodeId Tape::concat_columns(const std::vector<NodeId>& parts) {
  if (parts.empty()) throw ContractViolation("concat_columns of nothing");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t cols = 0;
  for (NodeId p : parts) {
    if (value(p).rows() != rows) {
      throw ContractViolation("concat_columns: row count mismatch");
    }
    cols += value(p).cols();
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (NodeId p : parts) {
    const Tensor& tp = value(p);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < tp.cols(); ++c) {
        out.at(r, offset + c) = tp.at(r, c);
      }
    }
    offset += tp.cols();
  }
  const NodeId id = push(std::move(out), {});
  nodes_[id].back = [parts, id](Tape& t) {
    const Tensor& g = t.grad(id);
    std::size_t off = 0;
    for (NodeId p : parts) {
      Tensor& gp = t.grad_mut(p);
      for (std::size_t r = 0; r < gp.rows(); ++r) {
        for (std::size_t c = 0; c < gp.cols(); ++c) {
          gp.at(r, c) += g.at(r, off + c);
        }
      }
      off += gp.cols();
    }
  };
  return id;
}

Tape::NodeId Tape::concat_rows(const std::vector<NodeId>& parts) {
  if (parts.empty()) throw ContractViolation("concat_rows of nothing");
  const std::size_t cols = value(parts[0]).cols();
  std::size_t rows = 0;
  for (NodeId p : parts) {
    if (value(p).cols() != cols) {
      throw ContractViolation("concat_rows: column count mismatch");
    }
    rows += value(p).rows();
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (NodeId p : parts) {
    const Tensor& tp = value(p);
    std::copy(tp.data(), tp.data() + tp.size(), out.data() + offset * cols);
    offset += tp.rows();
  }
  const NodeId id = push(std::move(out), {});
  nodes_[id].back = [parts, id](Tape& t) {
    const Tensor& g = t.grad(id);
    std::size_t off = 0;
    for (NodeId p : parts) {
      Tensor& gp = t.grad_mut(p);
      const double* src = g.data() + off * gp.cols();
      for (std::size_t k = 0; k < gp.size(); ++k) gp[k] += src[k];
      off += gp.rows();
    }
  };
  return id;
}

Tape::NodeId Tape::tanh(NodeId x) {
  Tensor out = value(x);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::tanh(out[k]);
  const NodeId id = push(std::move(out), {});
  nodes_[id].back = [x, id](Tape& t) {
    const Tensor& y = t.value(id);
    const Tensor& g = t.grad(id);
    Tensor& gx = t.grad_mut(x);
    for (std::size_t k = 0; k < gx.size(); ++k) {
      gx[k] += g[k] * (1.0 - y[k] * y[k]);
    }
  };
  return id;
}

Tape::NodeId Tape::sigmoid(NodeId x) {
  Tensor out = value(x);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = 1.0 / (1.0 + std::exp(-out[k]));
  }
  const NodeId id = push(std::move(out), {});
  nodes_[id].back = [x, id](Tape& t) {
    const Tensor& y = t.value(id);
    const Tensor& g = t.grad(id);
    Tensor& gx = t.grad_mut(x);
    for (std::size_t k = 0; k < gx.size(); ++k) {
      gx[k] += g[k] * y[k] * (1.0 - y[k]);
    }
  };
  return id;
}

Tape::NodeId Tape::log(NodeId x) {
  Tensor out = value(x);
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!(out[k] > 0.0)) {
      throw std::domain_error("log of non-positive value " +
                              std::to_string(out[k]));
    }
    out[k] = std::log(out[k]);
  }
  const NodeId id = push(std::move(out), {});
  nodes_[id].back = [x, id](Tape& t) {
    const Tensor& in = t.value(x);
    const Tensor& g = t.grad(id);
    Tensor& gx = t.grad_mut(x);
    for (std::size_t k = 0; k < gx.size(); ++k) gx[k] += g[k] / in[k];
  };
  return id;
}

Tape::NodeId Tape::softmax_rows(NodeId x) {
  const Tensor& in = value(x);
  Tensor out(in.rows(), in.cols());
  for (std::size_t r = 0; r < in.rows(); ++r) {
    double mx = in.at(r, 0);
    for (std::size_t c = 1; c < in.cols(); ++c) mx = std::max(mx, in.at(r, c));
    double denom = 0.0;
    for (std::size_t c = 0; c < in.cols(); ++c) {
      const double e = std::exp(in.at(r, c) - mx);
      out.at(r, c) = e;
      denom += e;
    }
    for (std::size_t c = 0; c < in.cols(); ++c) out.at(r, c) /= denom;
  }
  const NodeId id = push(std::move(out), {});
  nodes_[id].back = [x, id](Tape& t) {
    const Tensor& y = t.value(id);
    const Tensor& g = t.grad(id);
    Tensor& gx = t.grad_mut(x);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += g.at(r, c) * y.at(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) {
        gx.at(r, c) += y.at(r, c) * (g.at(r, c) - dot);
      }
    }
  };
  return id;
}

Tape::NodeId Tape::embedding_lookup(NodeId table,
                                    const std::vector<std::size_t>& ids) {
  const Tensor& tab = value(table);
  if (ids.empty()) throw ContractViolation("embedding_lookup of nothing");
  Tensor out(ids.size(), tab.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= tab.rows()) {
      throw ContractViolation("embedding index " + std::to_string(ids[r]) +
                              " out of range for table " + tab.shape_string());
    }
    for (std::size_t c = 0; c < tab.cols(); ++c) {
      out.at(r, c) = tab.at(ids[r], c);
    }
  }
  const NodeId id = push(std::move(out), {});
  nodes_[id].back = [table, ids, id](Tape& t) {
    const Tensor& g = t.grad(id);
    Tensor& gt = t.grad_mut(table);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      for (std::size_t c = 0; c < gt.cols(); ++c) {
        gt.at(ids[r], c) += g.at(r, c);
      }
    }
  };
  return id;
}

Tape::NodeId Tape::dropout(NodeId x, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ArgumentError("dropout rate must lie in [0,1), got " +
                        std::to_string(rate));
  }
  if (rate == 0.0) return x;
  const Tensor& in = value(x);
  Tensor mask(in.rows(), in.cols());
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t k = 0; k < mask.size(); ++k) {
    mask[k] = rng.bernoulli(rate) ? 0.0 : keep_scale;
  }
  Tensor out = in;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= mask[k];
  const NodeId id = push(std::move(out), {});
  nodes_[id].back = [x, id, mask = std::move(mask)](Tape& t) {
    const Tensor& g = t.grad(id);
    Tensor& gx = t.grad_mut(x);
    for (std::size_t k = 0; k < gx.size(); ++k) gx[k] += g[k] * mask[k];
  };
  return id;
}

Tape::NodeId Tape::sum(NodeId x) {
  const Tensor& in = value(x);
  double total = 0.0;
  for (std::size_t k = 0; k < in.size(); ++k) total += in[k];
  const NodeId id = push(Tensor::scalar(total), {});
  nodes_[id].back = [x, id](Tape& t) {
    const double g = t.grad(id)[0];
    Tensor& gx = t.grad_mut(x);
    for (std::size_t k = 0; k < gx.size(); ++k) gx[k] += g;
  };
  return id;
}

Tape::NodeId Tape::mean(NodeId x) {
  const Tensor& in = value(x);
  double total = 0.0;
  for (std::size_t k = 0; k < in.size(); ++k) total += in[k];
  const double denom = static_cast<double>(in.size());
  const NodeId id = push(Tensor::scalar(total / denom), {});
  nodes_[id].back = [x, id, denom](Tape& t) {
    const double g = t.grad(id)[0] / denom;
    Tensor& gx = t.grad_mut(x);
    for (std::size_t k = 0; k < gx.size(); ++k) gx[k] += g;
  };
  return id;
}

Tape::NodeId Tape::pick(NodeId x, std::size_t r, std::size_t c) {
  const Tensor& in = value(x);
  if (r >= in.rows() || c >= in.cols()) {
    throw ContractViolation("pick (" + std::to_string(r) + "," +
                            std::to_string(c) + ") out of range for " +
                            in.shape_string());
  }
  const NodeId id = push(Tensor::scalar(in.at(r, c)), {});
  nodes_[id].back = [x, r, c, id](Tape& t) {
    t.grad_mut(x).at(r, c) += t.grad(id)[0];
  };
  return id;
}

Tape::NodeId Tape::scale(NodeId x, double factor) {
  Tensor out = value(x);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= factor;
  const NodeId id = push(std::move(out), {});
  nodes_[id].back = [x, id, factor](Tape& t) {
    const Tensor& g = t.grad(id);
    Tensor& gx = t.grad_mut(x);
    for (std::size_t k = 0; k < gx.size(); ++k) gx[k] += g[k] * factor;
  };
  return id;
}

void Tape::backward(NodeId loss) {
  if (loss >= nodes_.size() || !nodes_[loss].value.is_scalar()) {
    throw ContractViolation("backward requires a scalar loss node");
  }
  nodes_[loss].grad[0] = 1.0;
  for (NodeId id = loss + 1; id-- > 0;) {
    if (nodes_[id].back) nodes_[id].back(*this);
  }
}

}  // namespace negspan
