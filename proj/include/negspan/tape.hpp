#ifndef NEGSPAN_TAPE_HPP
#define NEGSPAN_TAPE_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "negspan/rng.hpp"
#include "negspan/tensor.hpp"

namespace negspan {

// Reverse-mode differentiation record. Nodes are appended in forward order;
// backward() walks them in reverse creation order, accumulating gradients
// additively. One tape serves one forward/backward pass and is then discarded.
class Tape {
 public:
  using NodeId = std::uint32_t;

  // Leaf holding an (input or parameter) value.
  NodeId leaf(Tensor value);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  const Tensor& grad(NodeId id) const { return nodes_[id].grad; }
  std::size_t size() const { return nodes_.size(); }

  NodeId matmul(NodeId a, NodeId b);
  NodeId transpose(NodeId a);
  NodeId add(NodeId a, NodeId b);
  NodeId add_row_broadcast(NodeId a, NodeId row);  // row added to every row of a
  NodeId subtract(NodeId a, NodeId b);
  NodeId multiply(NodeId a, NodeId b);  // elementwise
  NodeId concat_columns(const std::vector<NodeId>& parts);
  NodeId concat_rows(const std::vector<NodeId>& parts);
  NodeId tanh(NodeId x);
  NodeId sigmoid(NodeId x);
  NodeId log(NodeId x);  // domain error on non-positive entries
  NodeId softmax_rows(NodeId x);
  NodeId embedding_lookup(NodeId table, const std::vector<std::size_t>& ids);
  NodeId dropout(NodeId x, double rate, Rng& rng);  // inverted dropout
  NodeId sum(NodeId x);
  NodeId mean(NodeId x);
  NodeId pick(NodeId x, std::size_t r, std::size_t c);
  NodeId scale(NodeId x, double factor);

  // Seeds the scalar loss gradient with 1 and sweeps the tape backwards.
  void backward(NodeId loss);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&)> back;  // empty for leaves
  };

  NodeId push(Tensor value, std::function<void(Tape&)> back);
  Tensor& grad_mut(NodeId id) { return nodes_[id].grad; }

  std::vector<Node> nodes_;
};

}  // namespace negspan

#endif  // NEGSPAN_TAPE_HPP
