#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "dwsnn/tensor.hpp"

namespace dwsnn {

struct NodeId {
  int v = -1;
  bool valid() const { return v >= 0; }
};

// Reverse-mode tape over an unrolled computation graph. Nodes are created in
// topological order (parents before children), so backward() is a single
// reverse sweep that visits each reached node exactly once. Graphs are
// rebuilt per batch; node values are never mutated after the forward pass.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int node)>;

  Graph();

  NodeId leaf(Tensor value, bool requires_grad = false);

  NodeId matmul(NodeId a, NodeId b);
  NodeId add_bias(NodeId x, NodeId bias);  // [N x F] + [F] row broadcast
  NodeId add(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId x, double c);
  NodeId add_scalar(NodeId x, double c);
  NodeId axpby(double alpha, NodeId x, double beta, NodeId y);
  NodeId sum(NodeId x);  // scalar
  NodeId slice_rows(NodeId x, std::size_t row_begin, std::size_t row_end);
  NodeId concat_rows(const std::vector<NodeId>& xs);

  // Elementwise max over the leading time axis of a [(T*B) x C] stack;
  // returns [B x C]. Ties resolve to the earliest timestep, and backward
  // routes the upstream gradient only to the argmax slice.
  NodeId max_over_time(NodeId stacked, std::size_t timesteps,
                       std::size_t batch);

  // Mean over the batch of -log softmax(logits)[label]; max-stabilized.
  NodeId softmax_cross_entropy(NodeId logits, const std::vector<int>& labels);

  // Normalizes over the row axis with batch statistics (rows pool batch and
  // time), applies gamma/beta and updates the running statistics in place.
  // Inference mode uses the running statistics only.
  NodeId batchnorm_train(NodeId x, NodeId gamma, NodeId beta,
                         Tensor& running_mean, Tensor& running_var,
                         double momentum, double epsilon);
  NodeId batchnorm_infer(NodeId x, NodeId gamma, NodeId beta,
                         const Tensor& running_mean, const Tensor& running_var,
                         double epsilon);

  // Escape hatch for the neuron models: a node with a caller-supplied
  // backward rule.
  NodeId custom(Tensor value, std::vector<int> parents, BackwardFn fn);

  // Seeds the root gradient with 1 and sweeps the tape in reverse order.
  // The root must be scalar.
  void backward(NodeId root);

  const Tensor& value(NodeId id) const;
  bool has_grad(NodeId id) const;
  // Gradient accumulated at `id`; zeros-shaped-like-value when unreached.
  Tensor grad(NodeId id) const;
  const Tensor* grad_ptr(NodeId id) const;  // nullptr when unreached
  Tensor& grad_buffer(int node);            // lazily allocated accumulator
  bool needs_grad(int node) const;

  std::size_t node_count() const { return nodes_.size(); }

  // When enabled, every op validates that its output is finite. Used by the
  // test suites; training always validates at the loss node.
  static void set_strict_finite(bool on);
  static bool strict_finite();

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // empty until reached by backward
    std::vector<int> parents;
    BackwardFn backward;
    bool requires_grad = false;
  };

  int push(Tensor value, std::vector<int> parents, BackwardFn fn);
  const Node& node(NodeId id) const;

  std::vector<Node> nodes_;
};

}  // namespace dwsnn
