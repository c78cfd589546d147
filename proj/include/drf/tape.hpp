#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "drf/tensor.hpp"

namespace drf {

class Tape;

// Lightweight handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  bool valid() const { return tape != nullptr && id >= 0; }
};

// Thrown by primitive ops on incompatible operand shapes; carries the name
// of the operation that rejected them.
class ShapeError : public std::invalid_argument {
 public:
  ShapeError(const std::string& op, const std::string& detail)
      : std::invalid_argument(op + ": " + detail), op_(op) {}
  const std::string& op() const { return op_; }

 private:
  std::string op_;
};

// Reverse-mode tape. Operations append nodes in topological order (inputs
// always precede their consumers); backward() visits them in exact reverse
// recording order. One tape per forward/backward graph; not thread-safe,
// independent tapes may run concurrently.
class Tape {
 public:
  struct Node {
    Tensor value;
    Tensor grad;
    bool grad_alloc = false;
    bool requires_grad = false;
    bool is_leaf = true;
    // Adds this node's grad contribution into its parents' grads.
    std::function<void(Tape&, int)> backward_fn;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Record a leaf. Parameters set requires_grad; recorded constants
  // (noise draws, channel gains, inputs) do not.
  Var leaf(Tensor value, bool requires_grad = false);
  Var constant(Tensor value) { return leaf(std::move(value), false); }
  Var constant_scalar(double v) { return leaf(Tensor::scalar(v), false); }

  // Record an interior node produced by an op.
  Var record(Tensor value, bool requires_grad,
             std::function<void(Tape&, int)> backward_fn);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  const Tensor& value(int id) const { return nodes_[id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  // Gradient buffer, allocated (zeroed) on first access.
  Tensor& grad(Var v) { return grad(v.id); }
  Tensor& grad(int id);
  bool grad_allocated(Var v) const { return nodes_[v.id].grad_alloc; }

  // Reverse pass from a scalar loss. Interior gradients are recomputed from
  // scratch each call; leaf gradients accumulate across calls.
  void backward(Var loss);

  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
};

}  // namespace drf
