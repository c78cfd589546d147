#include "drf/tape.hpp"

namespace drf {

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.is_leaf = true;
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::record(Tensor value, bool requires_grad,
                 std::function<void(Tape&, int)> backward_fn) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.is_leaf = false;
  n.backward_fn = std::move(backward_fn);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (!n.grad_alloc) {
    n.grad = Tensor::zeros(n.value.shape());
    n.grad_alloc = true;
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) {
    throw std::invalid_argument("Tape::backward: loss from another tape");
  }
  if (nodes_[loss.id].value.size() != 1) {
    throw std::invalid_argument(
        "Tape::backward: loss must be scalar, got shape " +
        nodes_[loss.id].value.shape_str());
  }
  // Interior grads restart from zero each pass; leaf grads accumulate.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].is_leaf && nodes_[i].grad_alloc) nodes_[i].grad.fill(0.0);
  }
  grad(loss.id)[0] += 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.is_leaf || !n.requires_grad || !n.grad_alloc) continue;
    n.backward_fn(*this, i);
  }
}

void Tape::clear() { nodes_.clear(); }

}  // namespace drf
