#pragma once

#include <string>
#include <vector>

#include "drf/tape.hpp"

namespace drf {

// A trainable tensor with a persistent gradient accumulator. Parameters are
// immutable snapshots during a forward/backward pass; the optimizer is the
// single writer.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(0.0); }
};

// Records parameters on a tape for one pass and pulls gradients back out
// after backward(). Binding order is the accumulation order (deterministic).
class Binder {
 public:
  explicit Binder(Tape& tape) : tape_(tape) {}

  Var bind(Parameter& p) {
    Var v = tape_.leaf(p.value, true);
    bound_.push_back({&p, v});
    return v;
  }

  // p.grad += d(loss)/d(p) for every bound parameter that received gradient.
  void accumulate_grads() {
    for (auto& [p, v] : bound_) {
      if (!tape_.grad_allocated(v)) continue;
      const Tensor& g = tape_.grad(v);
      for (std::size_t i = 0; i < g.size(); ++i) p->grad[i] += g[i];
    }
  }

 private:
  Tape& tape_;
  std::vector<std::pair<Parameter*, Var>> bound_;
};

}  // namespace drf
