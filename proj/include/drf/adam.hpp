#pragma once

#include <cstdint>
#include <vector>

#include "drf/param.hpp"

namespace drf {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment slots are keyed by position in the
// parameter list, which therefore must be stable across steps.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // One update from the parameters' accumulated grads. Throws
  // std::runtime_error naming the parameter on a non-finite gradient.
  void step(const std::vector<Parameter*>& params);

  std::uint64_t steps_taken() const { return t_; }
  AdamConfig& config() { return cfg_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  struct Slot {
    Tensor m, v;
  };
  AdamConfig cfg_;
  std::vector<Slot> slots_;
  std::uint64_t t_ = 0;
};

// Scales gradients in place so their global L2 norm is at most max_norm.
// Returns the pre-clip norm.
double clip_global_norm(const std::vector<Parameter*>& params,
                        double max_norm);

}  // namespace drf
