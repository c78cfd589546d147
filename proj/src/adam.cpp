#include "drf/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace drf {

void Adam::step(const std::vector<Parameter*>& params) {
  if (slots_.empty()) {
    slots_.reserve(params.size());
    for (const Parameter* p : params) {
      slots_.push_back({Tensor::zeros(p->value.shape()),
                        Tensor::zeros(p->value.shape())});
    }
  }
  if (slots_.size() != params.size()) {
    throw std::runtime_error("Adam::step: parameter list changed size");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    if (!p.grad.all_finite()) {
      throw std::runtime_error("Adam::step: non-finite gradient for '" +
                               p.name + "'");
    }
    Slot& s = slots_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      s.m[i] = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * g;
      s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = s.m[i] / bc1;
      const double vhat = s.v[i] / bc2;
      p.value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

double clip_global_norm(const std::vector<Parameter*>& params,
                        double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    for (std::size_t i = 0; i < p->grad.size(); ++i)
      sq += p->grad[i] * p->grad[i];
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (Parameter* p : params) {
      for (std::size_t i = 0; i < p->grad.size(); ++i) p->grad[i] *= s;
    }
  }
  return norm;
}

}  // namespace drf
