#include "drf/csi.hpp"

#include <cmath>
#include <stdexcept>

namespace drf {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

FadingPrior FadingPrior::rayleigh(double omega) {
  if (omega <= 0.0) {
    throw std::invalid_argument("FadingPrior::rayleigh: omega must be > 0");
  }
  const double sigma = std::sqrt(omega / 2.0);
  return {sigma * std::sqrt(kPi / 2.0), (2.0 - kPi / 2.0) * sigma * sigma};
}

double lmmse_fast(double z, double x_prev, const FadingPrior& prior,
                  double sigma_n2, double sigma_m2) {
  const double s = sigma_n2 + sigma_m2;
  const double den = x_prev * x_prev * prior.variance + s;
  if (den == 0.0) return prior.mean;
  return (x_prev * prior.variance * z + s * prior.mean) / den;
}

double lmmse_slow(std::span<const double> z, std::span<const double> x,
                  const FadingPrior& prior, double sigma_n2, double sigma_m2) {
  if (z.size() != x.size()) {
    throw std::invalid_argument("lmmse_slow: observation vectors must align");
  }
  if (z.empty()) return prior.mean;
  double sum_xz = 0.0, sum_xx = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    sum_xz += x[j] * z[j];
    sum_xx += x[j] * x[j];
  }
  const double s = sigma_n2 + sigma_m2;
  const double den = s + prior.variance * sum_xx;
  if (den == 0.0) return prior.mean;
  return (prior.mean * s + prior.variance * sum_xz) / den;
}

double receiver_compensate(double y, double alpha, double sigma_n2) {
  const double den = alpha * alpha + sigma_n2;
  if (den == 0.0) return 0.0;
  return alpha * y / den;
}

Var lmmse_fast_var(Tape& tape, Var z, Var x_prev, const FadingPrior& prior,
                   double sigma_n2, double sigma_m2) {
  const double s = sigma_n2 + sigma_m2;
  // (var x z + s E) / (var x^2 + s)
  Var num = add_const(scale(mul(x_prev, z), prior.variance), s * prior.mean);
  Var den = add_const(scale(square(x_prev), prior.variance), s);
  (void)tape;
  return div(num, den);
}

Var lmmse_slow_var(Tape& tape, Var sum_xz, Var sum_xx,
                   const FadingPrior& prior, double sigma_n2,
                   double sigma_m2) {
  const double s = sigma_n2 + sigma_m2;
  Var num = add_const(scale(sum_xz, prior.variance), s * prior.mean);
  Var den = add_const(scale(sum_xx, prior.variance), s);
  (void)tape;
  return div(num, den);
}

}  // namespace drf
