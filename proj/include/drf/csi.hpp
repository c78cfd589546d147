#pragma once

#include <span>

#include "drf/ops.hpp"

namespace drf {

// Prior moments of the fading coefficient, assumed known at the transmitter.
struct FadingPrior {
  double mean = 1.0;
  double variance = 0.0;

  // Rayleigh with average power gain Omega = 2 sigma^2:
  // E[alpha] = sigma sqrt(pi/2), var(alpha) = (2 - pi/2) sigma^2.
  static FadingPrior rayleigh(double omega);
};

// LMMSE estimate of a per-symbol fading coefficient from one delayed noisy
// observation z = alpha * x + n + m (fast fading). Degenerate denominator
// (x = 0 with a point prior and noiseless links) returns the prior mean.
double lmmse_fast(double z, double x_prev, const FadingPrior& prior,
                  double sigma_n2, double sigma_m2);

// LMMSE estimate of a codeword-constant fading coefficient from all causal
// observation pairs z[j] = alpha * x[j] + noise, noise var sigma_n2+sigma_m2
// per observation. Uses the rank-1 closed form; with no observations the
// prior mean is returned.
double lmmse_slow(std::span<const double> z, std::span<const double> x,
                  const FadingPrior& prior, double sigma_n2, double sigma_m2);

// Receiver-side LMMSE symbol compensation: y_hat = alpha y / (alpha^2 + var).
double receiver_compensate(double y, double alpha, double sigma_n2);

// In-graph variants used by the estimated-CSI encoder path; elementwise over
// (B,1) columns so gradients flow through the feedback loop.
Var lmmse_fast_var(Tape& tape, Var z, Var x_prev, const FadingPrior& prior,
                   double sigma_n2, double sigma_m2);
Var lmmse_slow_var(Tape& tape, Var sum_xz, Var sum_xx,
                   const FadingPrior& prior, double sigma_n2, double sigma_m2);

}  // namespace drf
