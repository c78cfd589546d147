#pragma once

#include "drf/model.hpp"

namespace drf {

// Binomial point estimate with a 95% normal-approximation interval.
struct ErrorEstimate {
  double ber = 0.0;
  double bler = 0.0;
  double ber_ci95 = 0.0;
  double bler_ci95 = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t bit_errors = 0;
  std::uint64_t block_errors = 0;
  // Set when the sample cap was reached before min_events block errors were
  // observed; the point estimate is then a desk-scale upper bound.
  bool censored = false;
};

struct EvalOptions {
  std::uint64_t sample_cap = 1'000'000;
  std::uint64_t min_events = 100;
  std::size_t shard_size = 512;
  std::size_t threads = 1;
  std::uint64_t seed = 1;
  RunFlags flags;  // eval-mode switches (attention override, rcsi, ...)
};

ErrorEstimate estimate_from_counts(const ErrorCounts& counts,
                                   std::uint64_t min_events, bool at_cap);

// Streams seeded sample shards through encoder -> channel -> decoder ->
// hard decision until min_events block errors are seen or the cap is hit.
// Shard seeds derive from (seed, shard index): results are independent of
// the thread count and bit-identical per seed.
ErrorEstimate estimate_error(DrfModel& model, const ChannelSpec& spec,
                             const EvalOptions& opts);

// Two-user joint evaluation on a common sample stream.
std::pair<ErrorEstimate, ErrorEstimate> multicast_eval(
    DrfModel& model, const ChannelSpec& spec, const EvalOptions& opts);

// SE = K (1 - BLER) / L
double spectral_efficiency(std::size_t K, std::size_t L, double bler);

// Gaussian tail probability Q(x); closed-form reference for the uncoded
// baseline.
double qfunc(double x);

// Uncoded antipodal transmission at the given forward SNR: Monte-Carlo BER
// over n symbols (threshold at 0) for comparison against Q(1/sigma).
ErrorEstimate uncoded_baseline(double snr_db, std::uint64_t n,
                               std::uint64_t seed);

struct SweepPoint {
  double rho_db = 0.0;    // actual channel SNR
  double delta_db = 0.0;  // mismatch: rho - rho_hat
  ErrorEstimate est;
};

// SNR-mismatch sweep: the channel runs at rho while the decoder attention is
// fed the variances of rho_hat = rho - delta. Feedback SNR is matched.
std::vector<SweepPoint> mismatch_sweep(DrfModel& model,
                                       const std::vector<double>& rhos_db,
                                       const std::vector<double>& deltas_db,
                                       Snr feedback, const EvalOptions& opts);

}  // namespace drf
