#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "drf/rng.hpp"
#include "drf/tensor.hpp"

namespace drf {

enum class FadingMode { Awgn, SlowRayleigh, FastRayleigh };

std::string fading_mode_name(FadingMode m);
FadingMode fading_mode_from_name(const std::string& s);

// SNR in dB, or exactly noiseless. Noiseless is represented as variance 0,
// not as a large SNR, so pass-through behaviour is exact.
class Snr {
 public:
  static Snr from_db(double db) { return Snr(db, false); }
  static Snr noiseless() { return Snr(0.0, true); }

  bool is_noiseless() const { return noiseless_; }
  double db() const;
  double variance() const;
  std::string str() const;
  static Snr parse(const std::string& s);  // "12.5" or "inf"/"noiseless"

  bool operator==(const Snr&) const = default;

 private:
  Snr(double db, bool n) : db_(db), noiseless_(n) {}
  double db_;
  bool noiseless_;
};

// variance = 10^(-snr_db / 10)
double snr_db_to_variance(double snr_db);
double variance_to_snr_db(double variance);

// Two-receiver multicast extension: AWGN forward channels with jointly
// Gaussian noise (correlation epsilon), independent feedback links.
struct MulticastSpec {
  double rho1_db = 0.0;
  double rho2_db = 0.0;
  Snr eta1 = Snr::noiseless();
  Snr eta2 = Snr::noiseless();
  double epsilon = 0.0;
};

// One experiment's stochastic environment.
struct ChannelSpec {
  double forward_snr_db = 0.0;
  Snr feedback = Snr::noiseless();
  FadingMode fading = FadingMode::Awgn;
  double rayleigh_omega = 1.0;  // average power gain, Omega = 2 sigma^2
  std::optional<MulticastSpec> multicast;

  double forward_noise_var() const { return snr_db_to_variance(forward_snr_db); }
  double feedback_noise_var() const { return feedback.variance(); }
  double rayleigh_sigma() const;
  void validate() const;  // throws std::invalid_argument
};

// One training/eval realization. Fading and forward noise are indexed by
// codeword position 1..L; feedback noise by feedback use (one per forward
// transmission, in emission order).
struct Sample {
  std::vector<std::uint8_t> bits;      // K message bits
  std::vector<double> fading;          // L (all ones for AWGN)
  std::vector<double> forward_noise;   // L
  std::vector<double> feedback_noise;  // L
  // Multicast only: second receiver's noises.
  std::vector<double> forward_noise2;
  std::vector<double> feedback_noise2;
};

inline std::size_t block_length(std::size_t K) { return 3 * K + 3; }

// y_i = alpha_i * x_i + n_i
double forward_channel(double x, double alpha, double n);

// z_i = y_{i-1} + m_i; the first feedback use has no prior output (z_1 = m_1).
double feedback_channel(double y_prev, double m);

// Inverse-CDF Rayleigh draw, alpha = sigma * sqrt(-2 ln u).
double sample_rayleigh(double sigma, Rng& rng);

// Jointly Gaussian pair: n1 = s1*g1, n2 = s2*(eps*g1 + sqrt(1-eps^2)*g2).
std::pair<double, double> sample_correlated_noise(double sigma1, double sigma2,
                                                  double epsilon, Rng& rng);

// Fully determined by (experiment seed, epoch, index): regeneration is
// bit-exact and distinct indices give independent streams.
Sample make_sample(const ChannelSpec& spec, std::size_t K,
                   std::uint64_t experiment_seed, std::uint64_t epoch,
                   std::uint64_t index);

// Lazily generated i.i.d. dataset; samples are materialized on demand.
class Dataset {
 public:
  Dataset(ChannelSpec spec, std::size_t K, std::size_t count,
          std::uint64_t seed, std::uint64_t epoch);

  std::size_t size() const { return count_; }
  std::size_t message_length() const { return K_; }
  const ChannelSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t epoch() const { return epoch_; }
  Sample at(std::size_t index) const;

 private:
  ChannelSpec spec_;
  std::size_t K_;
  std::size_t count_;
  std::uint64_t seed_;
  std::uint64_t epoch_;
};

Dataset generate_dataset(const ChannelSpec& spec, std::size_t K,
                         std::size_t count, std::uint64_t seed,
                         std::uint64_t epoch = 0);

// Batch of samples packed as (B, .) tensors for the pipeline.
struct SampleBatch {
  ChannelSpec spec;
  std::size_t K = 0;
  Tensor bits;            // (B, K) of 0/1
  Tensor fading;          // (B, L)
  Tensor forward_noise;   // (B, L)
  Tensor feedback_noise;  // (B, L)
  Tensor forward_noise2;  // multicast
  Tensor feedback_noise2;

  std::size_t batch_size() const { return bits.rows(); }
};

SampleBatch pack_batch(const ChannelSpec& spec, std::size_t K,
                       const std::vector<Sample>& samples);
SampleBatch batch_from_dataset(const Dataset& ds, std::size_t lo,
                               std::size_t hi);

// Binary record dump for cross-implementation regression. Header carries
// {K, L, mode, seed}; samples follow packed in generation order.
void dump_dataset(const std::string& path, const Dataset& ds);
std::vector<Sample> read_dataset_dump(const std::string& path,
                                      std::size_t& K_out,
                                      std::string& mode_out,
                                      std::uint64_t& seed_out);

}  // namespace drf
