#include "drf/channel.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace drf {

std::string fading_mode_name(FadingMode m) {
  switch (m) {
    case FadingMode::Awgn: return "awgn";
    case FadingMode::SlowRayleigh: return "slow_rayleigh";
    case FadingMode::FastRayleigh: return "fast_rayleigh";
  }
  return "awgn";
}

FadingMode fading_mode_from_name(const std::string& s) {
  if (s == "awgn") return FadingMode::Awgn;
  if (s == "slow_rayleigh" || s == "slow") return FadingMode::SlowRayleigh;
  if (s == "fast_rayleigh" || s == "fast") return FadingMode::FastRayleigh;
  throw std::invalid_argument("unknown fading mode '" + s + "'");
}

double Snr::db() const {
  if (noiseless_) {
    throw std::logic_error("Snr::db on noiseless sentinel");
  }
  return db_;
}

double Snr::variance() const {
  return noiseless_ ? 0.0 : snr_db_to_variance(db_);
}

std::string Snr::str() const {
  return noiseless_ ? "inf" : std::to_string(db_);
}

Snr Snr::parse(const std::string& s) {
  if (s == "inf" || s == "noiseless" || s == "none") return Snr::noiseless();
  return Snr::from_db(std::stod(s));
}

double snr_db_to_variance(double snr_db) {
  return std::pow(10.0, -snr_db / 10.0);
}

double variance_to_snr_db(double variance) {
  if (variance <= 0.0) {
    throw std::invalid_argument("variance_to_snr_db: variance must be > 0");
  }
  return -10.0 * std::log10(variance);
}

double ChannelSpec::rayleigh_sigma() const {
  return std::sqrt(rayleigh_omega / 2.0);
}

void ChannelSpec::validate() const {
  if (!std::isfinite(forward_snr_db)) {
    throw std::invalid_argument("ChannelSpec: forward SNR must be finite");
  }
  if (fading != FadingMode::Awgn && rayleigh_omega <= 0.0) {
    throw std::invalid_argument("ChannelSpec: rayleigh_omega must be > 0");
  }
  if (multicast) {
    if (fading != FadingMode::Awgn) {
      throw std::invalid_argument("ChannelSpec: multicast is AWGN only");
    }
    if (std::abs(multicast->epsilon) > 1.0) {
      throw std::invalid_argument(
          "ChannelSpec: noise correlation must satisfy |epsilon| <= 1");
    }
  }
}

double forward_channel(double x, double alpha, double n) {
  return alpha * x + n;
}

double feedback_channel(double y_prev, double m) { return y_prev + m; }

double sample_rayleigh(double sigma, Rng& rng) {
  if (sigma <= 0.0) {
    throw std::invalid_argument("sample_rayleigh: sigma must be > 0");
  }
  return rng.rayleigh(sigma);
}

std::pair<double, double> sample_correlated_noise(double sigma1, double sigma2,
                                                  double epsilon, Rng& rng) {
  if (std::abs(epsilon) > 1.0) {
    throw std::invalid_argument(
        "sample_correlated_noise: |epsilon| must be <= 1");
  }
  const double g1 = rng.normal();
  const double g2 = rng.normal();
  const double n1 = sigma1 * g1;
  const double n2 = sigma2 * (epsilon * g1 + std::sqrt(1.0 - epsilon * epsilon) * g2);
  return {n1, n2};
}

Sample make_sample(const ChannelSpec& spec, std::size_t K,
                   std::uint64_t experiment_seed, std::uint64_t epoch,
                   std::uint64_t index) {
  const std::size_t L = block_length(K);
  Rng rng = Rng::derive(experiment_seed, 0x5A4D50ULL, epoch, index);
  Sample s;
  s.bits.resize(K);
  for (std::size_t k = 0; k < K; ++k) s.bits[k] = rng.bit() ? 1 : 0;

  s.fading.assign(L, 1.0);
  if (spec.fading == FadingMode::SlowRayleigh) {
    const double a = rng.rayleigh(spec.rayleigh_sigma());
    s.fading.assign(L, a);
  } else if (spec.fading == FadingMode::FastRayleigh) {
    for (std::size_t i = 0; i < L; ++i)
      s.fading[i] = rng.rayleigh(spec.rayleigh_sigma());
  }

  if (spec.multicast) {
    const MulticastSpec& mc = *spec.multicast;
    const double s1 = std::sqrt(snr_db_to_variance(mc.rho1_db));
    const double s2 = std::sqrt(snr_db_to_variance(mc.rho2_db));
    s.forward_noise.resize(L);
    s.forward_noise2.resize(L);
    for (std::size_t i = 0; i < L; ++i) {
      auto [n1, n2] = sample_correlated_noise(s1, s2, mc.epsilon, rng);
      s.forward_noise[i] = n1;
      s.forward_noise2[i] = n2;
    }
    const double m1 = std::sqrt(mc.eta1.variance());
    const double m2 = std::sqrt(mc.eta2.variance());
    s.feedback_noise.resize(L);
    s.feedback_noise2.resize(L);
    for (std::size_t i = 0; i < L; ++i) s.feedback_noise[i] = m1 * rng.normal();
    for (std::size_t i = 0; i < L; ++i) s.feedback_noise2[i] = m2 * rng.normal();
  } else {
    const double sn = std::sqrt(spec.forward_noise_var());
    const double sm = std::sqrt(spec.feedback_noise_var());
    s.forward_noise.resize(L);
    for (std::size_t i = 0; i < L; ++i) s.forward_noise[i] = sn * rng.normal();
    s.feedback_noise.resize(L);
    for (std::size_t i = 0; i < L; ++i) s.feedback_noise[i] = sm * rng.normal();
  }
  return s;
}

Dataset::Dataset(ChannelSpec spec, std::size_t K, std::size_t count,
                 std::uint64_t seed, std::uint64_t epoch)
    : spec_(std::move(spec)), K_(K), count_(count), seed_(seed), epoch_(epoch) {
  if (count_ < 1) throw std::invalid_argument("Dataset: count must be >= 1");
  spec_.validate();
}

Sample Dataset::at(std::size_t index) const {
  if (index >= count_) throw std::out_of_range("Dataset::at");
  return make_sample(spec_, K_, seed_, epoch_, index);
}

Dataset generate_dataset(const ChannelSpec& spec, std::size_t K,
                         std::size_t count, std::uint64_t seed,
                         std::uint64_t epoch) {
  return Dataset(spec, K, count, seed, epoch);
}

SampleBatch pack_batch(const ChannelSpec& spec, std::size_t K,
                       const std::vector<Sample>& samples) {
  const std::size_t B = samples.size();
  const std::size_t L = block_length(K);
  SampleBatch b;
  b.spec = spec;
  b.K = K;
  b.bits = Tensor({B, K});
  b.fading = Tensor({B, L});
  b.forward_noise = Tensor({B, L});
  b.feedback_noise = Tensor({B, L});
  const bool mc = spec.multicast.has_value();
  if (mc) {
    b.forward_noise2 = Tensor({B, L});
    b.feedback_noise2 = Tensor({B, L});
  }
  for (std::size_t i = 0; i < B; ++i) {
    const Sample& s = samples[i];
    for (std::size_t k = 0; k < K; ++k) b.bits.at(i, k) = s.bits[k];
    for (std::size_t p = 0; p < L; ++p) {
      b.fading.at(i, p) = s.fading[p];
      b.forward_noise.at(i, p) = s.forward_noise[p];
      b.feedback_noise.at(i, p) = s.feedback_noise[p];
      if (mc) {
        b.forward_noise2.at(i, p) = s.forward_noise2[p];
        b.feedback_noise2.at(i, p) = s.feedback_noise2[p];
      }
    }
  }
  return b;
}

SampleBatch batch_from_dataset(const Dataset& ds, std::size_t lo,
                               std::size_t hi) {
  std::vector<Sample> samples;
  samples.reserve(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) samples.push_back(ds.at(i));
  return pack_batch(ds.spec(), ds.message_length(), samples);
}

namespace {
constexpr char kDataMagic[8] = {'D', 'R', 'F', 'D', 'A', 'T', 'A', '\n'};

void put_u64_raw(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64_raw(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f64_vec(std::ostream& os, const std::vector<double>& v) {
  for (double x : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof(bits));
    put_u64_raw(os, bits);
  }
}

void get_f64_vec(std::istream& is, std::vector<double>& v) {
  for (double& x : v) {
    const std::uint64_t bits = get_u64_raw(is);
    std::memcpy(&x, &bits, sizeof(x));
  }
}
}  // namespace

void dump_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("dump_dataset: cannot open '" + path + "'");
  const std::size_t K = ds.message_length();
  const std::size_t L = block_length(K);
  const std::string mode = fading_mode_name(ds.spec().fading);
  os.write(kDataMagic, sizeof(kDataMagic));
  put_u64_raw(os, 1);  // format version
  put_u64_raw(os, K);
  put_u64_raw(os, L);
  put_u64_raw(os, mode.size());
  os.write(mode.data(), static_cast<std::streamsize>(mode.size()));
  put_u64_raw(os, ds.spec().multicast ? 1 : 0);
  put_u64_raw(os, ds.seed());
  put_u64_raw(os, ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Sample s = ds.at(i);
    os.write(reinterpret_cast<const char*>(s.bits.data()),
             static_cast<std::streamsize>(s.bits.size()));
    put_f64_vec(os, s.fading);
    put_f64_vec(os, s.forward_noise);
    put_f64_vec(os, s.feedback_noise);
    if (ds.spec().multicast) {
      put_f64_vec(os, s.forward_noise2);
      put_f64_vec(os, s.feedback_noise2);
    }
  }
}

std::vector<Sample> read_dataset_dump(const std::string& path,
                                      std::size_t& K_out,
                                      std::string& mode_out,
                                      std::uint64_t& seed_out) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_dataset_dump: cannot open '" + path + "'");
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kDataMagic, sizeof(kDataMagic)) != 0) {
    throw std::runtime_error("read_dataset_dump: bad magic in '" + path + "'");
  }
  const std::uint64_t version = get_u64_raw(is);
  if (version != 1) {
    throw std::runtime_error("read_dataset_dump: unsupported version");
  }
  K_out = static_cast<std::size_t>(get_u64_raw(is));
  const std::size_t L = static_cast<std::size_t>(get_u64_raw(is));
  const std::size_t mode_len = static_cast<std::size_t>(get_u64_raw(is));
  mode_out.assign(mode_len, '\0');
  is.read(mode_out.data(), static_cast<std::streamsize>(mode_len));
  const bool mc = get_u64_raw(is) != 0;
  seed_out = get_u64_raw(is);
  const std::uint64_t count = get_u64_raw(is);
  std::vector<Sample> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Sample s;
    s.bits.resize(K_out);
    is.read(reinterpret_cast<char*>(s.bits.data()),
            static_cast<std::streamsize>(K_out));
    s.fading.resize(L);
    s.forward_noise.resize(L);
    s.feedback_noise.resize(L);
    get_f64_vec(is, s.fading);
    get_f64_vec(is, s.forward_noise);
    get_f64_vec(is, s.feedback_noise);
    if (mc) {
      s.forward_noise2.resize(L);
      s.feedback_noise2.resize(L);
      get_f64_vec(is, s.forward_noise2);
      get_f64_vec(is, s.feedback_noise2);
    }
    if (!is) throw std::runtime_error("read_dataset_dump: truncated file");
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace drf
