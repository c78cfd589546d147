#include "drf/code.hpp"

#include <stdexcept>

namespace drf {

std::string csi_mode_name(CsiMode m) {
  return m == CsiMode::Exact ? "exact" : "estimated";
}

CsiMode csi_mode_from_name(const std::string& s) {
  if (s == "exact") return CsiMode::Exact;
  if (s == "estimated") return CsiMode::Estimated;
  throw std::invalid_argument("unknown csi mode '" + s + "'");
}

std::size_t CodeConfig::encoder_input_dim() const {
  if (multicast) return 7;
  return fading == FadingMode::Awgn ? 4 : 7;
}

void CodeConfig::validate() const {
  if (K < 1) throw std::invalid_argument("CodeConfig: K must be >= 1");
  if (multicast && fading != FadingMode::Awgn) {
    throw std::invalid_argument("CodeConfig: multicast is AWGN only");
  }
}

Schedule::Schedule(std::size_t K) {
  const std::size_t L = block_length(K);
  pos_.resize(L);
  time_.resize(L);
  for (std::size_t t = 0; t < K + 1; ++t) pos_[t] = t;  // phase I
  for (std::size_t k = 0; k < K + 1; ++k) {
    pos_[K + 1 + 2 * k] = K + 1 + k;          // stream 1, round k
    pos_[K + 1 + 2 * k + 1] = 2 * K + 2 + k;  // stream 2, round k
  }
  for (std::size_t t = 0; t < L; ++t) time_[pos_[t]] = t;
}

}  // namespace drf
