#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "drf/channel.hpp"

namespace drf {

enum class CsiMode { Exact, Estimated };
enum class AttentionMode { Learned, AllOnes };

std::string csi_mode_name(CsiMode m);
CsiMode csi_mode_from_name(const std::string& s);

// Shape of a code instance: fixed at construction, stored in checkpoints.
// The LSTM hidden width H equals the message length K; the block is
// L = 3K+3 (phase I of K+1 symbols, then two parity streams of K+1 each).
struct CodeConfig {
  std::size_t K = 10;
  FadingMode fading = FadingMode::Awgn;
  bool multicast = false;
  CsiMode csi = CsiMode::Exact;   // encoder-side CSI source in fading modes
  bool rcsi = false;              // decoder input is LMMSE-compensated

  std::size_t L() const { return block_length(K); }
  std::size_t H() const { return K; }
  std::size_t steps() const { return K + 1; }

  // Per-step encoder feature width: AWGN 4, fading 7 (adds the three causal
  // fading features), multicast 7 (two receivers' noise estimates).
  std::size_t encoder_input_dim() const;
  // Decoder per-step input width: phase I symbol plus the two parities.
  std::size_t decoder_input_dim() const { return 3; }

  void validate() const;
};

// Emission-time schedule. Phase I occupies times 1..K+1 in position order;
// phase II round k emits its two parity symbols back-to-back, stream 1 at
// position K+1+k and stream 2 at position 2K+2+k. Positions and times are
// 0-based here.
struct Schedule {
  explicit Schedule(std::size_t K);
  std::size_t position_at_time(std::size_t t) const { return pos_[t]; }
  std::size_t time_of_position(std::size_t p) const { return time_[p]; }
  std::size_t length() const { return pos_.size(); }

 private:
  std::vector<std::size_t> pos_;
  std::vector<std::size_t> time_;
};

// Per-run switches that do not change trained shapes.
struct RunFlags {
  bool training = false;
  AttentionMode attention = AttentionMode::Learned;
  // Variances fed to the decoder attention; defaults to the ones the channel
  // actually uses. Overridden in SNR-mismatch sweeps.
  std::optional<std::pair<double, double>> attention_input;
  std::optional<bool> rcsi_override;
  std::optional<CsiMode> csi_override;
  bool zero_feedback = false;  // open-loop sanity: feedback features forced 0
};

}  // namespace drf
