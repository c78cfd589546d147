#pragma once

#include <span>

#include "drf/code.hpp"
#include "drf/lstm.hpp"

namespace drf {

// Batch normalization over the feature dimension; statistics are taken
// across batch and time. Training normalizes with batch moments and updates
// the running averages; eval uses the frozen running averages.
struct BatchNormParams {
  std::string name;
  Parameter gamma, beta;      // (F)
  Tensor run_mean, run_var;   // (F)
  Tensor updates;             // (1) update count, for momentum warmup
  double momentum = 0.9;
  double eps = 1e-5;

  BatchNormParams() = default;
  BatchNormParams(const std::string& name, std::size_t features);

  void collect(std::vector<Parameter*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
  }
};

struct BatchNormVars {
  Var gamma, beta;
  BatchNormParams* owner = nullptr;
};

BatchNormVars bind_batch_norm(Binder& binder, BatchNormParams& params);

Var batch_norm(Tape& tape, const BatchNormVars& bn, Var x, bool training);

// Two bi-LSTM layers with batch norm, the SNR-aware attention MLP
// (2 -> 4K^2 -> 2K^2, sigmoid activations, reshaped to K x 2H) and a shared
// 2H -> 1 sigmoid output head applied per message position.
struct DecoderParams {
  LstmWeights l1f, l1b;  // 3 -> H
  BatchNormParams bn1;   // 2H
  LstmWeights l2f, l2b;  // 2H -> H
  BatchNormParams bn2;   // 2H
  Parameter att_w1, att_b1;  // (2, 4K^2), (4K^2)
  Parameter att_w2, att_b2;  // (4K^2, 2K^2), (2K^2)
  Parameter head_w, head_b;  // (2H, 1), (1)

  DecoderParams() = default;
  DecoderParams(const CodeConfig& cfg, Rng& rng,
                const std::string& prefix = "decoder");

  void collect(std::vector<Parameter*>& out);
  void collect_state(std::vector<std::pair<std::string, Tensor*>>& out);
};

struct DecoderVars {
  LstmVars l1f, l1b, l2f, l2b;
  BatchNormVars bn1, bn2;
  Var att_w1, att_b1, att_w2, att_b2;
  Var head_w, head_b;
};

DecoderVars bind_decoder(Binder& binder, DecoderParams& params);

// SNR-conditioned attention coefficients, shape (K, 2H), entries in (0,1).
// Throws on negative variances.
Var attention_weights(Tape& tape, const DecoderVars& dec, double sigma_n2,
                      double sigma_m2, const CodeConfig& cfg);

// Full decode from per-step received symbols. steps: K+1 Vars of shape
// (B, 3) in position order [y_I,k ; y_II1,k ; y_II2,k]. Returns (B, K) bit
// probabilities in (0,1).
Var decode(Tape& tape, const DecoderVars& dec, const CodeConfig& cfg,
           const std::vector<Var>& steps, double sigma_n2, double sigma_m2,
           const RunFlags& flags);

// Hard decisions at threshold 0.5 (ties to 1).
std::vector<std::uint8_t> harden(std::span<const double> probs);

// Bit/block error accumulation against reference messages.
struct ErrorCounts {
  std::uint64_t samples = 0;
  std::uint64_t bits = 0;
  std::uint64_t bit_errors = 0;
  std::uint64_t block_errors = 0;

  void add(const Tensor& probs, const Tensor& bits_ref);
  double ber() const { return bits ? static_cast<double>(bit_errors) / static_cast<double>(bits) : 0.0; }
  double bler() const { return samples ? static_cast<double>(block_errors) / static_cast<double>(samples) : 0.0; }
  void merge(const ErrorCounts& o);
};

}  // namespace drf
