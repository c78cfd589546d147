#pragma once

#include "drf/checkpoint.hpp"
#include "drf/decoder.hpp"
#include "drf/encoder.hpp"

namespace drf {

// A complete encoder/decoder pair (two decoders for multicast), plus the
// channel it was configured for. Parameters are immutable snapshots during a
// pass; the trainer is the single writer.
struct DrfModel {
  CodeConfig cfg;
  ChannelSpec channel;  // the environment the model is trained for
  EncoderParams encoder;
  DecoderParams decoder;
  std::optional<DecoderParams> decoder2;  // multicast receiver 2

  static DrfModel init(const CodeConfig& cfg, const ChannelSpec& channel,
                       std::uint64_t seed);

  std::vector<Parameter*> parameters();
  std::vector<std::pair<std::string, Tensor*>> state_tensors();

  NamedTensors to_tensors();
  nlohmann::json meta() const;
  void save(const std::string& path) const;
  static DrfModel load(const std::string& path);
  std::uint64_t checksum();
};

// One forward pass of a sample batch through encoder -> channel -> decoder.
struct PipelineResult {
  Var probs;    // (B, K) bit probabilities, receiver 1
  Var probs2;   // receiver 2 (multicast only)
  std::vector<Var> x_time;            // emissions in time order
  std::vector<Var> encoder_features;  // per phase-II step, (B, d_in)
  std::vector<Var> y_pos;             // received symbols by position (rx 1)
};

// Channel noise and fading enter as recorded constants, so gradients flow
// from the decoder loss through y = alpha x + n into the encoder, and the
// feedback path z = y + m is part of the unrolled graph.
PipelineResult run_pipeline(Tape& tape, Binder& binder, DrfModel& model,
                            const SampleBatch& batch, const RunFlags& flags);

// Binary cross entropy in bits (log base 2), summed over message positions
// and averaged over the batch. Probabilities are clamped to
// [1e-12, 1 - 1e-12] before the logs.
Var bce_loss(Tape& tape, Var probs, const Tensor& bits);

// Sum of the two receivers' losses; weights default to (1, 1).
Var multicast_loss(Tape& tape, Var probs1, Var probs2, const Tensor& bits,
                   double w1 = 1.0, double w2 = 1.0);

// Forward passes in training-statistics mode (no gradient step) to settle
// the power layer and batch-norm running averages.
void calibrate_statistics(DrfModel& model, const ChannelSpec& spec,
                          std::size_t n_samples, std::size_t batch_size,
                          std::uint64_t seed);

}  // namespace drf
