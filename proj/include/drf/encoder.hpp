#pragma once

#include "drf/code.hpp"
#include "drf/csi.hpp"
#include "drf/lstm.hpp"

namespace drf {

// Trainable encoder state: phase-II LSTM with a 2-wide sigmoid output head,
// plus the learned power re-allocation weights (one per codeword position).
struct EncoderParams {
  LstmWeights lstm;      // encoder_input_dim -> H
  Parameter proj_w;      // (H, 2)
  Parameter proj_b;      // (2)
  Parameter power_w;     // (1, L), strictly positive
  Tensor power_running;  // (1, L) running mean-square of pre-scale symbols
  Tensor power_updates;  // (1) update count, for momentum warmup

  EncoderParams() = default;
  EncoderParams(const CodeConfig& cfg, Rng& rng);

  void collect(std::vector<Parameter*>& out);
  void collect_state(std::vector<std::pair<std::string, Tensor*>>& out);
};

struct EncoderVars {
  LstmVars lstm;
  Var proj_w, proj_b;
  Var power_w;       // bound (1, L)
  Var power_scale;   // (1, L): power_w * sqrt(L) / ||power_w||
  EncoderParams* owner = nullptr;
};

EncoderVars bind_encoder(Binder& binder, Tape& tape, EncoderParams& params,
                         const CodeConfig& cfg);

// Antipodal phase-I mapping: zero-pad to K+1 then 2b-1. Throws on non-binary
// input. Returns the (B, K+1) symbol tensor.
Tensor encode_phase1(const Tensor& bits);

// Learned power re-allocation for one position. Training mode normalizes by
// the batch mean square at this position; eval mode uses the frozen running
// statistic. Enforces (1/L) E||x||^2 = 1 jointly with the weight-norm scale.
Var power_reallocate(Tape& tape, const EncoderVars& enc, Var c,
                     std::size_t pos, bool training);

// Stepwise encoding transducer for one batch. Drives phase I then the
// phase-II LSTM in emission-time order; the channel loop alternates
// consume(z_t) / emit(). Training and evaluation share this path.
class EncoderSession {
 public:
  EncoderSession(Tape& tape, const EncoderVars& enc, const CodeConfig& cfg,
                 const Schedule& schedule, const SampleBatch& batch,
                 RunFlags flags);

  std::size_t length() const { return cfg_.L(); }

  // Feedback observed just before emitting time t (0-based): z with the view
  // of the previous emission. For multicast supply both receivers' symbols.
  void consume(Var z);
  void consume2(Var z1, Var z2);

  // Emit the symbol for the current time; advances the clock.
  Var emit();

  // Emissions in time order (filled as the session runs).
  const std::vector<Var>& emissions_by_time() const { return x_time_; }
  // The assembled phase-II feature rows, one (B, d_in) Var per step.
  const std::vector<Var>& feature_rows() const { return features_; }

 private:
  Var feature_for_step(std::size_t k);   // 0-based phase-II step
  Var alpha_estimate(std::size_t pos);   // exact or LMMSE, (B,1)
  Var noise_estimate(std::size_t pos);   // z_view - alpha_hat * x at pos
  Var zeros_col() const;

  Tape& tape_;
  EncoderVars enc_;
  CodeConfig cfg_;
  const Schedule& schedule_;
  const SampleBatch& batch_;
  RunFlags flags_;
  FadingPrior prior_;
  double sigma_n2_ = 0.0, sigma_m2_ = 0.0;

  std::size_t t_ = 0;              // next emission time
  std::size_t consumed_ = 0;       // feedback symbols consumed
  Tensor phase1_;                  // (B, K+1) antipodal symbols
  std::vector<Var> x_time_;        // emissions by time
  std::vector<Var> x_pos_;         // emissions by position
  std::vector<Var> z_view_;        // feedback view by viewed position
  std::vector<Var> z_view2_;       // multicast second receiver
  std::vector<Var> features_;      // per phase-II step
  LstmState state_;
  Var pending_c2_;                 // stream-2 parity awaiting emission
  // Slow-fading LMMSE accumulators (per-sample running sums).
  Var sum_xz_, sum_xx_;
  bool have_slow_obs_ = false;
};

}  // namespace drf
