#include "drf/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace drf {

EncoderParams::EncoderParams(const CodeConfig& cfg, Rng& rng) {
  const std::size_t H = cfg.H();
  lstm = LstmWeights("encoder.lstm", cfg.encoder_input_dim(), H, rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(H));
  Tensor pw({H, 2});
  for (std::size_t i = 0; i < pw.size(); ++i)
    pw[i] = rng.uniform_range(-bound, bound);
  proj_w = Parameter("encoder.proj.w", std::move(pw));
  proj_b = Parameter("encoder.proj.b", Tensor({2}));
  power_w = Parameter("encoder.power.w", Tensor::full({1, cfg.L()}, 1.0));
  power_running = Tensor::full({1, cfg.L()}, 1.0);
  power_updates = Tensor({1});
}

void EncoderParams::collect(std::vector<Parameter*>& out) {
  lstm.collect(out);
  out.push_back(&proj_w);
  out.push_back(&proj_b);
  out.push_back(&power_w);
}

void EncoderParams::collect_state(
    std::vector<std::pair<std::string, Tensor*>>& out) {
  out.emplace_back("encoder.power.running", &power_running);
  out.emplace_back("encoder.power.updates", &power_updates);
}

EncoderVars bind_encoder(Binder& binder, Tape& tape, EncoderParams& params,
                         const CodeConfig& cfg) {
  for (std::size_t i = 0; i < params.power_w.value.size(); ++i) {
    if (!(params.power_w.value[i] > 0.0)) {
      throw std::runtime_error("encoder: power weight " + std::to_string(i) +
                               " is non-positive");
    }
  }
  EncoderVars e;
  e.lstm = bind_lstm(binder, params.lstm);
  e.proj_w = binder.bind(params.proj_w);
  e.proj_b = binder.bind(params.proj_b);
  e.power_w = binder.bind(params.power_w);
  // w * sqrt(L) / ||w||: pure-parameter rescaling ensuring the average power
  // over positions is exactly 1 once each position is unit-normalized.
  Var norm = sqrt(sum(square(e.power_w)));
  e.power_scale = div_scalar(
      scale(e.power_w, std::sqrt(static_cast<double>(cfg.L()))), norm);
  e.owner = &params;
  (void)tape;
  return e;
}

Tensor encode_phase1(const Tensor& bits) {
  const std::size_t B = bits.rows(), K = bits.cols();
  Tensor c({B, K + 1});
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      const double b = bits.at(i, k);
      if (b != 0.0 && b != 1.0) {
        throw std::invalid_argument("encode_phase1: non-binary message bit");
      }
      c.at(i, k) = 2.0 * b - 1.0;
    }
    c.at(i, K) = -1.0;  // zero pad -> antipodal -1
  }
  return c;
}

Var power_reallocate(Tape& tape, const EncoderVars& enc, Var c,
                     std::size_t pos, bool training) {
  Var normalized;
  if (training) {
    Var msq = mean(square(c));
    const double msq_v = tape.value(msq).item();
    if (!(msq_v > 1e-300)) {
      throw std::runtime_error("power_reallocate: zero batch power at position " +
                               std::to_string(pos));
    }
    normalized = div_scalar(c, sqrt(msq));
    // Cumulative mean while young, exponential with momentum 0.9 once the
    // running average has seen enough batches.
    Tensor& run = enc.owner->power_running;
    const double n = enc.owner->power_updates[0];
    const double m = std::min(0.9, n / (n + 1.0));
    run[pos] = m * run[pos] + (1.0 - m) * msq_v;
    if (pos + 1 == tape.value(enc.power_w).size()) {
      enc.owner->power_updates[0] = n + 1.0;
    }
  } else {
    const double run = enc.owner->power_running[pos];
    if (!(run > 1e-300)) {
      throw std::runtime_error(
          "power_reallocate: uncalibrated running power at position " +
          std::to_string(pos));
    }
    normalized = scale(c, 1.0 / std::sqrt(run));
  }
  Var w_p = slice_cols(enc.power_scale, pos, pos + 1);
  return mul_scalar(normalized, w_p);
}

EncoderSession::EncoderSession(Tape& tape, const EncoderVars& enc,
                               const CodeConfig& cfg, const Schedule& schedule,
                               const SampleBatch& batch, RunFlags flags)
    : tape_(tape),
      enc_(enc),
      cfg_(cfg),
      schedule_(schedule),
      batch_(batch),
      flags_(flags) {
  const std::size_t L = cfg_.L();
  phase1_ = encode_phase1(batch.bits);
  x_time_.reserve(L);
  x_pos_.assign(L, Var{});
  z_view_.assign(L, Var{});
  z_view2_.assign(L, Var{});
  features_.reserve(cfg_.steps());
  state_ = lstm_zero_state(tape_, batch.batch_size(), cfg_.H());
  sigma_n2_ = batch.spec.multicast
                  ? snr_db_to_variance(batch.spec.multicast->rho1_db)
                  : batch.spec.forward_noise_var();
  sigma_m2_ = batch.spec.multicast ? batch.spec.multicast->eta1.variance()
                                   : batch.spec.feedback_noise_var();
  if (cfg_.fading != FadingMode::Awgn) {
    prior_ = FadingPrior::rayleigh(batch.spec.rayleigh_omega);
  }
  if (cfg_.csi == CsiMode::Estimated && cfg_.fading == FadingMode::SlowRayleigh) {
    Tensor zero({batch.batch_size(), 1});
    sum_xz_ = tape_.constant(zero);
    sum_xx_ = tape_.constant(zero);
  }
}

Var EncoderSession::zeros_col() const {
  return tape_.constant(Tensor::zeros({batch_.batch_size(), 1}));
}

void EncoderSession::consume(Var z) {
  if (batch_.spec.multicast) {
    throw std::logic_error("EncoderSession: multicast batch needs consume2");
  }
  if (consumed_ != t_) {
    throw std::logic_error("EncoderSession: consume/emit protocol violated");
  }
  if (consumed_ > 0) {
    const std::size_t viewed = schedule_.position_at_time(consumed_ - 1);
    z_view_[viewed] = z;
    if (cfg_.csi == CsiMode::Estimated &&
        cfg_.fading == FadingMode::SlowRayleigh) {
      sum_xz_ = add(sum_xz_, mul(x_pos_[viewed], z));
      sum_xx_ = add(sum_xx_, square(x_pos_[viewed]));
      have_slow_obs_ = true;
    }
  }
  ++consumed_;
}

void EncoderSession::consume2(Var z1, Var z2) {
  if (!batch_.spec.multicast) {
    throw std::logic_error("EncoderSession: consume2 on point-to-point batch");
  }
  if (consumed_ != t_) {
    throw std::logic_error("EncoderSession: consume/emit protocol violated");
  }
  if (consumed_ > 0) {
    const std::size_t viewed = schedule_.position_at_time(consumed_ - 1);
    z_view_[viewed] = z1;
    z_view2_[viewed] = z2;
  }
  ++consumed_;
}

Var EncoderSession::alpha_estimate(std::size_t pos) {
  if (cfg_.fading == FadingMode::Awgn) {
    throw std::logic_error("alpha_estimate in AWGN mode");
  }
  if (cfg_.csi == CsiMode::Exact) {
    const std::size_t B = batch_.batch_size();
    Tensor col({B, 1});
    for (std::size_t i = 0; i < B; ++i) col[i] = batch_.fading.at(i, pos);
    return tape_.constant(std::move(col));
  }
  if (cfg_.fading == FadingMode::SlowRayleigh) {
    if (!have_slow_obs_) {
      return tape_.constant(
          Tensor::full({batch_.batch_size(), 1}, prior_.mean));
    }
    return lmmse_slow_var(tape_, sum_xz_, sum_xx_, prior_, sigma_n2_,
                          sigma_m2_);
  }
  // Fast fading: per-symbol estimate from that symbol's own delayed view.
  if (!z_view_[pos].valid() || !x_pos_[pos].valid()) {
    throw std::logic_error("alpha_estimate: position " + std::to_string(pos) +
                           " not yet observed (causality)");
  }
  return lmmse_fast_var(tape_, z_view_[pos], x_pos_[pos], prior_, sigma_n2_,
                        sigma_m2_);
}

Var EncoderSession::noise_estimate(std::size_t pos) {
  if (flags_.zero_feedback) return zeros_col();
  if (!z_view_[pos].valid() || !x_pos_[pos].valid()) {
    throw std::logic_error("noise_estimate: position " + std::to_string(pos) +
                           " not yet observed (causality)");
  }
  if (cfg_.fading == FadingMode::Awgn) {
    return sub(z_view_[pos], x_pos_[pos]);
  }
  return sub(z_view_[pos], mul(alpha_estimate(pos), x_pos_[pos]));
}

Var EncoderSession::feature_for_step(std::size_t k) {
  const std::size_t B = batch_.batch_size();
  const std::size_t K = cfg_.K;
  Tensor ck({B, 1});
  for (std::size_t i = 0; i < B; ++i) ck[i] = phase1_.at(i, k);
  Var c = tape_.constant(std::move(ck));

  std::vector<Var> cols;
  cols.reserve(cfg_.encoder_input_dim());
  cols.push_back(c);
  if (batch_.spec.multicast) {
    auto nest2 = [this](std::size_t pos) -> Var {
      if (flags_.zero_feedback) return zeros_col();
      if (!z_view2_[pos].valid() || !x_pos_[pos].valid()) {
        throw std::logic_error("noise_estimate: position " +
                               std::to_string(pos) +
                               " not yet observed (causality)");
      }
      return sub(z_view2_[pos], x_pos_[pos]);
    };
    cols.push_back(noise_estimate(k));
    cols.push_back(nest2(k));
    if (k == 0) {
      for (int i = 0; i < 4; ++i) cols.push_back(zeros_col());
    } else {
      cols.push_back(noise_estimate(K + 1 + (k - 1)));
      cols.push_back(nest2(K + 1 + (k - 1)));
      cols.push_back(noise_estimate(2 * K + 2 + (k - 1)));
      cols.push_back(nest2(2 * K + 2 + (k - 1)));
    }
  } else {
    cols.push_back(noise_estimate(k));
    if (k == 0) {
      cols.push_back(zeros_col());
      cols.push_back(zeros_col());
    } else {
      cols.push_back(noise_estimate(K + 1 + (k - 1)));
      cols.push_back(noise_estimate(2 * K + 2 + (k - 1)));
    }
    if (cfg_.fading != FadingMode::Awgn) {
      cols.push_back(alpha_estimate(k));
      if (k == 0) {
        cols.push_back(zeros_col());
        cols.push_back(zeros_col());
      } else {
        cols.push_back(alpha_estimate(K + 1 + (k - 1)));
        cols.push_back(alpha_estimate(2 * K + 2 + (k - 1)));
      }
    }
  }
  return concat_cols(cols);
}

Var EncoderSession::emit() {
  if (consumed_ != t_ + 1) {
    throw std::logic_error("EncoderSession: emit before consuming feedback");
  }
  const std::size_t K = cfg_.K;
  const std::size_t pos = schedule_.position_at_time(t_);
  Var x;
  if (t_ <= K) {
    // Phase I: antipodal zero-padded message through the power layer.
    const std::size_t B = batch_.batch_size();
    Tensor col({B, 1});
    for (std::size_t i = 0; i < B; ++i) col[i] = phase1_.at(i, t_);
    x = power_reallocate(tape_, enc_, tape_.constant(std::move(col)), pos,
                         flags_.training);
  } else {
    const std::size_t r = t_ - (K + 1);
    const std::size_t round = r / 2;
    if (r % 2 == 0) {
      // Round boundary: run the LSTM step and produce both parity symbols.
      Var f = feature_for_step(round);
      features_.push_back(f);
      state_ = lstm_cell(tape_, f, state_, enc_.lstm);
      Var out = sigmoid(
          add_rowvec(matmul(state_.h, enc_.proj_w), enc_.proj_b));
      Var c_pair = affine(out, 2.0, -1.0);  // sigmoid output -> (-1, 1)
      x = power_reallocate(tape_, enc_, slice_cols(c_pair, 0, 1), pos,
                           flags_.training);
      pending_c2_ = slice_cols(c_pair, 1, 2);
    } else {
      if (!pending_c2_.valid()) {
        throw std::logic_error("EncoderSession: missing pending parity");
      }
      x = power_reallocate(tape_, enc_, pending_c2_, pos, flags_.training);
      pending_c2_ = Var{};
    }
  }
  x_pos_[pos] = x;
  x_time_.push_back(x);
  ++t_;
  return x;
}

}  // namespace drf
