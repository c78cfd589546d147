#include "drf/decoder.hpp"

#include <cmath>
#include <stdexcept>

namespace drf {

BatchNormParams::BatchNormParams(const std::string& bn_name,
                                 std::size_t features)
    : name(bn_name) {
  gamma = Parameter(name + ".gamma", Tensor::full({features}, 1.0));
  beta = Parameter(name + ".beta", Tensor({features}));
  run_mean = Tensor({features});
  run_var = Tensor::full({features}, 1.0);
  updates = Tensor({1});
}

BatchNormVars bind_batch_norm(Binder& binder, BatchNormParams& params) {
  return BatchNormVars{binder.bind(params.gamma), binder.bind(params.beta),
                       &params};
}

Var batch_norm(Tape& tape, const BatchNormVars& bn, Var x, bool training) {
  BatchNormParams& p = *bn.owner;
  Var xhat;
  if (training) {
    Var mu = colmean(x);
    Var xc = sub_rowvec(x, mu);
    Var var = colmean(square(xc));
    xhat = div_rowvec(xc, sqrt(add_const(var, p.eps)));
    const Tensor& mu_v = tape.value(mu);
    const Tensor& var_v = tape.value(var);
    const double n = p.updates[0];
    const double m = std::min(p.momentum, n / (n + 1.0));
    for (std::size_t j = 0; j < p.run_mean.size(); ++j) {
      p.run_mean[j] = m * p.run_mean[j] + (1.0 - m) * mu_v[j];
      p.run_var[j] = m * p.run_var[j] + (1.0 - m) * var_v[j];
    }
    p.updates[0] = n + 1.0;
  } else {
    Var mu = tape.constant(p.run_mean);
    Tensor denom = p.run_var;
    for (std::size_t j = 0; j < denom.size(); ++j)
      denom[j] = std::sqrt(denom[j] + p.eps);
    xhat = div_rowvec(sub_rowvec(x, mu), tape.constant(std::move(denom)));
  }
  return add_rowvec(mul_rowvec(xhat, bn.gamma), bn.beta);
}

DecoderParams::DecoderParams(const CodeConfig& cfg, Rng& rng,
                             const std::string& prefix) {
  const std::size_t H = cfg.H();
  const std::size_t K = cfg.K;
  l1f = LstmWeights(prefix + ".l1f", cfg.decoder_input_dim(), H, rng);
  l1b = LstmWeights(prefix + ".l1b", cfg.decoder_input_dim(), H, rng);
  bn1 = BatchNormParams(prefix + ".bn1", 2 * H);
  l2f = LstmWeights(prefix + ".l2f", 2 * H, H, rng);
  l2b = LstmWeights(prefix + ".l2b", 2 * H, H, rng);
  bn2 = BatchNormParams(prefix + ".bn2", 2 * H);

  const std::size_t hidden = 4 * K * K;
  const std::size_t out = 2 * K * K;  // 2HK coefficients with H = K
  auto uniform_init = [&rng](std::size_t rows, std::size_t cols) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    Tensor t({rows, cols});
    for (std::size_t i = 0; i < t.size(); ++i)
      t[i] = rng.uniform_range(-bound, bound);
    return t;
  };
  att_w1 = Parameter(prefix + ".att.w1", uniform_init(2, hidden));
  att_b1 = Parameter(prefix + ".att.b1", Tensor({hidden}));
  att_w2 = Parameter(prefix + ".att.w2", uniform_init(hidden, out));
  att_b2 = Parameter(prefix + ".att.b2", Tensor({out}));
  head_w = Parameter(prefix + ".head.w", uniform_init(2 * H, 1));
  head_b = Parameter(prefix + ".head.b", Tensor({1}));
}

void DecoderParams::collect(std::vector<Parameter*>& out) {
  l1f.collect(out);
  l1b.collect(out);
  bn1.collect(out);
  l2f.collect(out);
  l2b.collect(out);
  bn2.collect(out);
  out.push_back(&att_w1);
  out.push_back(&att_b1);
  out.push_back(&att_w2);
  out.push_back(&att_b2);
  out.push_back(&head_w);
  out.push_back(&head_b);
}

void DecoderParams::collect_state(
    std::vector<std::pair<std::string, Tensor*>>& out) {
  out.emplace_back(bn1.name + ".run_mean", &bn1.run_mean);
  out.emplace_back(bn1.name + ".run_var", &bn1.run_var);
  out.emplace_back(bn1.name + ".updates", &bn1.updates);
  out.emplace_back(bn2.name + ".run_mean", &bn2.run_mean);
  out.emplace_back(bn2.name + ".run_var", &bn2.run_var);
  out.emplace_back(bn2.name + ".updates", &bn2.updates);
}

DecoderVars bind_decoder(Binder& binder, DecoderParams& params) {
  DecoderVars d;
  d.l1f = bind_lstm(binder, params.l1f);
  d.l1b = bind_lstm(binder, params.l1b);
  d.bn1 = bind_batch_norm(binder, params.bn1);
  d.l2f = bind_lstm(binder, params.l2f);
  d.l2b = bind_lstm(binder, params.l2b);
  d.bn2 = bind_batch_norm(binder, params.bn2);
  d.att_w1 = binder.bind(params.att_w1);
  d.att_b1 = binder.bind(params.att_b1);
  d.att_w2 = binder.bind(params.att_w2);
  d.att_b2 = binder.bind(params.att_b2);
  d.head_w = binder.bind(params.head_w);
  d.head_b = binder.bind(params.head_b);
  return d;
}

Var attention_weights(Tape& tape, const DecoderVars& dec, double sigma_n2,
                      double sigma_m2, const CodeConfig& cfg) {
  if (sigma_n2 < 0.0 || sigma_m2 < 0.0) {
    throw std::invalid_argument("attention_weights: negative noise variance");
  }
  Var in = tape.constant(Tensor({1, 2}, {sigma_n2, sigma_m2}));
  Var h = sigmoid(add_rowvec(matmul(in, dec.att_w1), dec.att_b1));
  Var out = sigmoid(add_rowvec(matmul(h, dec.att_w2), dec.att_b2));
  return reshape(out, {cfg.K, 2 * cfg.H()});
}

Var decode(Tape& tape, const DecoderVars& dec, const CodeConfig& cfg,
           const std::vector<Var>& steps, double sigma_n2, double sigma_m2,
           const RunFlags& flags) {
  const std::size_t T = cfg.steps();
  if (steps.size() != T) {
    throw ShapeError("decode", "expected " + std::to_string(T) +
                                   " per-step inputs, got " +
                                   std::to_string(steps.size()));
  }
  const std::size_t B = tape.value(steps[0]).rows();

  auto bn_over_steps = [&](const std::vector<Var>& seq,
                           const BatchNormVars& bn) {
    Var stacked = concat_rows(seq);
    Var normed = batch_norm(tape, bn, stacked, flags.training);
    std::vector<Var> out(seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t)
      out[t] = slice_rows(normed, t * B, (t + 1) * B);
    return out;
  };

  std::vector<Var> f1 = bn_over_steps(bilstm_layer(tape, steps, dec.l1f, dec.l1b), dec.bn1);
  std::vector<Var> f2 = bn_over_steps(bilstm_layer(tape, f1, dec.l2f, dec.l2b), dec.bn2);

  Var att;
  if (flags.attention == AttentionMode::Learned) {
    double sn2 = sigma_n2, sm2 = sigma_m2;
    if (flags.attention_input) {
      sn2 = flags.attention_input->first;
      sm2 = flags.attention_input->second;
    }
    att = attention_weights(tape, dec, sn2, sm2, cfg);
  } else {
    att = tape.constant(Tensor::full({cfg.K, 2 * cfg.H()}, 1.0));
  }

  // Attention has K rows; the padded position's features feed no output.
  std::vector<Var> probs;
  probs.reserve(cfg.K);
  for (std::size_t k = 0; k < cfg.K; ++k) {
    Var scaled = mul_rowvec(f2[k], slice_rows(att, k, k + 1));
    probs.push_back(
        sigmoid(add_rowvec(matmul(scaled, dec.head_w), dec.head_b)));
  }
  return concat_cols(probs);
}

std::vector<std::uint8_t> harden(std::span<const double> probs) {
  std::vector<std::uint8_t> bits(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i)
    bits[i] = probs[i] >= 0.5 ? 1 : 0;
  return bits;
}

void ErrorCounts::add(const Tensor& probs, const Tensor& bits_ref) {
  const std::size_t B = probs.rows(), K = probs.cols();
  for (std::size_t i = 0; i < B; ++i) {
    bool block_err = false;
    for (std::size_t k = 0; k < K; ++k) {
      const std::uint8_t hat = probs.at(i, k) >= 0.5 ? 1 : 0;
      const std::uint8_t ref = bits_ref.at(i, k) != 0.0 ? 1 : 0;
      if (hat != ref) {
        ++bit_errors;
        block_err = true;
      }
    }
    if (block_err) ++block_errors;
  }
  samples += B;
  bits += B * K;
}

void ErrorCounts::merge(const ErrorCounts& o) {
  samples += o.samples;
  bits += o.bits;
  bit_errors += o.bit_errors;
  block_errors += o.block_errors;
}

}  // namespace drf
