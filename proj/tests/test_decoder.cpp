#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "drf/adam.hpp"
#include "test_helpers.hpp"

using namespace drf;
using namespace drf::testing;

TEST_CASE("attention: zero weights give coefficients 0.5, range is (0,1)") {
  ChannelSpec spec = awgn_spec(0.0);
  DrfModel model = small_model(4, spec, 3);
  const CodeConfig& cfg = model.cfg;

  SUBCASE("zeroed MLP") {
    model.decoder.att_w1.value.fill(0.0);
    model.decoder.att_b1.value.fill(0.0);
    model.decoder.att_w2.value.fill(0.0);
    model.decoder.att_b2.value.fill(0.0);
    Tape tape;
    Binder binder(tape);
    DecoderVars dec = bind_decoder(binder, model.decoder);
    Var att = attention_weights(tape, dec, 1.0, 0.01, cfg);
    const Tensor& a = tape.value(att);
    REQUIRE(a.rows() == cfg.K);
    REQUIRE(a.cols() == 2 * cfg.H());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == 0.5);
  }
  SUBCASE("strictly inside (0,1) and count = 2HK") {
    Tape tape;
    Binder binder(tape);
    DecoderVars dec = bind_decoder(binder, model.decoder);
    Var att = attention_weights(tape, dec, 100.0, 0.0, cfg);
    const Tensor& a = tape.value(att);
    CHECK(a.size() == 2 * cfg.H() * cfg.K);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i] > 0.0);
      CHECK(a[i] < 1.0);
    }
  }
  SUBCASE("negative variance is rejected") {
    Tape tape;
    Binder binder(tape);
    DecoderVars dec = bind_decoder(binder, model.decoder);
    CHECK_THROWS_AS(attention_weights(tape, dec, -0.1, 0.0, cfg),
                    std::invalid_argument);
  }
}

TEST_CASE("decode output shape, range, and input validation") {
  ChannelSpec spec = awgn_spec(0.0);
  DrfModel model = small_model(5, spec, 9);
  SampleBatch batch = make_batch(spec, 5, 7, 15);
  Tape tape;
  Binder binder(tape);
  RunFlags flags;
  flags.training = true;
  PipelineResult res = run_pipeline(tape, binder, model, batch, flags);
  const Tensor& p = tape.value(res.probs);
  REQUIRE(p.rows() == 7);
  REQUIRE(p.cols() == 5);
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(p[i] > 0.0);
    CHECK(p[i] < 1.0);
  }

  // Wrong number of per-step inputs is a structured error.
  Binder b2(tape);
  DecoderVars dec = bind_decoder(b2, model.decoder);
  std::vector<Var> bad(3, tape.constant(Tensor::zeros({2, 3})));
  CHECK_THROWS_AS(decode(tape, dec, model.cfg, bad, 1.0, 0.0, flags),
                  ShapeError);
}

TEST_CASE("all-ones attention bypasses the attention parameters") {
  ChannelSpec spec = awgn_spec(0.0);
  DrfModel model = small_model(4, spec, 21);
  calibrate_statistics(model, spec, 500, 250, 5);
  SampleBatch batch = make_batch(spec, 4, 3, 8);
  RunFlags flags;
  flags.attention = AttentionMode::AllOnes;
  auto decode_once = [&] {
    Tape tape;
    Binder binder(tape);
    PipelineResult res = run_pipeline(tape, binder, model, batch, flags);
    return tape.value(res.probs);
  };
  const Tensor before = decode_once();
  model.decoder.att_w1.value.fill(12.0);
  model.decoder.att_b2.value.fill(-3.0);
  const Tensor after = decode_once();
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
}

TEST_CASE("bidirectionality: the last symbol influences the first bit") {
  ChannelSpec spec = awgn_spec(0.0);
  DrfModel model = small_model(5, spec, 33);
  calibrate_statistics(model, spec, 500, 250, 6);
  SampleBatch batch = make_batch(spec, 5, 1, 10);
  RunFlags flags;
  auto first_bit_prob = [&](const SampleBatch& b) {
    Tape tape;
    Binder binder(tape);
    PipelineResult res = run_pipeline(tape, binder, model, b, flags);
    return tape.value(res.probs).at(0, 0);
  };
  const double base = first_bit_prob(batch);
  SampleBatch perturbed = batch;
  perturbed.forward_noise.at(0, model.cfg.L() - 1) += 2.5;
  CHECK(first_bit_prob(perturbed) != base);
}

TEST_CASE("batch norm: training normalizes, eval uses running statistics") {
  BatchNormParams bn("bn", 3);
  Rng rng(4);
  Tensor data({40, 3});
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = rng.uniform_range(0.0, 4.0) + (i % 3);

  // Training mode: per-feature mean 0 / var 1 before the affine map.
  bn.gamma.value.fill(1.0);
  bn.beta.value.fill(0.0);
  Tape tape;
  Binder binder(tape);
  BatchNormVars bnv = bind_batch_norm(binder, bn);
  Var out = batch_norm(tape, bnv, tape.constant(data), true);
  const Tensor& o = tape.value(out);
  for (std::size_t j = 0; j < 3; ++j) {
    double m = 0, v = 0;
    for (std::size_t i = 0; i < 40; ++i) m += o.at(i, j);
    m /= 40;
    for (std::size_t i = 0; i < 40; ++i)
      v += (o.at(i, j) - m) * (o.at(i, j) - m);
    v /= 40;
    CHECK(std::abs(m) < 1e-12);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-4));
  }

  // After a second update on different data the running statistics no
  // longer equal this batch's, so eval-mode output differs from training.
  Tensor other({40, 3});
  for (std::size_t i = 0; i < other.size(); ++i)
    other[i] = rng.uniform_range(-2.0, 7.0);
  {
    Tape tt;
    Binder bb(tt);
    BatchNormVars v = bind_batch_norm(bb, bn);
    batch_norm(tt, v, tt.constant(other), true);
  }
  Tape t2;
  Binder b2(t2);
  BatchNormVars bnv2 = bind_batch_norm(b2, bn);
  Var eval_out = batch_norm(t2, bnv2, t2.constant(data), false);
  bool differs = false;
  for (std::size_t i = 0; i < o.size(); ++i)
    if (std::abs(t2.value(eval_out)[i] - o[i]) > 1e-9) differs = true;
  CHECK(differs);
}

TEST_CASE("attention parameters receive gradient at initialization") {
  ChannelSpec spec = awgn_spec(0.0);
  DrfModel model = small_model(4, spec, 55);
  SampleBatch batch = make_batch(spec, 4, 32, 17);
  RunFlags flags;
  flags.training = true;
  for (Parameter* p : model.parameters()) p->zero_grad();
  Tape tape;
  Binder binder(tape);
  PipelineResult res = run_pipeline(tape, binder, model, batch, flags);
  tape.backward(bce_loss(tape, res.probs, batch.bits));
  binder.accumulate_grads();
  double acc = 0.0;
  for (std::size_t i = 0; i < model.decoder.att_w2.grad.size(); ++i)
    acc += std::abs(model.decoder.att_w2.grad[i]);
  CHECK(acc > 0.0);
  double acc1 = 0.0;
  for (std::size_t i = 0; i < model.decoder.att_w1.grad.size(); ++i)
    acc1 += std::abs(model.decoder.att_w1.grad[i]);
  CHECK(acc1 > 0.0);
}

TEST_CASE("attention output reacts to the forward noise variance") {
  // After one training step the MLP is not constant in its SNR input.
  ChannelSpec spec = awgn_spec(0.0);
  DrfModel model = small_model(4, spec, 59);
  SampleBatch batch = make_batch(spec, 4, 64, 23);
  RunFlags flags;
  flags.training = true;
  for (Parameter* p : model.parameters()) p->zero_grad();
  {
    Tape tape;
    Binder binder(tape);
    PipelineResult res = run_pipeline(tape, binder, model, batch, flags);
    tape.backward(bce_loss(tape, res.probs, batch.bits));
    binder.accumulate_grads();
  }
  Adam adam;
  auto params = model.parameters();
  adam.step(params);

  Tape tape;
  Binder binder(tape);
  DecoderVars dec = bind_decoder(binder, model.decoder);
  const Tensor a1 = tape.value(attention_weights(tape, dec, 1.0, 0.0, model.cfg));
  const Tensor a2 =
      tape.value(attention_weights(tape, dec, 1.2589, 0.0, model.cfg));
  double diff = 0.0;
  for (std::size_t i = 0; i < a1.size(); ++i) diff += std::abs(a1[i] - a2[i]);
  CHECK(diff > 0.0);
}

TEST_CASE("harden and error counting definitions") {
  const double probs[] = {0.7, 0.5, 0.49, 0.0};
  auto bits = harden(probs);
  CHECK(bits == std::vector<std::uint8_t>{1, 1, 0, 0});  // ties go to 1

  Tensor p({1, 50});
  Tensor ref({1, 50});
  ErrorCounts counts;
  p.fill(0.1);  // all decode to 0, reference all 0
  counts.add(p, ref);
  CHECK(counts.ber() == 0.0);
  CHECK(counts.bler() == 0.0);

  // one wrong bit in K=50: BER 0.02, BLER 1
  ErrorCounts one;
  p.at(0, 7) = 0.9;
  one.add(p, ref);
  CHECK(one.ber() == doctest::Approx(0.02));
  CHECK(one.bler() == 1.0);
  CHECK(one.bler() >= one.ber());
}

TEST_CASE("rcsi mode compensates the decoder inputs") {
  ChannelSpec spec = awgn_spec(0.0);
  spec.fading = FadingMode::FastRayleigh;
  DrfModel model = small_model(4, spec, 61);
  calibrate_statistics(model, spec, 500, 250, 67);
  SampleBatch batch = make_batch(spec, 4, 2, 71);
  RunFlags flags;
  auto run_probs = [&](bool rcsi) {
    RunFlags f = flags;
    f.rcsi_override = rcsi;
    Tape tape;
    Binder binder(tape);
    PipelineResult res = run_pipeline(tape, binder, model, batch, f);
    return tape.value(res.probs);
  };
  const Tensor p0 = run_probs(false);
  const Tensor p1 = run_probs(true);
  bool differs = false;
  for (std::size_t i = 0; i < p0.size(); ++i)
    if (p0[i] != p1[i]) differs = true;
  CHECK(differs);
}
