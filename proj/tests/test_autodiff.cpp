#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "drf/adam.hpp"
#include "drf/checkpoint.hpp"
#include "drf/gradcheck.hpp"
#include "drf/lstm.hpp"
#include "drf/model.hpp"

using namespace drf;

TEST_CASE("primitive forward values") {
  Tape tape;
  Var x = tape.constant(Tensor::scalar(0.0));
  CHECK(tape.value(sigmoid(x)).item() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(tape.value(tanh(x)).item() == doctest::Approx(0.0));

  Var a = tape.constant(Tensor({2, 2}, {1, 2, 3, 4}));
  Var id = tape.constant(Tensor({2, 2}, {1, 0, 0, 1}));
  const Tensor& c = tape.value(matmul(a, id));
  for (std::size_t i = 0; i < 4; ++i) CHECK(c[i] == tape.value(a)[i]);
}

TEST_CASE("shape errors name the operation") {
  Tape tape;
  Var a = tape.constant(Tensor({2, 3}));
  Var b = tape.constant(Tensor({2, 2}));
  CHECK_THROWS_WITH_AS(matmul(a, b),
                       doctest::Contains("matmul"), ShapeError);
  CHECK_THROWS_AS(add(a, b), ShapeError);
  CHECK_THROWS_AS(slice_cols(a, 2, 1), ShapeError);
}

TEST_CASE("backward: quadratic and sigmoid derivatives") {
  Tape tape;
  Var w = tape.leaf(Tensor({3}, {1, 2, 3}), true);
  Var loss = sum(mul(w, w));
  tape.backward(loss);
  const Tensor& g = tape.grad(w);
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == doctest::Approx(4.0));
  CHECK(g[2] == doctest::Approx(6.0));

  Tape t2;
  Var w2 = t2.leaf(Tensor::scalar(0.0), true);
  t2.backward(sigmoid(w2));
  CHECK(t2.grad(w2)[0] == doctest::Approx(0.25).epsilon(1e-12));

  Tape t3;
  Var w3 = t3.leaf(Tensor::scalar(0.0), true);
  t3.backward(tanh(w3));
  CHECK(t3.grad(w3)[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("backward requires scalar loss and accumulates on repeat") {
  Tape tape;
  Var w = tape.leaf(Tensor({2}, {1, 1}), true);
  Var v = mul(w, w);
  CHECK_THROWS_AS(tape.backward(v), std::invalid_argument);
  Var loss = sum(v);
  tape.backward(loss);
  tape.backward(loss);
  CHECK(tape.grad(w)[0] == doctest::Approx(4.0));  // 2x accumulation
}

namespace {

// Gradients of a small random three-layer network against central finite
// differences.
double three_layer_loss(Tape& tape, Binder& binder, Parameter& w1,
                        Parameter& b1, Parameter& w2, Parameter& w3,
                        const Tensor& x) {
  Var xv = tape.constant(x);
  Var h1 = tanh(add_rowvec(matmul(xv, binder.bind(w1)), binder.bind(b1)));
  Var h2 = sigmoid(matmul(h1, binder.bind(w2)));
  Var h3 = matmul(h2, binder.bind(w3));
  Var loss = mean(mul(h3, h3));
  return tape.value(loss).item();
}

}  // namespace

TEST_CASE("three-layer network matches finite differences") {
  Rng rng(42);
  auto rnd = [&rng](std::vector<std::size_t> shape) {
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i)
      t[i] = rng.uniform_range(-1.0, 1.0);
    return t;
  };
  Parameter w1("w1", rnd({3, 4})), b1("b1", rnd({4}));
  Parameter w2("w2", rnd({4, 4})), w3("w3", rnd({4, 2}));
  Tensor x = rnd({5, 3});

  {
    Tape tape;
    Binder binder(tape);
    Var xv = tape.constant(x);
    Var h1 = tanh(add_rowvec(matmul(xv, binder.bind(w1)), binder.bind(b1)));
    Var h2 = sigmoid(matmul(h1, binder.bind(w2)));
    Var h3 = matmul(h2, binder.bind(w3));
    tape.backward(mean(mul(h3, h3)));
    binder.accumulate_grads();
  }
  std::vector<Parameter*> params = {&w1, &b1, &w2, &w3};
  auto forward = [&] {
    Tape tape;
    Binder binder(tape);
    return three_layer_loss(tape, binder, w1, b1, w2, w3, x);
  };
  GradCheckResult res = gradient_check(params, forward);
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("op zoo matches finite differences") {
  Rng rng(7);
  auto rnd = [&rng](std::vector<std::size_t> shape, double lo, double hi) {
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i)
      t[i] = rng.uniform_range(lo, hi);
    return t;
  };
  Parameter a("a", rnd({3, 4}, 0.2, 1.5));
  Parameter b("b", rnd({3, 4}, 0.2, 1.5));
  Parameter v("v", rnd({4}, 0.5, 1.5));
  Parameter s("s", rnd({}, 0.5, 1.5));

  auto build = [&](Tape&, Binder& binder) {
    Var av = binder.bind(a);
    Var bv = binder.bind(b);
    Var vv = binder.bind(v);
    Var sv = binder.bind(s);
    Var z = div(mul(av, bv), add(av, bv));
    z = mul_rowvec(add_rowvec(z, vv), vv);
    z = div_rowvec(z, vv);
    z = sub_rowvec(z, vv);
    z = concat_cols({z, sqrt(add_const(square(av), 0.1))});
    z = slice_cols(z, 1, 7);
    z = concat_rows({z, z});
    z = slice_rows(z, 1, 5);
    z = div_scalar(mul_scalar(z, sv), add_const(sv, 1.0));
    z = add_rowvec(log(add_const(clamp(z, -0.9, 0.9), 1.0)), colmean(z));
    Var r = reshape(z, {2, 12});
    return add(scale(mean(r), 2.0), scale(sum(square(r)), 0.01));
  };
  {
    Tape tape;
    Binder binder(tape);
    tape.backward(build(tape, binder));
    binder.accumulate_grads();
  }
  std::vector<Parameter*> params = {&a, &b, &v, &s};
  auto forward = [&] {
    Tape tape;
    Binder binder(tape);
    return tape.value(build(tape, binder)).item();
  };
  GradCheckResult res = gradient_check(params, forward);
  INFO(res.worst_param, "[", res.worst_index, "] ad=", res.autodiff_value,
       " fd=", res.fd_value);
  CHECK(res.max_rel_err < 1e-4);
}

namespace {

// Straight-line LSTM single step, coded gate by gate, independent of the
// tape machinery.
void lstm_step_oracle(const Tensor& x, const Tensor& h_prev,
                      const Tensor& c_prev, const Tensor& w, const Tensor& b,
                      std::size_t H, Tensor& h_out, Tensor& c_out) {
  const std::size_t B = x.rows();
  const std::size_t I = x.cols();
  h_out = Tensor({B, H});
  c_out = Tensor({B, H});
  for (std::size_t r = 0; r < B; ++r) {
    for (std::size_t j = 0; j < H; ++j) {
      double gi = b[j], gf = b[H + j], gg = b[2 * H + j], go = b[3 * H + j];
      for (std::size_t p = 0; p < I; ++p) {
        gi += x.at(r, p) * w.at(p, j);
        gf += x.at(r, p) * w.at(p, H + j);
        gg += x.at(r, p) * w.at(p, 2 * H + j);
        go += x.at(r, p) * w.at(p, 3 * H + j);
      }
      for (std::size_t p = 0; p < H; ++p) {
        gi += h_prev.at(r, p) * w.at(I + p, j);
        gf += h_prev.at(r, p) * w.at(I + p, H + j);
        gg += h_prev.at(r, p) * w.at(I + p, 2 * H + j);
        go += h_prev.at(r, p) * w.at(I + p, 3 * H + j);
      }
      const double i_g = 1.0 / (1.0 + std::exp(-gi));
      const double f_g = 1.0 / (1.0 + std::exp(-gf));
      const double g_g = std::tanh(gg);
      const double o_g = 1.0 / (1.0 + std::exp(-go));
      const double c = f_g * c_prev.at(r, j) + i_g * g_g;
      c_out.at(r, j) = c;
      h_out.at(r, j) = o_g * std::tanh(c);
    }
  }
}

}  // namespace

TEST_CASE("lstm_cell matches the gate-by-gate oracle") {
  Rng rng(11);
  const std::size_t I = 4, H = 4, B = 3;
  LstmWeights weights("lstm", I, H, rng);
  Tensor x({B, I}), h0({B, H}), c0({B, H});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform_range(-2, 2);
  for (std::size_t i = 0; i < h0.size(); ++i) h0[i] = rng.uniform_range(-1, 1);
  for (std::size_t i = 0; i < c0.size(); ++i) c0[i] = rng.uniform_range(-1, 1);

  Tape tape;
  Binder binder(tape);
  LstmVars lv = bind_lstm(binder, weights);
  LstmState prev{tape.constant(h0), tape.constant(c0)};
  LstmState next = lstm_cell(tape, tape.constant(x), prev, lv);

  Tensor h_ref, c_ref;
  lstm_step_oracle(x, h0, c0, weights.w.value, weights.b.value, H, h_ref,
                   c_ref);
  for (std::size_t i = 0; i < h_ref.size(); ++i) {
    CHECK(std::abs(tape.value(next.h)[i] - h_ref[i]) < 1e-12);
    CHECK(std::abs(tape.value(next.c)[i] - c_ref[i]) < 1e-12);
  }
}

TEST_CASE("lstm all-zero weights and inputs stay at the origin") {
  Rng rng(1);
  LstmWeights weights("lstm", 3, 5, rng);
  weights.w.value.fill(0.0);
  weights.b.value.fill(0.0);
  Tape tape;
  Binder binder(tape);
  LstmVars lv = bind_lstm(binder, weights);
  LstmState s = lstm_zero_state(tape, 2, 5);
  s = lstm_cell(tape, tape.constant(Tensor::zeros({2, 3})), s, lv);
  for (std::size_t i = 0; i < tape.value(s.h).size(); ++i) {
    CHECK(tape.value(s.h)[i] == 0.0);
    CHECK(tape.value(s.c)[i] == 0.0);
  }
}

TEST_CASE("bilstm on a length-1 sequence has width 2H") {
  Rng rng(3);
  const std::size_t H = 6;
  LstmWeights f("f", 2, H, rng), b("b", 2, H, rng);
  Tape tape;
  Binder binder(tape);
  std::vector<Var> seq = {tape.constant(Tensor({3, 2}, {1, 2, 3, 4, 5, 6}))};
  auto out = bilstm_layer(tape, seq, bind_lstm(binder, f), bind_lstm(binder, b));
  REQUIRE(out.size() == 1);
  CHECK(tape.value(out[0]).cols() == 2 * H);
}

TEST_CASE("lstm and bilstm gradients match finite differences") {
  Rng rng(13);
  const std::size_t I = 3, H = 4, T = 5, B = 2;
  LstmWeights fw("f", I, H, rng), bw("b", I, H, rng);
  std::vector<Tensor> inputs;
  for (std::size_t t = 0; t < T; ++t) {
    Tensor x({B, I});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform_range(-1, 1);
    inputs.push_back(x);
  }
  auto build = [&](Tape& tape, Binder& binder) {
    LstmVars fv = bind_lstm(binder, fw);
    LstmVars bv = bind_lstm(binder, bw);
    std::vector<Var> seq;
    for (const Tensor& x : inputs) seq.push_back(tape.constant(x));
    auto out = bilstm_layer(tape, seq, fv, bv);
    Var acc = out[0];
    for (std::size_t t = 1; t < T; ++t) acc = add(acc, out[t]);
    return mean(mul(acc, acc));
  };
  {
    Tape tape;
    Binder binder(tape);
    tape.backward(build(tape, binder));
    binder.accumulate_grads();
  }
  std::vector<Parameter*> params;
  fw.collect(params);
  bw.collect(params);
  auto forward = [&] {
    Tape tape;
    Binder binder(tape);
    return tape.value(build(tape, binder)).item();
  };
  GradCheckResult res = gradient_check(params, forward);
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("bptt reaches across all timesteps") {
  // Perturbing the first input changes the loss on the last step's output,
  // and the weight gradient with it.
  Rng rng(17);
  const std::size_t I = 2, H = 3, T = 6;
  LstmWeights w("w", I, H, rng);
  std::vector<Tensor> inputs(T, Tensor({1, I}));
  for (auto& x : inputs)
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform_range(-1, 1);

  auto last_step_loss = [&]() {
    Tape tape;
    Binder binder(tape);
    LstmVars lv = bind_lstm(binder, w);
    LstmState s = lstm_zero_state(tape, 1, H);
    for (const Tensor& x : inputs) s = lstm_cell(tape, tape.constant(x), s, lv);
    Var loss = sum(mul(s.h, s.h));
    tape.backward(loss);
    binder.accumulate_grads();
    return tape.value(loss).item();
  };
  w.w.zero_grad();
  w.b.zero_grad();
  const double l0 = last_step_loss();
  Tensor g0 = w.w.grad;
  inputs[0][0] += 0.5;
  w.w.zero_grad();
  w.b.zero_grad();
  const double l1 = last_step_loss();
  CHECK(l0 != l1);
  double gdiff = 0.0;
  for (std::size_t i = 0; i < g0.size(); ++i)
    gdiff += std::abs(g0[i] - w.w.grad[i]);
  CHECK(gdiff > 0.0);
}

TEST_CASE("adam: hand-computed first step and guards") {
  Parameter p("p", Tensor::scalar(0.0));
  Adam adam;

  SUBCASE("zero gradient leaves parameters unchanged") {
    p.grad[0] = 0.0;
    adam.step({&p});
    CHECK(p.value[0] == 0.0);
  }
  SUBCASE("unit gradient: bias-corrected step is -lr") {
    p.grad[0] = 1.0;
    adam.step({&p});
    // mhat = vhat = 1 exactly after one step, so dw = -lr / (1 + eps).
    CHECK(p.value[0] ==
          doctest::Approx(-1e-3 / (1.0 + 1e-8)).epsilon(1e-12));
  }
  SUBCASE("two identical steps move the same direction") {
    p.grad[0] = 1.0;
    adam.step({&p});
    const double after_one = p.value[0];
    adam.step({&p});
    CHECK(p.value[0] < after_one);
    CHECK(after_one < 0.0);
  }
  SUBCASE("non-finite gradient mentions the parameter") {
    p.grad[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(adam.step({&p}), doctest::Contains("'p'"),
                         std::runtime_error);
  }
}

TEST_CASE("gradient clipping at the global norm") {
  Parameter a("a", Tensor({2}, {0, 0}));
  a.grad = Tensor({2}, {3.0, 4.0});
  const double norm = clip_global_norm({&a}, 1.0);
  CHECK(norm == doctest::Approx(5.0));
  CHECK(a.grad[0] == doctest::Approx(0.6));
  CHECK(a.grad[1] == doctest::Approx(0.8));
}

TEST_CASE("tape determinism: identical seeds give identical bits") {
  auto run = [] {
    Rng rng(99);
    LstmWeights w("w", 3, 4, rng);
    Tape tape;
    Binder binder(tape);
    LstmVars lv = bind_lstm(binder, w);
    Tensor x({2, 3});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform_range(-1, 1);
    LstmState s = lstm_zero_state(tape, 2, 4);
    s = lstm_cell(tape, tape.constant(x), s, lv);
    Var loss = sum(mul(s.h, s.h));
    tape.backward(loss);
    binder.accumulate_grads();
    return std::make_pair(tape.value(loss).item(), w.w.grad);
  };
  auto [l1, g1] = run();
  auto [l2, g2] = run();
  CHECK(l1 == l2);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g2[i]);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  Rng rng(5);
  NamedTensors nt;
  Tensor t1({3, 4});
  for (std::size_t i = 0; i < t1.size(); ++i)
    t1[i] = rng.uniform_range(-1e9, 1e9) * 1e-7;
  t1[0] = 0.1 + 0.2;  // not exactly representable as text
  nt.add("layer.w", t1);
  nt.add("layer.b", Tensor({4}, {1e-300, -0.0, 3.14159, 42}));
  nlohmann::json meta = {{"format", "drf-model"}, {"k", 4}};

  const std::string path = "test_ckpt_roundtrip.drfc";
  save_checkpoint(path, meta, nt);
  auto [meta2, nt2] = load_checkpoint(path);
  CHECK(meta2["k"] == 4);
  REQUIRE(nt2.items.size() == 2);
  for (std::size_t k = 0; k < nt.items.size(); ++k) {
    CHECK(nt2.items[k].first == nt.items[k].first);
    const Tensor& a = nt.items[k].second;
    const Tensor& b = nt2.items[k].second;
    REQUIRE(a.same_shape(b));
    for (std::size_t i = 0; i < a.size(); ++i) {
      std::uint64_t ba, bb;
      const double av = a[i], bv = b[i];
      std::memcpy(&ba, &av, 8);
      std::memcpy(&bb, &bv, 8);
      CHECK(ba == bb);
    }
  }
  CHECK(tensors_checksum(nt) == tensors_checksum(nt2));
  std::remove(path.c_str());
}
