#include "drf/lstm.hpp"

#include <cmath>

namespace drf {

LstmWeights::LstmWeights(const std::string& name, std::size_t input,
                         std::size_t hidden, Rng& rng)
    : input_size(input), hidden_size(hidden) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  Tensor wt({input + hidden, 4 * hidden});
  for (std::size_t i = 0; i < wt.size(); ++i)
    wt[i] = rng.uniform_range(-bound, bound);
  Tensor bt({4 * hidden});
  for (std::size_t j = hidden; j < 2 * hidden; ++j) bt[j] = 1.0;
  w = Parameter(name + ".w", std::move(wt));
  b = Parameter(name + ".b", std::move(bt));
}

LstmVars bind_lstm(Binder& binder, LstmWeights& weights) {
  return LstmVars{binder.bind(weights.w), binder.bind(weights.b),
                  weights.input_size, weights.hidden_size};
}

LstmState lstm_cell(Tape& tape, Var x, LstmState prev, const LstmVars& w) {
  const std::size_t H = w.hidden_size;
  if (tape.value(x).cols() != w.input_size) {
    throw ShapeError("lstm_cell", "input width " +
                                      tape.value(x).shape_str() +
                                      " != " + std::to_string(w.input_size));
  }
  Var gates = add_rowvec(matmul(concat_cols({x, prev.h}), w.w), w.b);
  Var ig = sigmoid(slice_cols(gates, 0, H));
  Var fg = sigmoid(slice_cols(gates, H, 2 * H));
  Var gg = tanh(slice_cols(gates, 2 * H, 3 * H));
  Var og = sigmoid(slice_cols(gates, 3 * H, 4 * H));
  Var c = add(mul(fg, prev.c), mul(ig, gg));
  Var h = mul(og, tanh(c));
  return LstmState{h, c};
}

LstmState lstm_zero_state(Tape& tape, std::size_t batch, std::size_t hidden) {
  return LstmState{tape.constant(Tensor::zeros({batch, hidden})),
                   tape.constant(Tensor::zeros({batch, hidden}))};
}

std::vector<Var> bilstm_layer(Tape& tape, const std::vector<Var>& seq,
                              const LstmVars& fwd, const LstmVars& bwd) {
  if (seq.empty()) throw ShapeError("bilstm_layer", "empty sequence");
  const std::size_t T = seq.size();
  const std::size_t B = tape.value(seq[0]).rows();
  std::vector<Var> hf(T), hb(T);
  LstmState s = lstm_zero_state(tape, B, fwd.hidden_size);
  for (std::size_t t = 0; t < T; ++t) {
    s = lstm_cell(tape, seq[t], s, fwd);
    hf[t] = s.h;
  }
  s = lstm_zero_state(tape, B, bwd.hidden_size);
  for (std::size_t t = T; t-- > 0;) {
    s = lstm_cell(tape, seq[t], s, bwd);
    hb[t] = s.h;
  }
  std::vector<Var> out(T);
  for (std::size_t t = 0; t < T; ++t) out[t] = concat_cols({hf[t], hb[t]});
  return out;
}

}  // namespace drf
