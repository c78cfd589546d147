#pragma once

#include "drf/ops.hpp"
#include "drf/param.hpp"
#include "drf/rng.hpp"

namespace drf {

// Fused LSTM weights: one (input+hidden, 4*hidden) matrix and a (4*hidden)
// bias, gate order [input, forget, cell, output]. Weights init uniform in
// [-1/sqrt(H), 1/sqrt(H)]; forget-gate bias starts at 1, the rest at 0.
struct LstmWeights {
  Parameter w;
  Parameter b;
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;

  LstmWeights() = default;
  LstmWeights(const std::string& name, std::size_t input, std::size_t hidden,
              Rng& rng);

  void collect(std::vector<Parameter*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }
};

// Tape-bound handles for one pass.
struct LstmVars {
  Var w, b;
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
};

LstmVars bind_lstm(Binder& binder, LstmWeights& weights);

struct LstmState {
  Var h, c;
};

// One recurrence step. x: (B, input), h/c: (B, hidden). Standard gates with
// tanh cell activation and sigmoid gate activations.
LstmState lstm_cell(Tape& tape, Var x, LstmState prev, const LstmVars& w);

// Zero initial state for a batch of the given size.
LstmState lstm_zero_state(Tape& tape, std::size_t batch, std::size_t hidden);

// Bi-directional layer: runs fwd over the sequence and bwd over its
// reversal, concatenating hidden states per step. Output width is 2*hidden.
std::vector<Var> bilstm_layer(Tape& tape, const std::vector<Var>& seq,
                              const LstmVars& fwd, const LstmVars& bwd);

}  // namespace drf
