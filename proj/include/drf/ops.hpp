#pragma once

#include <vector>

#include "drf/tape.hpp"

namespace drf {

// Primitive differentiable ops. Each records one node on the operands' tape.
// Shape rules are strict (no general broadcasting); violations throw
// ShapeError naming the op. Row-vector variants broadcast a (1,n) or (n)
// operand across the rows of an (m,n) operand, which is all the network
// layers need (biases, per-feature statistics).

Var matmul(Var a, Var b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

Var add_rowvec(Var a, Var v);
Var sub_rowvec(Var a, Var v);
Var mul_rowvec(Var a, Var v);
Var div_rowvec(Var a, Var v);

Var mul_scalar(Var a, Var s);  // s: scalar node
Var div_scalar(Var a, Var s);

Var scale(Var a, double c);        // c * a
Var add_const(Var a, double c);    // a + c
Var affine(Var a, double m, double c);  // m * a + c

Var neg(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var log(Var a);
Var sqrt(Var a);
Var square(Var a);
Var clamp(Var a, double lo, double hi);

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var a, std::size_t lo, std::size_t hi);
Var slice_rows(Var a, std::size_t lo, std::size_t hi);

Var sum(Var a);   // scalar
Var mean(Var a);  // scalar

Var colmean(Var a);  // (m,n) -> (1,n), mean over rows

Var reshape(Var a, std::vector<std::size_t> shape);

}  // namespace drf
