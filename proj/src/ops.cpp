#include "drf/ops.hpp"

#include <cmath>

namespace drf {

namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw std::invalid_argument("op on invalid Var");
  return *a.tape;
}

void check_same_tape(const char* op, Var a, Var b) {
  if (a.tape != b.tape) {
    throw ShapeError(op, "operands recorded on different tapes");
  }
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(op, "shape mismatch " + a.shape_str() + " vs " +
                             b.shape_str());
  }
}

// (m,n) with (n) or (1,n) second operand.
void check_rowvec(const char* op, const Tensor& a, const Tensor& v) {
  const bool ok = (v.rank() == 1 && v.shape()[0] == a.cols()) ||
                  (v.rank() == 2 && v.shape()[0] == 1 && v.cols() == a.cols());
  if (a.rank() != 2 || !ok) {
    throw ShapeError(op, "expected (m,n) and row vector (n), got " +
                             a.shape_str() + " and " + v.shape_str());
  }
}

bool rg(Var a) { return a.tape->requires_grad(a); }

using Fn = std::function<void(Tape&, int)>;

Var elementwise_binary(const char* name, Var a, Var b, Tensor out,
                       Fn backward) {
  check_same_tape(name, a, b);
  return tape_of(a).record(std::move(out), rg(a) || rg(b),
                           std::move(backward));
}

}  // namespace

Var matmul(Var a, Var b) {
  check_same_tape("matmul", a, b);
  Tape& t = tape_of(a);
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows()) {
    throw ShapeError("matmul", "incompatible shapes " + A.shape_str() +
                                   " x " + B.shape_str());
  }
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  Tensor C({m, n});
  const double* pa = A.data();
  const double* pb = B.data();
  double* pc = C.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + p * n;
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  const int ia = a.id, ib = b.id;
  return t.record(std::move(C), rg(a) || rg(b), [ia, ib, m, k, n](Tape& tp,
                                                                  int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& A2 = tp.value(ia);
    const Tensor& B2 = tp.value(ib);
    if (tp.requires_grad(Var{&tp, ia})) {
      Tensor& ga = tp.grad(ia);
      // dA = dC * B^T
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double gv = g[i * n + j];
          if (gv == 0.0) continue;
          for (std::size_t p = 0; p < k; ++p)
            ga[i * k + p] += gv * B2[p * n + j];
        }
    }
    if (tp.requires_grad(Var{&tp, ib})) {
      Tensor& gb = tp.grad(ib);
      // dB = A^T * dC
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A2[i * k + p];
          if (av == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j)
            gb[p * n + j] += av * g[i * n + j];
        }
    }
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  check_same_shape("add", A, B);
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
  const int ia = a.id, ib = b.id;
  return elementwise_binary("add", a, b, std::move(out),
                            [ia, ib](Tape& tp, int self) {
                              const Tensor& g = tp.grad(self);
                              if (tp.requires_grad(Var{&tp, ia})) {
                                Tensor& ga = tp.grad(ia);
                                for (std::size_t i = 0; i < g.size(); ++i)
                                  ga[i] += g[i];
                              }
                              if (tp.requires_grad(Var{&tp, ib})) {
                                Tensor& gb = tp.grad(ib);
                                for (std::size_t i = 0; i < g.size(); ++i)
                                  gb[i] += g[i];
                              }
                            });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  check_same_shape("sub", A, B);
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
  const int ia = a.id, ib = b.id;
  return elementwise_binary("sub", a, b, std::move(out),
                            [ia, ib](Tape& tp, int self) {
                              const Tensor& g = tp.grad(self);
                              if (tp.requires_grad(Var{&tp, ia})) {
                                Tensor& ga = tp.grad(ia);
                                for (std::size_t i = 0; i < g.size(); ++i)
                                  ga[i] += g[i];
                              }
                              if (tp.requires_grad(Var{&tp, ib})) {
                                Tensor& gb = tp.grad(ib);
                                for (std::size_t i = 0; i < g.size(); ++i)
                                  gb[i] -= g[i];
                              }
                            });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  check_same_shape("mul", A, B);
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  const int ia = a.id, ib = b.id;
  return elementwise_binary(
      "mul", a, b, std::move(out), [ia, ib](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        const Tensor& A2 = tp.value(ia);
        const Tensor& B2 = tp.value(ib);
        if (tp.requires_grad(Var{&tp, ia})) {
          Tensor& ga = tp.grad(ia);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B2[i];
        }
        if (tp.requires_grad(Var{&tp, ib})) {
          Tensor& gb = tp.grad(ib);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A2[i];
        }
      });
}

Var div(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  check_same_shape("div", A, B);
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= B[i];
  const int ia = a.id, ib = b.id;
  return elementwise_binary(
      "div", a, b, std::move(out), [ia, ib](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        const Tensor& A2 = tp.value(ia);
        const Tensor& B2 = tp.value(ib);
        if (tp.requires_grad(Var{&tp, ia})) {
          Tensor& ga = tp.grad(ia);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / B2[i];
        }
        if (tp.requires_grad(Var{&tp, ib})) {
          Tensor& gb = tp.grad(ib);
          for (std::size_t i = 0; i < g.size(); ++i)
            gb[i] -= g[i] * A2[i] / (B2[i] * B2[i]);
        }
      });
}

namespace {

Var rowvec_binary(const char* name, Var a, Var v, int mode) {
  check_same_tape(name, a, v);
  Tape& t = tape_of(a);
  const Tensor& A = t.value(a);
  const Tensor& V = t.value(v);
  check_rowvec(name, A, V);
  const std::size_t m = A.rows(), n = A.cols();
  Tensor out = A;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double& o = out[i * n + j];
      switch (mode) {
        case 0: o += V[j]; break;
        case 1: o -= V[j]; break;
        case 2: o *= V[j]; break;
        default: o /= V[j]; break;
      }
    }
  const int ia = a.id, iv = v.id;
  return t.record(
      std::move(out), rg(a) || rg(v), [ia, iv, m, n, mode](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        const Tensor& A2 = tp.value(ia);
        const Tensor& V2 = tp.value(iv);
        const bool ga_rg = tp.requires_grad(Var{&tp, ia});
        const bool gv_rg = tp.requires_grad(Var{&tp, iv});
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const double gv = g[i * n + j];
            if (gv == 0.0) continue;
            switch (mode) {
              case 0:
                if (ga_rg) tp.grad(ia)[i * n + j] += gv;
                if (gv_rg) tp.grad(iv)[j] += gv;
                break;
              case 1:
                if (ga_rg) tp.grad(ia)[i * n + j] += gv;
                if (gv_rg) tp.grad(iv)[j] -= gv;
                break;
              case 2:
                if (ga_rg) tp.grad(ia)[i * n + j] += gv * V2[j];
                if (gv_rg) tp.grad(iv)[j] += gv * A2[i * n + j];
                break;
              default:
                if (ga_rg) tp.grad(ia)[i * n + j] += gv / V2[j];
                if (gv_rg)
                  tp.grad(iv)[j] -= gv * A2[i * n + j] / (V2[j] * V2[j]);
                break;
            }
          }
      });
}

}  // namespace

Var add_rowvec(Var a, Var v) { return rowvec_binary("add_rowvec", a, v, 0); }
Var sub_rowvec(Var a, Var v) { return rowvec_binary("sub_rowvec", a, v, 1); }
Var mul_rowvec(Var a, Var v) { return rowvec_binary("mul_rowvec", a, v, 2); }
Var div_rowvec(Var a, Var v) { return rowvec_binary("div_rowvec", a, v, 3); }

Var mul_scalar(Var a, Var s) {
  check_same_tape("mul_scalar", a, s);
  Tape& t = tape_of(a);
  if (t.value(s).size() != 1) {
    throw ShapeError("mul_scalar", "second operand must be scalar, got " +
                                       t.value(s).shape_str());
  }
  const double sv = t.value(s)[0];
  Tensor out = t.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= sv;
  const int ia = a.id, is = s.id;
  return t.record(std::move(out), rg(a) || rg(s), [ia, is](Tape& tp,
                                                           int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& A2 = tp.value(ia);
    const double sv2 = tp.value(is)[0];
    if (tp.requires_grad(Var{&tp, ia})) {
      Tensor& ga = tp.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * sv2;
    }
    if (tp.requires_grad(Var{&tp, is})) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * A2[i];
      tp.grad(is)[0] += acc;
    }
  });
}

Var div_scalar(Var a, Var s) {
  check_same_tape("div_scalar", a, s);
  Tape& t = tape_of(a);
  if (t.value(s).size() != 1) {
    throw ShapeError("div_scalar", "second operand must be scalar, got " +
                                       t.value(s).shape_str());
  }
  const double sv = t.value(s)[0];
  Tensor out = t.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= sv;
  const int ia = a.id, is = s.id;
  return t.record(std::move(out), rg(a) || rg(s), [ia, is](Tape& tp,
                                                           int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& A2 = tp.value(ia);
    const double sv2 = tp.value(is)[0];
    if (tp.requires_grad(Var{&tp, ia})) {
      Tensor& ga = tp.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / sv2;
    }
    if (tp.requires_grad(Var{&tp, is})) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * A2[i];
      tp.grad(is)[0] -= acc / (sv2 * sv2);
    }
  });
}

namespace {

Var unary(const char* /*name*/, Var a, Tensor out,
          std::function<void(Tape&, int, int)> back) {
  Tape& t = tape_of(a);
  const int ia = a.id;
  return t.record(std::move(out), rg(a),
                  [ia, back](Tape& tp, int self) {
                    if (tp.requires_grad(Var{&tp, ia})) back(tp, self, ia);
                  });
}

}  // namespace

Var scale(Var a, double c) { return affine(a, c, 0.0); }

Var add_const(Var a, double c) { return affine(a, 1.0, c); }

Var affine(Var a, double m, double c) {
  Tensor out = tape_of(a).value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m * out[i] + c;
  return unary("affine", a, std::move(out), [m](Tape& tp, int self, int ia) {
    const Tensor& g = tp.grad(self);
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += m * g[i];
  });
}

Var neg(Var a) { return affine(a, -1.0, 0.0); }

Var tanh(Var a) {
  Tensor out = tape_of(a).value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  return unary("tanh", a, std::move(out), [](Tape& tp, int self, int ia) {
    const Tensor& g = tp.grad(self);
    const Tensor& y = tp.value(self);
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i)
      ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var sigmoid(Var a) {
  Tensor out = tape_of(a).value(a);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = 1.0 / (1.0 + std::exp(-out[i]));
  return unary("sigmoid", a, std::move(out), [](Tape& tp, int self, int ia) {
    const Tensor& g = tp.grad(self);
    const Tensor& y = tp.value(self);
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i)
      ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var log(Var a) {
  Tensor out = tape_of(a).value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(out[i]);
  return unary("log", a, std::move(out), [](Tape& tp, int self, int ia) {
    const Tensor& g = tp.grad(self);
    const Tensor& x = tp.value(ia);
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
  });
}

Var sqrt(Var a) {
  Tensor out = tape_of(a).value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(out[i]);
  return unary("sqrt", a, std::move(out), [](Tape& tp, int self, int ia) {
    const Tensor& g = tp.grad(self);
    const Tensor& y = tp.value(self);
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i)
      ga[i] += g[i] / (2.0 * y[i]);
  });
}

Var square(Var a) {
  Tensor out = tape_of(a).value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= out[i];
  return unary("square", a, std::move(out), [](Tape& tp, int self, int ia) {
    const Tensor& g = tp.grad(self);
    const Tensor& x = tp.value(ia);
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * g[i] * x[i];
  });
}

Var clamp(Var a, double lo, double hi) {
  Tensor out = tape_of(a).value(a);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = out[i] < lo ? lo : (out[i] > hi ? hi : out[i]);
  return unary("clamp", a, std::move(out),
               [lo, hi](Tape& tp, int self, int ia) {
                 const Tensor& g = tp.grad(self);
                 const Tensor& x = tp.value(ia);
                 Tensor& ga = tp.grad(ia);
                 for (std::size_t i = 0; i < g.size(); ++i)
                   if (x[i] > lo && x[i] < hi) ga[i] += g[i];
               });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat", "no operands");
  Tape& t = tape_of(parts[0]);
  const std::size_t m = t.value(parts[0]).rows();
  std::size_t total = 0;
  bool needs = false;
  for (Var p : parts) {
    check_same_tape("concat", parts[0], p);
    const Tensor& P = t.value(p);
    if (P.rank() != 2 || P.rows() != m) {
      throw ShapeError("concat", "row count mismatch: " + P.shape_str());
    }
    total += P.cols();
    needs = needs || rg(p);
  }
  Tensor out({m, total});
  std::size_t off = 0;
  std::vector<int> ids;
  std::vector<std::size_t> widths;
  for (Var p : parts) {
    const Tensor& P = t.value(p);
    const std::size_t n = P.cols();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        out[i * total + off + j] = P[i * n + j];
    ids.push_back(p.id);
    widths.push_back(n);
    off += n;
  }
  return t.record(std::move(out), needs,
                  [ids, widths, m, total](Tape& tp, int self) {
                    const Tensor& g = tp.grad(self);
                    std::size_t off2 = 0;
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      const std::size_t n = widths[k];
                      if (tp.requires_grad(Var{&tp, ids[k]})) {
                        Tensor& gp = tp.grad(ids[k]);
                        for (std::size_t i = 0; i < m; ++i)
                          for (std::size_t j = 0; j < n; ++j)
                            gp[i * n + j] += g[i * total + off2 + j];
                      }
                      off2 += n;
                    }
                  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat", "no operands");
  Tape& t = tape_of(parts[0]);
  const std::size_t n = t.value(parts[0]).cols();
  std::size_t total = 0;
  bool needs = false;
  for (Var p : parts) {
    check_same_tape("concat", parts[0], p);
    const Tensor& P = t.value(p);
    if (P.rank() != 2 || P.cols() != n) {
      throw ShapeError("concat", "column count mismatch: " + P.shape_str());
    }
    total += P.rows();
    needs = needs || rg(p);
  }
  Tensor out({total, n});
  std::size_t off = 0;
  std::vector<int> ids;
  std::vector<std::size_t> heights;
  for (Var p : parts) {
    const Tensor& P = t.value(p);
    const std::size_t m = P.rows();
    for (std::size_t i = 0; i < m * n; ++i) out[off * n + i] = P[i];
    ids.push_back(p.id);
    heights.push_back(m);
    off += m;
  }
  return t.record(std::move(out), needs,
                  [ids, heights, n](Tape& tp, int self) {
                    const Tensor& g = tp.grad(self);
                    std::size_t off2 = 0;
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      const std::size_t m = heights[k];
                      if (tp.requires_grad(Var{&tp, ids[k]})) {
                        Tensor& gp = tp.grad(ids[k]);
                        for (std::size_t i = 0; i < m * n; ++i)
                          gp[i] += g[off2 * n + i];
                      }
                      off2 += m;
                    }
                  });
}

Var slice_cols(Var a, std::size_t lo, std::size_t hi) {
  Tape& t = tape_of(a);
  const Tensor& A = t.value(a);
  if (A.rank() != 2 || lo >= hi || hi > A.cols()) {
    throw ShapeError("slice", "bad column range [" + std::to_string(lo) +
                                  "," + std::to_string(hi) + ") for " +
                                  A.shape_str());
  }
  const std::size_t m = A.rows(), n = A.cols(), w = hi - lo;
  Tensor out({m, w});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = A[i * n + lo + j];
  return unary("slice", a, std::move(out),
               [m, n, w, lo](Tape& tp, int self, int ia) {
                 const Tensor& g = tp.grad(self);
                 Tensor& ga = tp.grad(ia);
                 for (std::size_t i = 0; i < m; ++i)
                   for (std::size_t j = 0; j < w; ++j)
                     ga[i * n + lo + j] += g[i * w + j];
               });
}

Var slice_rows(Var a, std::size_t lo, std::size_t hi) {
  Tape& t = tape_of(a);
  const Tensor& A = t.value(a);
  if (A.rank() != 2 || lo >= hi || hi > A.rows()) {
    throw ShapeError("slice", "bad row range [" + std::to_string(lo) + "," +
                                  std::to_string(hi) + ") for " +
                                  A.shape_str());
  }
  const std::size_t n = A.cols(), h = hi - lo;
  Tensor out({h, n});
  for (std::size_t i = 0; i < h * n; ++i) out[i] = A[lo * n + i];
  return unary("slice", a, std::move(out),
               [n, h, lo](Tape& tp, int self, int ia) {
                 const Tensor& g = tp.grad(self);
                 Tensor& ga = tp.grad(ia);
                 for (std::size_t i = 0; i < h * n; ++i)
                   ga[lo * n + i] += g[i];
               });
}

Var sum(Var a) {
  const Tensor& A = tape_of(a).value(a);
  double acc = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) acc += A[i];
  return unary("sum", a, Tensor::scalar(acc),
               [](Tape& tp, int self, int ia) {
                 const double g = tp.grad(self)[0];
                 Tensor& ga = tp.grad(ia);
                 for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
               });
}

Var mean(Var a) {
  const Tensor& A = tape_of(a).value(a);
  if (A.size() == 0) throw ShapeError("mean", "empty operand");
  double acc = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) acc += A[i];
  const double inv = 1.0 / static_cast<double>(A.size());
  return unary("mean", a, Tensor::scalar(acc * inv),
               [inv](Tape& tp, int self, int ia) {
                 const double g = tp.grad(self)[0] * inv;
                 Tensor& ga = tp.grad(ia);
                 for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
               });
}

Var colmean(Var a) {
  const Tensor& A = tape_of(a).value(a);
  if (A.rank() != 2 || A.rows() == 0) {
    throw ShapeError("colmean", "expected nonempty (m,n), got " +
                                    A.shape_str());
  }
  const std::size_t m = A.rows(), n = A.cols();
  Tensor out({1, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += A[i * n + j];
  const double inv = 1.0 / static_cast<double>(m);
  for (std::size_t j = 0; j < n; ++j) out[j] *= inv;
  return unary("colmean", a, std::move(out),
               [m, n, inv](Tape& tp, int self, int ia) {
                 const Tensor& g = tp.grad(self);
                 Tensor& ga = tp.grad(ia);
                 for (std::size_t i = 0; i < m; ++i)
                   for (std::size_t j = 0; j < n; ++j)
                     ga[i * n + j] += g[j] * inv;
               });
}

Var reshape(Var a, std::vector<std::size_t> shape) {
  const Tensor& A = tape_of(a).value(a);
  Tensor out(std::move(shape), A.vec());
  return unary("reshape", a, std::move(out),
               [](Tape& tp, int self, int ia) {
                 const Tensor& g = tp.grad(self);
                 Tensor& ga = tp.grad(ia);
                 for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
               });
}

}  // namespace drf
