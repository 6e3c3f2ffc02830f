#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "xferlab/numerics/graph.hpp"

// Differentiable primitives over Graph nodes. Each primitive computes its
// value eagerly and, when an input needs a gradient, records an adjoint rule.
// Rank-1 tensors are treated as a single row wherever a matrix is expected.
namespace xferlab::numerics {

namespace detail {

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ");
  }
}

inline Shape matrix_shape_like(const Tensor& like, std::size_t rows, std::size_t cols) {
  if (like.rank() <= 1 && rows == 1) return {cols};
  return {rows, cols};
}

// C[m x n] += A[m x k] * B[k x n]
inline void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C[m x n] += A[m x k] * B[n x k]^T
inline void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c[i * n + j] += s;
    }
  }
}

// C[k x n] += A[m x k]^T * B[m x n]
inline void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

inline void softmax_row(const double* x, double* y, std::size_t n) {
  double mx = *std::max_element(x, x + n);
  double z = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    y[j] = std::exp(x[j] - mx);
    z += y[j];
  }
  for (std::size_t j = 0; j < n; ++j) y[j] /= z;
}

inline void layer_norm_row(const double* x, const double* gain, const double* bias, double eps, double* y,
                           std::size_t n) {
  double mean = 0.0;
  for (std::size_t j = 0; j < n; ++j) mean += x[j];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t j = 0; j < n; ++j) var += (x[j] - mean) * (x[j] - mean);
  var /= static_cast<double>(n);
  const double inv = 1.0 / std::sqrt(var + eps);
  for (std::size_t j = 0; j < n; ++j) y[j] = (x[j] - mean) * inv * gain[j] + bias[j];
}

}  // namespace detail

inline Var matmul(Graph& g, Var a, Var b) {
  const auto& A = g.value(a);
  const auto& B = g.value(b);
  const auto m = A.rows(), k = A.cols(), n = B.cols();
  if (B.rows() != k || A.rank() > 2 || B.rank() > 2) {
    throw DimensionError("matmul: " + shape_string(A.shape()) + " x " + shape_string(B.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  detail::gemm_nn(A.data().data(), B.data().data(), out.data(), m, k, n);
  return g.record(Tensor(detail::matrix_shape_like(A, m, n), std::move(out)), {a, b},
                  [m, k, n](Graph& g, std::size_t self) {
                    const auto& dc = *g.value(self).grad();
                    auto ia = g.inputs(self)[0], ib = g.inputs(self)[1];
                    if (g.requires_grad(ia)) {
                      detail::gemm_nt(dc.data(), g.value(ib).data().data(), g.adjoint(ia).data(), m, n, k);
                    }
                    if (g.requires_grad(ib)) {
                      detail::gemm_tn(g.value(ia).data().data(), dc.data(), g.adjoint(ib).data(), m, k, n);
                    }
                  });
}

// a * b^T, used for attention scores.
inline Var matmul_nt(Graph& g, Var a, Var b) {
  const auto& A = g.value(a);
  const auto& B = g.value(b);
  const auto m = A.rows(), k = A.cols(), n = B.rows();
  if (B.cols() != k) {
    throw DimensionError("matmul_nt: " + shape_string(A.shape()) + " x " + shape_string(B.shape()) + "^T");
  }
  std::vector<double> out(m * n, 0.0);
  detail::gemm_nt(A.data().data(), B.data().data(), out.data(), m, k, n);
  return g.record(Tensor({m, n}, std::move(out)), {a, b}, [m, k, n](Graph& g, std::size_t self) {
    const auto& dc = *g.value(self).grad();
    auto ia = g.inputs(self)[0], ib = g.inputs(self)[1];
    if (g.requires_grad(ia)) {
      detail::gemm_nn(dc.data(), g.value(ib).data().data(), g.adjoint(ia).data(), m, n, k);
    }
    if (g.requires_grad(ib)) {
      detail::gemm_tn(dc.data(), g.value(ia).data().data(), g.adjoint(ib).data(), m, n, k);
    }
  });
}

inline Var add(Graph& g, Var a, Var b) {
  const auto& A = g.value(a);
  const auto& B = g.value(b);
  detail::require_same_shape(A, B, "add");
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] + B[i];
  return g.record(Tensor(A.shape(), std::move(out)), {a, b}, [](Graph& g, std::size_t self) {
    const auto& d = *g.value(self).grad();
    for (auto in : g.inputs(self)) {
      if (!g.requires_grad(in)) continue;
      auto& da = g.adjoint(in);
      for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i];
    }
  });
}

inline Var sub(Graph& g, Var a, Var b) {
  const auto& A = g.value(a);
  const auto& B = g.value(b);
  detail::require_same_shape(A, B, "sub");
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] - B[i];
  return g.record(Tensor(A.shape(), std::move(out)), {a, b}, [](Graph& g, std::size_t self) {
    const auto& d = *g.value(self).grad();
    auto ia = g.inputs(self)[0], ib = g.inputs(self)[1];
    if (g.requires_grad(ia)) {
      auto& da = g.adjoint(ia);
      for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i];
    }
    if (g.requires_grad(ib)) {
      auto& db = g.adjoint(ib);
      for (std::size_t i = 0; i < d.size(); ++i) db[i] -= d[i];
    }
  });
}

// Elementwise product.
inline Var mul(Graph& g, Var a, Var b) {
  const auto& A = g.value(a);
  const auto& B = g.value(b);
  detail::require_same_shape(A, B, "mul");
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * B[i];
  return g.record(Tensor(A.shape(), std::move(out)), {a, b}, [](Graph& g, std::size_t self) {
    const auto& d = *g.value(self).grad();
    auto ia = g.inputs(self)[0], ib = g.inputs(self)[1];
    if (g.requires_grad(ia)) {
      auto& da = g.adjoint(ia);
      const auto& B = g.value(ib);
      for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i] * B[i];
    }
    if (g.requires_grad(ib)) {
      auto& db = g.adjoint(ib);
      const auto& A = g.value(ia);
      for (std::size_t i = 0; i < d.size(); ++i) db[i] += d[i] * A[i];
    }
  });
}

inline Var scale(Graph& g, Var a, double s) {
  const auto& A = g.value(a);
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * s;
  return g.record(Tensor(A.shape(), std::move(out)), {a}, [s](Graph& g, std::size_t self) {
    const auto& d = *g.value(self).grad();
    auto& da = g.adjoint(g.inputs(self)[0]);
    for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i] * s;
  });
}

// x[r x n] + bias[n] on every row.
inline Var add_bias(Graph& g, Var x, Var bias) {
  const auto& X = g.value(x);
  const auto& B = g.value(bias);
  const auto r = X.rows(), n = X.cols();
  if (B.size() != n) {
    throw DimensionError("add_bias: " + shape_string(X.shape()) + " with bias " + shape_string(B.shape()));
  }
  std::vector<double> out(X.data().begin(), X.data().end());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += B[j];
  return g.record(Tensor(X.shape(), std::move(out)), {x, bias}, [r, n](Graph& g, std::size_t self) {
    const auto& d = *g.value(self).grad();
    auto ix = g.inputs(self)[0], ib = g.inputs(self)[1];
    if (g.requires_grad(ix)) {
      auto& dx = g.adjoint(ix);
      for (std::size_t i = 0; i < d.size(); ++i) dx[i] += d[i];
    }
    if (g.requires_grad(ib)) {
      auto& db = g.adjoint(ib);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < n; ++j) db[j] += d[i * n + j];
    }
  });
}

// Stacks the rows of a on top of the rows of b.
inline Var concat_rows(Graph& g, Var a, Var b) {
  const auto& A = g.value(a);
  const auto& B = g.value(b);
  if (A.cols() != B.cols()) {
    throw DimensionError("concat_rows: " + shape_string(A.shape()) + " and " + shape_string(B.shape()));
  }
  const auto ra = A.rows(), rb = B.rows(), n = A.cols();
  std::vector<double> out;
  out.reserve((ra + rb) * n);
  out.insert(out.end(), A.data().begin(), A.data().end());
  out.insert(out.end(), B.data().begin(), B.data().end());
  return g.record(Tensor({ra + rb, n}, std::move(out)), {a, b}, [ra, n](Graph& g, std::size_t self) {
    const auto& d = *g.value(self).grad();
    auto ia = g.inputs(self)[0], ib = g.inputs(self)[1];
    if (g.requires_grad(ia)) {
      auto& da = g.adjoint(ia);
      for (std::size_t i = 0; i < ra * n; ++i) da[i] += d[i];
    }
    if (g.requires_grad(ib)) {
      auto& db = g.adjoint(ib);
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += d[ra * n + i];
    }
  });
}

inline Var slice_rows(Graph& g, Var a, std::size_t start, std::size_t count) {
  const auto& A = g.value(a);
  const auto n = A.cols();
  if (count == 0 || start + count > A.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") of " + shape_string(A.shape()));
  }
  std::vector<double> out(A.data().begin() + start * n, A.data().begin() + (start + count) * n);
  Shape shape = count == 1 && A.rank() <= 1 ? Shape{n} : Shape{count, n};
  return g.record(Tensor(shape, std::move(out)), {a}, [start, n](Graph& g, std::size_t self) {
    const auto& d = *g.value(self).grad();
    auto& da = g.adjoint(g.inputs(self)[0]);
    for (std::size_t i = 0; i < d.size(); ++i) da[start * n + i] += d[i];
  });
}

// Single row as a rank-1 vector.
inline Var row(Graph& g, Var a, std::size_t r) {
  const auto& A = g.value(a);
  const auto n = A.cols();
  if (r >= A.rows()) throw IndexError("row " + std::to_string(r) + " of " + shape_string(A.shape()));
  std::vector<double> out(A.data().begin() + r * n, A.data().begin() + (r + 1) * n);
  return g.record(Tensor({n}, std::move(out)), {a}, [r, n](Graph& g, std::size_t self) {
    const auto& d = *g.value(self).grad();
    auto& da = g.adjoint(g.inputs(self)[0]);
    for (std::size_t j = 0; j < n; ++j) da[r * n + j] += d[j];
  });
}

inline Var slice_cols(Graph& g, Var a, std::size_t start, std::size_t count) {
  const auto& A = g.value(a);
  const auto r = A.rows(), n = A.cols();
  if (count == 0 || start + count > n) {
    throw DimensionError("slice_cols: cols [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") of " + shape_string(A.shape()));
  }
  std::vector<double> out(r * count);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < count; ++j) out[i * count + j] = A.data()[i * n + start + j];
  return g.record(Tensor({r, count}, std::move(out)), {a}, [r, n, start, count](Graph& g, std::size_t self) {
    const auto& d = *g.value(self).grad();
    auto& da = g.adjoint(g.inputs(self)[0]);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < count; ++j) da[i * n + start + j] += d[i * count + j];
  });
}

// Single column as a rank-1 vector of length rows().
inline Var column(Graph& g, Var a, std::size_t c) {
  const auto& A = g.value(a);
  const auto r = A.rows(), n = A.cols();
  if (c >= n) throw IndexError("column " + std::to_string(c) + " of " + shape_string(A.shape()));
  std::vector<double> out(r);
  for (std::size_t i = 0; i < r; ++i) out[i] = A.data()[i * n + c];
  return g.record(Tensor({r}, std::move(out)), {a}, [r, n, c](Graph& g, std::size_t self) {
    const auto& d = *g.value(self).grad();
    auto& da = g.adjoint(g.inputs(self)[0]);
    for (std::size_t i = 0; i < r; ++i) da[i * n + c] += d[i];
  });
}

inline Var concat_cols(Graph& g, const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const auto r = g.value(parts[0]).rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (auto p : parts) {
    const auto& P = g.value(p);
    if (P.rows() != r) throw DimensionError("concat_cols: row count mismatch at " + shape_string(P.shape()));
    widths.push_back(P.cols());
    total += P.cols();
  }
  std::vector<double> out(r * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& P = g.value(parts[k]);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j) out[i * total + offset + j] = P.data()[i * widths[k] + j];
    offset += widths[k];
  }
  return g.record(Tensor({r, total}, std::move(out)), parts, [r, total, widths](Graph& g, std::size_t self) {
    const auto& d = *g.value(self).grad();
    std::size_t offset = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      auto in = g.inputs(self)[k];
      if (g.requires_grad(in)) {
        auto& da = g.adjoint(in);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < widths[k]; ++j) da[i * widths[k] + j] += d[i * total + offset + j];
      }
      offset += widths[k];
    }
  });
}

// Row-wise softmax with max subtraction.
inline Var softmax(Graph& g, Var a) {
  const auto& A = g.value(a);
  const auto r = A.rows(), n = A.cols();
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < r; ++i) detail::softmax_row(A.data().data() + i * n, out.data() + i * n, n);
  return g.record(Tensor(A.shape(), std::move(out)), {a}, [r, n](Graph& g, std::size_t self) {
    const auto& y = g.value(self).data();
    const auto& d = *g.value(self).grad();
    auto& da = g.adjoint(g.inputs(self)[0]);
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += d[i * n + j] * y[i * n + j];
      for (std::size_t j = 0; j < n; ++j) da[i * n + j] += y[i * n + j] * (d[i * n + j] - dot);
    }
  });
}

// Row-wise (x - mean) / sqrt(var + eps) * gain + bias with the biased (1/n)
// variance.
inline Var layer_norm(Graph& g, Var x, Var gain, Var bias, double eps) {
  const auto& X = g.value(x);
  const auto r = X.rows(), n = X.cols();
  if (n < 2) throw DimensionError("layer_norm needs at least 2 features, got " + shape_string(X.shape()));
  if (g.value(gain).size() != n || g.value(bias).size() != n) {
    throw DimensionError("layer_norm: gain/bias length must be " + std::to_string(n));
  }
  const auto& G = g.value(gain);
  const auto& B = g.value(bias);
  std::vector<double> out(X.size());
  for (std::size_t i = 0; i < r; ++i) {
    detail::layer_norm_row(X.data().data() + i * n, G.data().data(), B.data().data(), eps, out.data() + i * n, n);
  }
  return g.record(Tensor(X.shape(), std::move(out)), {x, gain, bias}, [r, n, eps](Graph& g, std::size_t self) {
    const auto& d = *g.value(self).grad();
    auto ix = g.inputs(self)[0], ig = g.inputs(self)[1], ib = g.inputs(self)[2];
    const auto& X = g.value(ix);
    const auto& G = g.value(ig);
    std::vector<double> xhat(n), dxhat(n);
    for (std::size_t i = 0; i < r; ++i) {
      const double* xi = X.data().data() + i * n;
      const double* di = d.data() + i * n;
      double mean = 0.0;
      for (std::size_t j = 0; j < n; ++j) mean += xi[j];
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t j = 0; j < n; ++j) var += (xi[j] - mean) * (xi[j] - mean);
      var /= static_cast<double>(n);
      const double inv = 1.0 / std::sqrt(var + eps);
      double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        xhat[j] = (xi[j] - mean) * inv;
        dxhat[j] = di[j] * G[j];
        mean_dxhat += dxhat[j];
        mean_dxhat_xhat += dxhat[j] * xhat[j];
      }
      mean_dxhat /= static_cast<double>(n);
      mean_dxhat_xhat /= static_cast<double>(n);
      if (g.requires_grad(ix)) {
        auto& dx = g.adjoint(ix);
        for (std::size_t j = 0; j < n; ++j) dx[i * n + j] += inv * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
      }
      if (g.requires_grad(ig)) {
        auto& dg = g.adjoint(ig);
        for (std::size_t j = 0; j < n; ++j) dg[j] += di[j] * xhat[j];
      }
      if (g.requires_grad(ib)) {
        auto& db = g.adjoint(ib);
        for (std::size_t j = 0; j < n; ++j) db[j] += di[j];
      }
    }
  });
}

inline double gelu_value(double x) {
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x)));
}

inline double gelu_derivative(double x) {
  constexpr double c = 0.7978845608028654;
  const double t = std::tanh(c * (x + 0.044715 * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c * (1.0 + 3.0 * 0.044715 * x * x);
}

// tanh-approximated GELU, elementwise.
inline Var gelu(Graph& g, Var a) {
  const auto& A = g.value(a);
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gelu_value(A[i]);
  return g.record(Tensor(A.shape(), std::move(out)), {a}, [](Graph& g, std::size_t self) {
    const auto& d = *g.value(self).grad();
    auto in = g.inputs(self)[0];
    const auto& A = g.value(in);
    auto& da = g.adjoint(in);
    for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i] * gelu_derivative(A[i]);
  });
}

inline Var sum(Graph& g, Var a) {
  const auto& A = g.value(a);
  double s = 0.0;
  for (double v : A.data()) s += v;
  return g.record(Tensor::scalar(s), {a}, [](Graph& g, std::size_t self) {
    const double d = (*g.value(self).grad())[0];
    auto& da = g.adjoint(g.inputs(self)[0]);
    for (auto& v : da) v += d;
  });
}

inline Var sum_squares(Graph& g, Var a) {
  const auto& A = g.value(a);
  double s = 0.0;
  for (double v : A.data()) s += v * v;
  return g.record(Tensor::scalar(s), {a}, [](Graph& g, std::size_t self) {
    const double d = (*g.value(self).grad())[0];
    auto in = g.inputs(self)[0];
    const auto& A = g.value(in);
    auto& da = g.adjoint(in);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += 2.0 * d * A[i];
  });
}

// Sum of scalar nodes in the given order.
inline Var add_scalars(Graph& g, const std::vector<Var>& terms) {
  if (terms.empty()) return g.constant(Tensor::scalar(0.0));
  double s = 0.0;
  for (auto t : terms) s += g.value(t).item();
  return g.record(Tensor::scalar(s), terms, [](Graph& g, std::size_t self) {
    const double d = (*g.value(self).grad())[0];
    for (auto in : g.inputs(self)) {
      if (g.requires_grad(in)) g.adjoint(in)[0] += d;
    }
  });
}

// -log softmax(logits)[label] for a single logit vector.
inline Var cross_entropy(Graph& g, Var logits, std::size_t label) {
  const auto& L = g.value(logits);
  const auto c = L.size();
  if (label >= c) {
    throw IndexError("label " + std::to_string(label) + " outside [0, " + std::to_string(c) + ")");
  }
  const auto top = std::max_element(L.data().begin(), L.data().end());
  const double mx = *top;
  double rest = 0.0;  // sum of exp(v - max) over non-maximal entries, for log1p
  for (auto it = L.data().begin(); it != L.data().end(); ++it) {
    if (it != top) rest += std::exp(*it - mx);
  }
  return g.record(Tensor::scalar((mx - L[label]) + std::log1p(rest)), {logits}, [label, c](Graph& g, std::size_t self) {
    const double d = (*g.value(self).grad())[0];
    auto in = g.inputs(self)[0];
    const auto& L = g.value(in);
    double mx = *std::max_element(L.data().begin(), L.data().end());
    double z = 0.0;
    for (double v : L.data()) z += std::exp(v - mx);
    auto& da = g.adjoint(in);
    for (std::size_t j = 0; j < c; ++j) {
      da[j] += d * (std::exp(L[j] - mx) / z - (j == label ? 1.0 : 0.0));
    }
  });
}

// Plain-value conveniences built on the primitives above.
inline std::vector<double> softmax_values(std::span<const double> v) {
  Graph g;
  auto x = g.constant(Tensor::vector({v.begin(), v.end()}));
  auto y = softmax(g, x);
  auto d = g.value(y).data();
  return {d.begin(), d.end()};
}

inline double cross_entropy_value(std::span<const double> logits, std::size_t label) {
  Graph g;
  auto x = g.constant(Tensor::vector({logits.begin(), logits.end()}));
  return g.value(cross_entropy(g, x, label)).item();
}

}  // namespace xferlab::numerics
