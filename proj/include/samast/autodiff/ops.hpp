#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "samast/autodiff/graph.hpp"
#include "samast/core/error.hpp"
#include "samast/core/tensor.hpp"

// Differentiable operations over Graph nodes. Each op computes its forward
// value eagerly and records a backward rule that accumulates into the
// gradients of inputs that require grad.
namespace samast::ad {

namespace detail {

inline void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + " expects a matrix, got " + shape_string(t.shape()));
  }
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

// c[m x n] += a[m x k] * b[k x n]. Four rows share each load of b; every
// output element still accumulates over p in order.
inline void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t k, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    double* c0 = c + i * n;
    double* c1 = c0 + n;
    double* c2 = c1 + n;
    double* c3 = c2 + n;
    const double* a0 = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double x0 = a0[p], x1 = a0[k + p], x2 = a0[2 * k + p], x3 = a0[3 * k + p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double bj = bp[j];
        c0[j] += x0 * bj;
        c1[j] += x1 * bj;
        c2[j] += x2 * bj;
        c3[j] += x3 * bj;
      }
    }
  }
  for (; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

// c[m x k] += g[m x n] * b[k x n]^T. b is transposed once so the inner loop
// runs over contiguous memory.
inline void gemm_nt(const double* g, const double* b, double* c, std::size_t m,
                    std::size_t n, std::size_t k) {
  std::vector<double> bt(n * k);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
  gemm_nn(g, bt.data(), c, m, n, k);
}

// c[k x n] += a[m x k]^T * g[m x n]. Rows of g are taken four at a time and
// added in order, so each output element sums over i in order.
inline void gemm_tn(const double* a, const double* g, double* c, std::size_t m,
                    std::size_t k, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const double* a0 = a + i * k;
    const double* g0 = g + i * n;
    const double* g1 = g0 + n;
    const double* g2 = g1 + n;
    const double* g3 = g2 + n;
    for (std::size_t p = 0; p < k; ++p) {
      const double x0 = a0[p], x1 = a0[k + p], x2 = a0[2 * k + p], x3 = a0[3 * k + p];
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        double v = cp[j];
        v += x0 * g0[j];
        v += x1 * g1[j];
        v += x2 * g2[j];
        v += x3 * g3[j];
        cp[j] = v;
      }
    }
  }
  for (; i < m; ++i) {
    const double* ai = a + i * k;
    const double* gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += aip * gi[j];
    }
  }
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace detail

inline Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  detail::require_matrix(av, "matmul");
  detail::require_matrix(bv, "matmul");
  const std::size_t m = av.shape()[0], k = av.shape()[1], n = bv.shape()[1];
  if (bv.shape()[0] != k) {
    throw DimensionError("matmul: inner dimensions disagree for " + shape_string(av.shape()) +
                         " x " + shape_string(bv.shape()));
  }
  Tensor out(Shape{m, n});
  detail::gemm_nn(av.data().data(), bv.data().data(), out.data().data(), m, k, n);
  return a.graph().record(
      "matmul", {a.id(), b.id()}, std::move(out),
      [ia = a.id(), ib = b.id(), m, k, n](Graph& g, std::size_t self) {
        const double* up = g.upstream(self).data().data();
        if (g.requires_grad(ia)) {
          detail::gemm_nt(up, g.value(ib).data().data(), g.grad_buffer(ia).data().data(), m, n, k);
        }
        if (g.requires_grad(ib)) {
          detail::gemm_tn(g.value(ia).data().data(), up, g.grad_buffer(ib).data().data(), m, k, n);
        }
      });
}

inline Var transpose(Var a) {
  const Tensor& av = a.value();
  detail::require_matrix(av, "transpose");
  const std::size_t m = av.shape()[0], n = av.shape()[1];
  Tensor out(Shape{n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  return a.graph().record("transpose", {a.id()}, std::move(out),
                          [ia = a.id(), m, n](Graph& g, std::size_t self) {
                            const Tensor& up = g.upstream(self);
                            Tensor& ga = g.grad_buffer(ia);
                            for (std::size_t i = 0; i < m; ++i)
                              for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += up[j * m + i];
                          });
}

inline Var add(Var a, Var b) {
  detail::require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.graph().record("add", {a.id(), b.id()}, std::move(out),
                          [ia = a.id(), ib = b.id()](Graph& g, std::size_t self) {
                            const Tensor& up = g.upstream(self);
                            for (std::size_t in : {ia, ib}) {
                              if (!g.requires_grad(in)) continue;
                              Tensor& gi = g.grad_buffer(in);
                              for (std::size_t i = 0; i < up.size(); ++i) gi[i] += up[i];
                            }
                          });
}

inline Var mul(Var a, Var b) {
  detail::require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.graph().record("mul", {a.id(), b.id()}, std::move(out),
                          [ia = a.id(), ib = b.id()](Graph& g, std::size_t self) {
                            const Tensor& up = g.upstream(self);
                            if (g.requires_grad(ia)) {
                              Tensor& ga = g.grad_buffer(ia);
                              const Tensor& bv = g.value(ib);
                              for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i] * bv[i];
                            }
                            if (g.requires_grad(ib)) {
                              Tensor& gb = g.grad_buffer(ib);
                              const Tensor& av = g.value(ia);
                              for (std::size_t i = 0; i < up.size(); ++i) gb[i] += up[i] * av[i];
                            }
                          });
}

inline Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& v : out.values()) v *= factor;
  return a.graph().record("scale", {a.id()}, std::move(out),
                          [ia = a.id(), factor](Graph& g, std::size_t self) {
                            const Tensor& up = g.upstream(self);
                            Tensor& ga = g.grad_buffer(ia);
                            for (std::size_t i = 0; i < up.size(); ++i) ga[i] += factor * up[i];
                          });
}

// x[m x n] + bias[n] broadcast over rows.
inline Var add_bias(Var x, Var bias) {
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  const std::size_t n = xv.cols();
  if (bv.size() != n) {
    throw DimensionError("add_bias: bias " + shape_string(bv.shape()) + " does not match rows of " +
                         shape_string(xv.shape()));
  }
  Tensor out = xv;
  const std::size_t m = xv.size() / n;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bv[j];
  return x.graph().record("add_bias", {x.id(), bias.id()}, std::move(out),
                          [ix = x.id(), ib = bias.id(), m, n](Graph& g, std::size_t self) {
                            const Tensor& up = g.upstream(self);
                            if (g.requires_grad(ix)) {
                              Tensor& gx = g.grad_buffer(ix);
                              for (std::size_t i = 0; i < up.size(); ++i) gx[i] += up[i];
                            }
                            if (g.requires_grad(ib)) {
                              Tensor& gb = g.grad_buffer(ib);
                              for (std::size_t i = 0; i < m; ++i)
                                for (std::size_t j = 0; j < n; ++j) gb[j] += up[i * n + j];
                            }
                          });
}

inline Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return a.graph().record("sum", {a.id()}, Tensor::scalar(s),
                          [ia = a.id()](Graph& g, std::size_t self) {
                            const double up = g.upstream(self)[0];
                            for (double& v : g.grad_buffer(ia).values()) v += up;
                          });
}

// Exact Gaussian-CDF GELU: x * Phi(x).
inline Var gelu(Var a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = v * detail::normal_cdf(v);
  return a.graph().record("gelu", {a.id()}, std::move(out),
                          [ia = a.id()](Graph& g, std::size_t self) {
                            const Tensor& up = g.upstream(self);
                            const Tensor& x = g.value(ia);
                            Tensor& ga = g.grad_buffer(ia);
                            for (std::size_t i = 0; i < up.size(); ++i) {
                              const double d = detail::normal_cdf(x[i]) + x[i] * detail::normal_pdf(x[i]);
                              ga[i] += up[i] * d;
                            }
                          });
}

// Softmax along `axis`, max-subtracted.
inline Var softmax(Var a, std::size_t axis) {
  const Tensor& av = a.value();
  if (axis >= av.rank()) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for " +
                         shape_string(av.shape()));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= av.shape()[d];
  for (std::size_t d = axis + 1; d < av.rank(); ++d) inner *= av.shape()[d];
  const std::size_t len = av.shape()[axis];
  Tensor out(av.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      double mx = av[base];
      for (std::size_t k = 1; k < len; ++k) mx = std::max(mx, av[base + k * inner]);
      double z = 0.0;
      for (std::size_t k = 0; k < len; ++k) {
        const double e = std::exp(av[base + k * inner] - mx);
        out[base + k * inner] = e;
        z += e;
      }
      const double inv = 1.0 / z;
      for (std::size_t k = 0; k < len; ++k) out[base + k * inner] *= inv;
    }
  }
  return a.graph().record(
      "softmax", {a.id()}, std::move(out),
      [ia = a.id(), outer, inner, len](Graph& g, std::size_t self) {
        const Tensor& up = g.upstream(self);
        const Tensor& y = g.value(self);
        Tensor& ga = g.grad_buffer(ia);
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = o * len * inner + in;
            double dot = 0.0;
            for (std::size_t k = 0; k < len; ++k) dot += up[base + k * inner] * y[base + k * inner];
            for (std::size_t k = 0; k < len; ++k) {
              const std::size_t idx = base + k * inner;
              ga[idx] += y[idx] * (up[idx] - dot);
            }
          }
        }
      });
}

// Row-wise normalization over the last dimension followed by gain and bias.
inline Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5) {
  const Tensor& xv = x.value();
  const std::size_t n = xv.cols();
  if (gain.value().size() != n || bias.value().size() != n) {
    throw DimensionError("layer_norm: gain " + shape_string(gain.shape()) + " / bias " +
                         shape_string(bias.shape()) + " do not match " + shape_string(xv.shape()));
  }
  const std::size_t m = xv.size() / n;
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  Tensor out(xv.shape());
  std::vector<double> xhat(xv.size());
  std::vector<double> inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data().data() + i * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += row[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      const double h = (row[j] - mean) * inv_std[i];
      xhat[i * n + j] = h;
      out[i * n + j] = h * gv[j] + bv[j];
    }
  }
  return x.graph().record(
      "layer_norm", {x.id(), gain.id(), bias.id()}, std::move(out),
      [ix = x.id(), ig = gain.id(), ib = bias.id(), m, n, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](Graph& g, std::size_t self) {
        const Tensor& up = g.upstream(self);
        if (g.requires_grad(ig)) {
          Tensor& gg = g.grad_buffer(ig);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gg[j] += up[i * n + j] * xhat[i * n + j];
        }
        if (g.requires_grad(ib)) {
          Tensor& gb = g.grad_buffer(ib);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gb[j] += up[i * n + j];
        }
        if (g.requires_grad(ix)) {
          const Tensor& gv = g.value(ig);
          Tensor& gx = g.grad_buffer(ix);
          const double inv_n = 1.0 / static_cast<double>(n);
          for (std::size_t i = 0; i < m; ++i) {
            double s1 = 0.0, s2 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              const double dh = up[i * n + j] * gv[j];
              s1 += dh;
              s2 += dh * xhat[i * n + j];
            }
            for (std::size_t j = 0; j < n; ++j) {
              const double dh = up[i * n + j] * gv[j];
              gx[i * n + j] += inv_std[i] * (dh - inv_n * s1 - xhat[i * n + j] * inv_n * s2);
            }
          }
        }
      });
}

// Mean over the batch of -log softmax(logits)[label]; logits are [B x K].
inline Var cross_entropy(Var logits, std::span<const int> labels) {
  const Tensor& lv = logits.value();
  detail::require_matrix(lv, "cross_entropy");
  const std::size_t batch = lv.shape()[0], k = lv.shape()[1];
  if (labels.size() != batch) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         shape_string(lv.shape()) + " logits");
  }
  for (std::size_t b = 0; b < batch; ++b) {
    if (labels[b] < 0 || static_cast<std::size_t>(labels[b]) >= k) {
      throw LabelError("cross_entropy: label " + std::to_string(labels[b]) + " at index " +
                           std::to_string(b) + " outside [0, " + std::to_string(k) + ")",
                       static_cast<long long>(b));
    }
  }
  Tensor probs(lv.shape());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* row = lv.data().data() + b * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    loss += lse - row[labels[b]];
    for (std::size_t j = 0; j < k; ++j) probs[b * k + j] = std::exp(row[j] - lse);
  }
  loss /= static_cast<double>(batch);
  std::vector<int> owned(labels.begin(), labels.end());
  return logits.graph().record(
      "cross_entropy", {logits.id()}, Tensor::scalar(loss),
      [il = logits.id(), batch, k, probs = std::move(probs), owned = std::move(owned)](
          Graph& g, std::size_t self) {
        const double up = g.upstream(self)[0] / static_cast<double>(batch);
        Tensor& gl = g.grad_buffer(il);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t j = 0; j < k; ++j) {
            const double onehot = static_cast<int>(j) == owned[b] ? 1.0 : 0.0;
            gl[b * k + j] += up * (probs[b * k + j] - onehot);
          }
        }
      });
}

inline Var reshape(Var a, Shape shape) {
  if (shape_size(shape) != a.value().size()) {
    throw DimensionError("reshape: " + shape_string(a.shape()) + " to " + shape_string(shape));
  }
  Tensor out(std::move(shape), a.value().data());
  return a.graph().record("reshape", {a.id()}, std::move(out),
                          [ia = a.id()](Graph& g, std::size_t self) {
                            const Tensor& up = g.upstream(self);
                            Tensor& ga = g.grad_buffer(ia);
                            for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i];
                          });
}

inline Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  detail::require_matrix(av, "slice_rows");
  const std::size_t n = av.shape()[1];
  if (count == 0 || begin + count > av.shape()[0]) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " + shape_string(av.shape()));
  }
  std::vector<double> vals(av.data().begin() + static_cast<std::ptrdiff_t>(begin * n),
                           av.data().begin() + static_cast<std::ptrdiff_t>((begin + count) * n));
  return a.graph().record("slice_rows", {a.id()}, Tensor(Shape{count, n}, std::move(vals)),
                          [ia = a.id(), offset = begin * n](Graph& g, std::size_t self) {
                            const Tensor& up = g.upstream(self);
                            Tensor& ga = g.grad_buffer(ia);
                            for (std::size_t i = 0; i < up.size(); ++i) ga[offset + i] += up[i];
                          });
}

inline Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  detail::require_matrix(av, "slice_cols");
  const std::size_t m = av.shape()[0], n = av.shape()[1];
  if (count == 0 || begin + count > n) {
    throw DimensionError("slice_cols: cols [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " + shape_string(av.shape()));
  }
  Tensor out(Shape{m, count});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < count; ++j) out[i * count + j] = av[i * n + begin + j];
  return a.graph().record("slice_cols", {a.id()}, std::move(out),
                          [ia = a.id(), m, n, begin, count](Graph& g, std::size_t self) {
                            const Tensor& up = g.upstream(self);
                            Tensor& ga = g.grad_buffer(ia);
                            for (std::size_t i = 0; i < m; ++i)
                              for (std::size_t j = 0; j < count; ++j)
                                ga[i * n + begin + j] += up[i * count + j];
                          });
}

inline Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t n = parts[0].value().cols();
  std::size_t rows = 0;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    detail::require_matrix(p.value(), "concat_rows");
    if (p.value().cols() != n) {
      throw DimensionError("concat_rows: column mismatch " + shape_string(parts[0].shape()) +
                           " vs " + shape_string(p.shape()));
    }
    rows += p.value().rows();
    ids.push_back(p.id());
  }
  std::vector<double> vals;
  vals.reserve(rows * n);
  for (const Var& p : parts) vals.insert(vals.end(), p.value().data().begin(), p.value().data().end());
  return parts[0].graph().record("concat_rows", ids, Tensor(Shape{rows, n}, std::move(vals)),
                                 [ids](Graph& g, std::size_t self) {
                                   const Tensor& up = g.upstream(self);
                                   std::size_t offset = 0;
                                   for (std::size_t id : ids) {
                                     const std::size_t len = g.value(id).size();
                                     if (g.requires_grad(id)) {
                                       Tensor& gi = g.grad_buffer(id);
                                       for (std::size_t i = 0; i < len; ++i) gi[i] += up[offset + i];
                                     }
                                     offset += len;
                                   }
                                 });
}

inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t m = parts[0].value().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids, widths;
  for (const Var& p : parts) {
    detail::require_matrix(p.value(), "concat_cols");
    if (p.value().rows() != m) {
      throw DimensionError("concat_cols: row mismatch " + shape_string(parts[0].shape()) +
                           " vs " + shape_string(p.shape()));
    }
    ids.push_back(p.id());
    widths.push_back(p.value().cols());
    cols += p.value().cols();
  }
  Tensor out(Shape{m, cols});
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& pv = parts[k].value();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j) out[i * cols + offset + j] = pv[i * widths[k] + j];
    offset += widths[k];
  }
  return parts[0].graph().record(
      "concat_cols", ids, std::move(out), [ids, widths, m, cols](Graph& g, std::size_t self) {
        const Tensor& up = g.upstream(self);
        std::size_t offset = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (g.requires_grad(ids[k])) {
            Tensor& gi = g.grad_buffer(ids[k]);
            for (std::size_t i = 0; i < m; ++i)
              for (std::size_t j = 0; j < widths[k]; ++j)
                gi[i * widths[k] + j] += up[i * cols + offset + j];
          }
          offset += widths[k];
        }
      });
}

}  // namespace samast::ad
