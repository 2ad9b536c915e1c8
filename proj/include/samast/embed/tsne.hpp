#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "samast/core/error.hpp"
#include "samast/core/key_values.hpp"
#include "samast/core/rng.hpp"
#include "samast/core/tensor.hpp"

namespace samast::embed {

struct TsneConfig {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  double learning_rate = 200.0;
  double momentum = 0.5;
  double final_momentum = 0.8;
  std::size_t momentum_switch = 250;
  double exaggeration = 12.0;
  std::size_t exaggeration_iterations = 250;
  std::uint64_t seed = 0;

  friend bool operator==(const TsneConfig&, const TsneConfig&) = default;

  void validate(std::size_t n) const {
    if (n < 4) throw ConfigError("t-SNE needs at least 4 points, got " + std::to_string(n));
    if (!(perplexity >= 1.0) || !(perplexity < static_cast<double>(n - 1) / 3.0)) {
      throw ConfigError("t-SNE perplexity " + kv::format_double(perplexity) +
                        " must be >= 1 and below (n - 1) / 3 = " +
                        kv::format_double(static_cast<double>(n - 1) / 3.0));
    }
    if (iterations == 0) throw ConfigError("t-SNE iterations must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("t-SNE learning rate must be positive");
  }
};

// Row-major n x n squared Euclidean distances between the rows of x [n x d].
inline std::vector<double> squared_distances(const Tensor& x) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = x[i * d + k] - x[j * d + k];
        s += diff * diff;
      }
      out[i * n + j] = out[j * n + i] = s;
    }
  return out;
}

// Shannon entropy in bits of one conditional row.
inline double row_entropy_bits(const double* p, std::size_t n) {
  double h = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    if (p[j] > 0.0) h -= p[j] * std::log2(p[j]);
  return h;
}

// Conditional affinities P(j|i) with a per-row precision beta = 1/(2 sigma^2)
// found by bisection so the row entropy is log2(perplexity) within `tol` bits.
inline std::vector<double> calibrate_perplexity(const std::vector<double>& dist, std::size_t n,
                                                double perplexity, double tol = 1e-5,
                                                int max_iterations = 200) {
  if (dist.size() != n * n) throw DimensionError("distance matrix is not n x n");
  if (n < 2 || !(perplexity >= 1.0) || perplexity > static_cast<double>(n - 1)) {
    throw ConfigError("perplexity " + kv::format_double(perplexity) + " is infeasible for " +
                      std::to_string(n) + " points");
  }
  const double target = std::log2(perplexity);
  std::vector<double> p(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = &p[i * n];
    const double* d = &dist[i * n];
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) dmin = std::min(dmin, d[j]);
    auto fill = [&](double beta) {
      double z = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        row[j] = j == i ? 0.0 : std::exp(-beta * (d[j] - dmin));
        z += row[j];
      }
      for (std::size_t j = 0; j < n; ++j) row[j] /= z;
      return row_entropy_bits(row, n);
    };
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int it = 0; it < max_iterations; ++it) {
      const double h = fill(beta);
      if (std::abs(h - target) <= tol) {
        converged = true;
        break;
      }
      if (h > target) {  // too flat: sharpen
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    if (!converged) {
      throw CalibrationError("perplexity search did not converge for row " + std::to_string(i), i);
    }
  }
  return p;
}

// (P(j|i) + P(i|j)) / (2n); sums to 1.
inline std::vector<double> symmetrize(const std::vector<double>& cond, std::size_t n) {
  std::vector<double> p(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      p[i * n + j] = (cond[i * n + j] + cond[j * n + i]) / (2.0 * static_cast<double>(n));
  return p;
}

// Student-t kernel weights w_ij = 1/(1 + |y_i - y_j|^2) (zero diagonal) and their sum.
inline std::vector<double> kernel(const std::vector<double>& y, std::size_t n, double& sum) {
  std::vector<double> w(n * n, 0.0);
  sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = y[2 * i] - y[2 * j], dy = y[2 * i + 1] - y[2 * j + 1];
      const double v = 1.0 / (1.0 + dx * dx + dy * dy);
      w[i * n + j] = w[j * n + i] = v;
      sum += 2.0 * v;
    }
  return w;
}

inline std::vector<double> q_matrix(const std::vector<double>& y, std::size_t n) {
  double sum = 0.0;
  std::vector<double> q = kernel(y, n, sum);
  for (double& v : q) v /= sum;
  return q;
}

// KL(P || Q) in nats over off-diagonal pairs.
inline double kl_divergence(const std::vector<double>& p, const std::vector<double>& y, std::size_t n) {
  const std::vector<double> q = q_matrix(y, n);
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && p[i * n + j] > 0.0) kl += p[i * n + j] * std::log(p[i * n + j] / q[i * n + j]);
  return kl;
}

// dKL/dy_i = 4 sum_j (p_ij - q_ij) w_ij (y_i - y_j), with P scaled by `exaggeration`.
inline std::vector<double> kl_gradient(const std::vector<double>& p, const std::vector<double>& y,
                                       std::size_t n, double exaggeration = 1.0) {
  double sum = 0.0;
  const std::vector<double> w = kernel(y, n, sum);
  std::vector<double> g(2 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double wij = w[i * n + j];
      const double f = 4.0 * (exaggeration * p[i * n + j] - wij / sum) * wij;
      g[2 * i] += f * (y[2 * i] - y[2 * j]);
      g[2 * i + 1] += f * (y[2 * i + 1] - y[2 * j + 1]);
    }
  return g;
}

struct TsneState {
  std::vector<double> y;         // n x 2
  std::vector<double> velocity;  // n x 2
  std::size_t iteration = 0;
};

// One momentum step. Returns KL(P || Q) at the coordinates before the step.
inline double tsne_step(const std::vector<double>& p, TsneState& s, const TsneConfig& cfg) {
  const std::size_t n = s.y.size() / 2;
  const double kl = kl_divergence(p, s.y, n);
  const double ex = s.iteration < cfg.exaggeration_iterations ? cfg.exaggeration : 1.0;
  const double mom = s.iteration < cfg.momentum_switch ? cfg.momentum : cfg.final_momentum;
  const std::vector<double> g = kl_gradient(p, s.y, n, ex);
  for (std::size_t k = 0; k < s.y.size(); ++k) {
    s.velocity[k] = mom * s.velocity[k] - cfg.learning_rate * g[k];
    s.y[k] += s.velocity[k];
  }
  ++s.iteration;
  return kl;
}

struct TsneResult {
  std::vector<double> y;   // n x 2
  std::vector<double> kl;  // kl[t] is the divergence before step t; the last entry is after the final step
};

inline TsneResult tsne_run(const Tensor& x, const TsneConfig& cfg) {
  const std::size_t n = x.rows();
  cfg.validate(n);
  const std::vector<double> p =
      symmetrize(calibrate_perplexity(squared_distances(x), n, cfg.perplexity), n);
  Rng rng(cfg.seed);
  TsneState s;
  s.y.resize(2 * n);
  for (double& v : s.y) v = rng.normal(0.0, 1e-4);
  s.velocity.assign(2 * n, 0.0);
  TsneResult out;
  out.kl.reserve(cfg.iterations + 1);
  for (std::size_t t = 0; t < cfg.iterations; ++t) out.kl.push_back(tsne_step(p, s, cfg));
  out.kl.push_back(kl_divergence(p, s.y, n));
  out.y = std::move(s.y);
  return out;
}

inline std::string tsne_csv(const std::vector<std::string>& ids, const std::vector<std::string>& labels,
                            const std::vector<double>& y) {
  if (ids.size() != labels.size() || 2 * ids.size() != y.size())
    throw ContractError("tsne_csv: ids, labels and coordinates disagree in length");
  std::string s = "id,label,x,y\n";
  for (std::size_t i = 0; i < ids.size(); ++i)
    s += ids[i] + "," + labels[i] + "," + kv::format_double(y[2 * i]) + "," +
         kv::format_double(y[2 * i + 1]) + "\n";
  return s;
}

inline std::string kl_trace_csv(const std::vector<double>& kl) {
  std::string s = "iteration,kl\n";
  for (std::size_t t = 0; t < kl.size(); ++t) s += std::to_string(t) + "," + kv::format_double(kl[t]) + "\n";
  return s;
}

}  // namespace samast::embed
