#pragma once

// Independent reference computations used only by tests.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace samast::testing {

// O(n^2) DFT straight from the definition.
inline std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  return out;
}

// Mean silhouette coefficient of 2-D points under Euclidean distance.
inline double silhouette(const std::vector<double>& xy, const std::vector<int>& labels) {
  const std::size_t n = labels.size();
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> sum_by_label(8, 0.0);
    std::vector<std::size_t> count_by_label(8, 0);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dx = xy[2 * i] - xy[2 * j], dy = xy[2 * i + 1] - xy[2 * j + 1];
      sum_by_label[static_cast<std::size_t>(labels[j])] += std::sqrt(dx * dx + dy * dy);
      ++count_by_label[static_cast<std::size_t>(labels[j])];
    }
    const auto own = static_cast<std::size_t>(labels[i]);
    if (count_by_label[own] == 0) continue;
    const double a = sum_by_label[own] / static_cast<double>(count_by_label[own]);
    double b = INFINITY;
    for (std::size_t l = 0; l < 8; ++l) {
      if (l == own || count_by_label[l] == 0) continue;
      b = std::min(b, sum_by_label[l] / static_cast<double>(count_by_label[l]));
    }
    if (!std::isfinite(b)) continue;
    total += (b - a) / std::max(a, b);
    ++counted;
  }
  return counted ? total / static_cast<double>(counted) : 0.0;
}

}  // namespace samast::testing
