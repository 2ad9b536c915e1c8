#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "samast/core/error.hpp"

namespace samast::dsp {

using Complex = std::complex<double>;

// Iterative radix-2 decimation-in-time FFT with precomputed twiddles and
// bit-reversal table for a fixed power-of-two size.
class Fft {
 public:
  explicit Fft(std::size_t n) : n_(n), twiddles_(n / 2), reversed_(n) {
    if (n < 2 || (n & (n - 1)) != 0) {
      throw ConfigError("fft size must be a power of two >= 2, got " + std::to_string(n));
    }
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddles_[k] = Complex(std::cos(angle), std::sin(angle));
    }
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
      reversed_[i] = r;
    }
  }

  std::size_t size() const { return n_; }

  void forward(std::span<Complex> x) const {
    if (x.size() != n_) throw DimensionError("fft: buffer size mismatch");
    for (std::size_t i = 0; i < n_; ++i) {
      if (reversed_[i] > i) std::swap(x[i], x[reversed_[i]]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2, stride = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t k = 0; k < half; ++k) {
          const Complex t = twiddles_[k * stride] * x[start + k + half];
          x[start + k + half] = x[start + k] - t;
          x[start + k] += t;
        }
      }
    }
  }

 private:
  std::size_t n_;
  std::vector<Complex> twiddles_;
  std::vector<std::size_t> reversed_;
};

}  // namespace samast::dsp
