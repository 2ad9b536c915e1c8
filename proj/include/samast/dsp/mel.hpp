#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "samast/core/error.hpp"

namespace samast::dsp {

struct MelConfig {
  int sample_rate = 16000;
  std::size_t window = 400;  // 25 ms
  std::size_t hop = 160;     // 10 ms
  std::size_t fft_size = 512;
  std::size_t mel_bins = 128;
  double f_min = 0.0;
  double f_max = 8000.0;
  double log_floor = 1e-10;
  // Time axis is padded (last frame repeated) up to a multiple of this.
  std::size_t frame_multiple = 16;

  std::size_t spectrum_bins() const { return fft_size / 2 + 1; }

  void validate() const {
    if (sample_rate <= 0) throw ConfigError("mel: sample rate must be positive");
    if (window == 0 || hop == 0) throw ConfigError("mel: window and hop must be positive");
    if (window > fft_size) throw ConfigError("mel: window exceeds fft size");
    if (mel_bins == 0) throw ConfigError("mel: need at least one mel bin");
    if (f_min < 0.0 || f_min > f_max) throw ConfigError("mel: need 0 <= f_min <= f_max");
    if (f_max > sample_rate / 2.0) throw ConfigError("mel: f_max above Nyquist");
    if (!(log_floor > 0.0)) throw ConfigError("mel: log floor must be positive");
    if (frame_multiple == 0) throw ConfigError("mel: frame multiple must be positive");
  }

  friend bool operator==(const MelConfig&, const MelConfig&) = default;
};

// HTK mel scale.
inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Filter edge frequencies in Hz: mel_bins + 2 points equally spaced in mel.
inline std::vector<double> mel_edges_hz(const MelConfig& cfg) {
  const double lo = hz_to_mel(cfg.f_min), hi = hz_to_mel(cfg.f_max);
  std::vector<double> edges(cfg.mel_bins + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cfg.mel_bins + 1));
  }
  return edges;
}

namespace detail {

// Integral of the unit-peak triangle (a, b, c) over [x0, x1].
inline double triangle_integral(double a, double b, double c, double x0, double x1) {
  auto antiderivative = [&](double x) {
    // Piecewise quadratic primitive, F(a) = 0.
    if (x <= a) return 0.0;
    const double rise = b - a, fall = c - b;
    if (x <= b) return rise > 0 ? (x - a) * (x - a) / (2.0 * rise) : 0.0;
    const double left_area = rise / 2.0;
    if (x <= c) {
      return left_area + (fall > 0 ? (x - b) - (x - b) * (x - b) / (2.0 * fall) : 0.0);
    }
    return left_area + fall / 2.0;
  };
  return antiderivative(x1) - antiderivative(x0);
}

}  // namespace detail

// Triangular filters on the HTK mel scale, stored row-major as
// [mel_bins x (fft_size/2 + 1)]. Each FFT bin k stands for the frequency
// interval of width sr/fft centred on k*sr/fft; a filter's weight on the bin
// is the triangle's average over that interval, and each row is scaled to
// unit sum. Narrow low-frequency triangles therefore always touch at least
// one bin, and white noise maps to equal expected energy in every mel bin.
inline std::vector<double> mel_filterbank(const MelConfig& cfg) {
  cfg.validate();
  const std::size_t nb = cfg.spectrum_bins();
  const double df = static_cast<double>(cfg.sample_rate) / static_cast<double>(cfg.fft_size);
  const std::vector<double> edges = mel_edges_hz(cfg);
  std::vector<double> fb(cfg.mel_bins * nb, 0.0);
  for (std::size_t m = 0; m < cfg.mel_bins; ++m) {
    const double a = edges[m], b = edges[m + 1], c = edges[m + 2];
    double row_sum = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      const double centre = static_cast<double>(k) * df;
      const double w = detail::triangle_integral(a, b, c, centre - df / 2, centre + df / 2) / df;
      fb[m * nb + k] = w;
      row_sum += w;
    }
    if (!(row_sum > 0.0)) {
      throw ConfigError("mel: filter " + std::to_string(m) + " is empty for fft size " +
                        std::to_string(cfg.fft_size));
    }
    for (std::size_t k = 0; k < nb; ++k) fb[m * nb + k] /= row_sum;
  }
  return fb;
}

}  // namespace samast::dsp
