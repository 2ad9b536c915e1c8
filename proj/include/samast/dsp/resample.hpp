#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "samast/core/error.hpp"
#include "samast/dsp/audio_clip.hpp"

namespace samast::dsp {

struct ResamplerConfig {
  int zero_crossings = 16;  // taps per side, in units of the output band
  double kaiser_beta = 8.0;
};

namespace detail {

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

inline double kaiser(double x, double beta) {
  if (std::abs(x) >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - x * x)) / std::cyl_bessel_i(0.0, beta);
}

}  // namespace detail

// Kaiser-windowed sinc interpolation. The kernel cutoff follows the lower of
// the two Nyquist rates and each output tap set is normalized to unit sum so
// DC passes exactly.
inline AudioClip resample(const AudioClip& clip, int target_rate = 16000,
                          const ResamplerConfig& cfg = {}) {
  if (clip.sample_rate <= 0 || target_rate <= 0) throw ConfigError("resample: rates must be positive");
  if (clip.sample_rate == target_rate) return clip;

  const auto n_in = static_cast<std::uint64_t>(clip.samples.size());
  const auto src = static_cast<std::uint64_t>(clip.sample_rate);
  const auto dst = static_cast<std::uint64_t>(target_rate);
  const std::uint64_t n_out = (2 * n_in * dst + src) / (2 * src);

  const double step = static_cast<double>(src) / static_cast<double>(dst);
  const double cutoff = std::min(1.0, static_cast<double>(dst) / static_cast<double>(src));
  const double half_width = cfg.zero_crossings / cutoff;

  AudioClip out;
  out.sample_rate = target_rate;
  out.source_id = clip.source_id;
  out.samples.resize(n_out);
  const auto last = static_cast<long long>(n_in) - 1;
  for (std::uint64_t j = 0; j < n_out; ++j) {
    const double t = static_cast<double>(j) * step;
    const long long lo = std::max(0LL, static_cast<long long>(std::ceil(t - half_width)));
    const long long hi = std::min(last, static_cast<long long>(std::floor(t + half_width)));
    double acc = 0.0, norm = 0.0;
    for (long long i = lo; i <= hi; ++i) {
      const double d = t - static_cast<double>(i);
      const double h = cutoff * detail::sinc(cutoff * d) * detail::kaiser(d / half_width, cfg.kaiser_beta);
      acc += h * clip.samples[static_cast<std::size_t>(i)];
      norm += h;
    }
    out.samples[j] = norm != 0.0 ? acc / norm : 0.0;
  }
  return out;
}

// Repeats a short clip end to end, or keeps the leading part of a long one,
// so the result holds exactly target_seconds * sample_rate samples.
inline AudioClip cyclic_pad(const AudioClip& clip, double target_seconds = 8.0) {
  if (clip.samples.empty()) throw DataError("cyclic_pad: empty signal " + clip.source_id);
  const auto target = static_cast<std::size_t>(std::llround(target_seconds * clip.sample_rate));
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.source_id = clip.source_id;
  out.samples.resize(target);
  const std::size_t len = clip.samples.size();
  for (std::size_t i = 0; i < target; ++i) out.samples[i] = clip.samples[i % len];
  return out;
}

}  // namespace samast::dsp
