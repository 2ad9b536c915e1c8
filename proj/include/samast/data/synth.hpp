#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "samast/core/error.hpp"
#include "samast/core/rng.hpp"
#include "samast/data/labels.hpp"
#include "samast/dsp/audio_clip.hpp"

namespace samast::data {

struct SynthParams {
  int sample_rate = 16000;
  double band_low = 100.0, band_high = 1000.0;  // breath noise band, Hz
  double noise_rms_min = 0.015, noise_rms_max = 0.025;
  int crackles_min = 5, crackles_max = 20;
  double crackle_amp_min = 0.5, crackle_amp_max = 0.9;
  double crackle_tau_min = 0.002, crackle_tau_max = 0.010;  // decay constant, s
  double crackle_gap = 0.02;                                 // min silence after a burst, s
  double wheeze_f_min = 200.0, wheeze_f_max = 800.0;
  double wheeze_amp_min = 0.04, wheeze_amp_max = 0.07;
  double wheeze_cover_min = 0.6, wheeze_cover_max = 0.9;     // fraction of the cycle
  double wheeze_drift = 0.04;                                // relative frequency swing
  double fade = 0.02;                                        // wheeze on/off ramp, s
};

namespace detail {

// RBJ cookbook second-order section, direct form I.
struct Biquad {
  double b0, b1, b2, a1, a2;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;

  static Biquad make(bool highpass, double f0, double rate) {
    const double w0 = 2.0 * std::numbers::pi * f0 / rate;
    const double c = std::cos(w0), alpha = std::sin(w0) / std::numbers::sqrt2;  // Q = 1/sqrt(2)
    const double a0 = 1.0 + alpha;
    const double k = highpass ? (1.0 + c) / 2.0 : (1.0 - c) / 2.0;
    const double mid = highpass ? -(1.0 + c) : (1.0 - c);
    return {k / a0, mid / a0, k / a0, -2.0 * c / a0, (1.0 - alpha) / a0};
  }

  double operator()(double x) {
    const double y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = y;
    return y;
  }
};

inline void add_breath_noise(std::vector<double>& out, const SynthParams& sp, Rng& rng) {
  Biquad hp = Biquad::make(true, sp.band_low, sp.sample_rate);
  Biquad lp = Biquad::make(false, sp.band_high, sp.sample_rate);
  const std::size_t warmup = 2048;
  std::vector<double> noise(out.size());
  for (std::size_t i = 0; i < warmup + out.size(); ++i) {
    const double y = lp(hp(rng.normal()));
    if (i >= warmup) noise[i - warmup] = y;
  }
  double sq = 0.0;
  for (double v : noise) sq += v * v;
  const double rms = std::sqrt(sq / static_cast<double>(noise.size()));
  const double target = rng.uniform(sp.noise_rms_min, sp.noise_rms_max);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += noise[i] * (target / rms);
}

// Damped white-noise bursts, one per equal slot of the clip at a random
// offset inside the slot.
inline void add_crackles(std::vector<double>& out, const SynthParams& sp, Rng& rng) {
  const double rate = sp.sample_rate;
  const auto count = static_cast<std::size_t>(
      sp.crackles_min + static_cast<int>(rng.below(
                            static_cast<std::uint64_t>(sp.crackles_max - sp.crackles_min + 1))));
  const double slot = static_cast<double>(out.size()) / rate / static_cast<double>(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double amp = rng.uniform(sp.crackle_amp_min, sp.crackle_amp_max);
    double tau = rng.uniform(sp.crackle_tau_min, sp.crackle_tau_max);
    tau = std::max(1.0 / rate, std::min(tau, (slot - sp.crackle_gap) / 5.0));
    const double span = 5.0 * tau;
    const double start = static_cast<double>(k) * slot + rng.uniform(0.0, std::max(0.0, slot - span - sp.crackle_gap));
    const auto i0 = static_cast<std::size_t>(start * rate);
    const auto len = static_cast<std::size_t>(span * rate);
    for (std::size_t j = 0; j < len && i0 + j < out.size(); ++j) {
      const double t = static_cast<double>(j) / rate;
      out[i0 + j] += amp * std::exp(-t / tau) * rng.uniform(-1.0, 1.0);
    }
  }
}

// Sustained tone with slow sinusoidal frequency drift and raised-cosine fades.
inline void add_wheeze(std::vector<double>& out, const SynthParams& sp, Rng& rng) {
  const double rate = sp.sample_rate;
  const double n = static_cast<double>(out.size());
  const double f0 = rng.uniform(sp.wheeze_f_min, sp.wheeze_f_max);
  const double amp = rng.uniform(sp.wheeze_amp_min, sp.wheeze_amp_max);
  const double cover = rng.uniform(sp.wheeze_cover_min, sp.wheeze_cover_max);
  const double drift_hz = rng.uniform(0.3, 1.0), drift_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const auto len = static_cast<std::size_t>(cover * n);
  const auto start = static_cast<std::size_t>(rng.uniform(0.0, n - static_cast<double>(len)));
  const double fade = std::min(sp.fade * rate, static_cast<double>(len) / 2.0);
  double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (std::size_t j = 0; j < len && start + j < out.size(); ++j) {
    const double t = static_cast<double>(j) / rate;
    const double f = f0 * (1.0 + sp.wheeze_drift * std::sin(2.0 * std::numbers::pi * drift_hz * t + drift_phase));
    phase += 2.0 * std::numbers::pi * f / rate;
    const double jd = static_cast<double>(j), tail = static_cast<double>(len - 1 - j);
    double env = 1.0;
    if (jd < fade) env = 0.5 - 0.5 * std::cos(std::numbers::pi * jd / fade);
    if (tail < fade) env = std::min(env, 0.5 - 0.5 * std::cos(std::numbers::pi * tail / fade));
    out[start + j] += amp * env * std::sin(phase);
  }
}

}  // namespace detail

inline dsp::AudioClip synth_generate(Label label, double duration, Rng& rng,
                                     const SynthParams& sp = {}) {
  if (!(duration > 0.0) || !std::isfinite(duration)) throw ConfigError("synthetic duration must be positive");
  const auto n = static_cast<std::size_t>(std::llround(duration * sp.sample_rate));
  if (n == 0) throw ConfigError("synthetic duration is shorter than one sample");
  dsp::AudioClip clip;
  clip.sample_rate = sp.sample_rate;
  clip.samples.assign(n, 0.0);
  clip.source_id = "synth-" + std::string(label_name(label));
  detail::add_breath_noise(clip.samples, sp, rng);
  if (has_crackle(label)) detail::add_crackles(clip.samples, sp, rng);
  if (has_wheeze(label)) detail::add_wheeze(clip.samples, sp, rng);
  return clip;
}

}  // namespace samast::data
