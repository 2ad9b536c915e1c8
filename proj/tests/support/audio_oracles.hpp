#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "samast/data/labels.hpp"
#include "samast/dsp/audio_clip.hpp"
#include "samast/dsp/mel.hpp"
#include "samast/dsp/spectrogram.hpp"

namespace samast::testing {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Max over mel bins centred in the 150-1000 Hz breath band of the bin's mean
// energy, divided by the median of those means.
inline double ridge_ratio(const dsp::AudioClip& clip) {
  const dsp::MelConfig cfg;
  const dsp::Spectrogram s = dsp::log_mel(clip, cfg);
  const std::vector<double> edges = dsp::mel_edges_hz(cfg);
  std::vector<double> means;
  for (std::size_t m = 0; m < s.bins; ++m) {
    const double centre = edges[m + 1];
    if (centre < 150.0 || centre > 1000.0) continue;
    double e = 0.0;
    for (std::size_t f = 0; f < s.frames; ++f) e += std::exp(s.at(m, f));
    means.push_back(e / static_cast<double>(s.frames));
  }
  return *std::max_element(means.begin(), means.end()) / median(means);
}

// Runs of consecutive 10 ms frames whose energy exceeds 4x the median frame energy.
inline int burst_count(const dsp::AudioClip& clip) {
  const std::size_t frame = static_cast<std::size_t>(clip.sample_rate / 100);
  std::vector<double> energy;
  for (std::size_t i = 0; i + frame <= clip.samples.size(); i += frame) {
    double e = 0.0;
    for (std::size_t j = 0; j < frame; ++j) e += clip.samples[i + j] * clip.samples[i + j];
    energy.push_back(e);
  }
  const double threshold = 4.0 * median(energy);
  int runs = 0;
  bool inside = false;
  for (double e : energy) {
    const bool above = e > threshold;
    if (above && !inside) ++runs;
    inside = above;
  }
  return runs;
}

inline data::Label oracle_label(const dsp::AudioClip& clip) {
  return data::label_of(burst_count(clip) >= 5, ridge_ratio(clip) > 3.0);
}

}  // namespace samast::testing
