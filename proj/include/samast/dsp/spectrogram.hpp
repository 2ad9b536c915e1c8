#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "samast/core/binary_io.hpp"
#include "samast/core/error.hpp"
#include "samast/dsp/audio_clip.hpp"
#include "samast/dsp/fft.hpp"
#include "samast/dsp/mel.hpp"

namespace samast::dsp {

// Complex one-sided spectra, frame-major: frames x (fft_size/2 + 1).
struct StftResult {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<Complex> values;

  Complex at(std::size_t frame, std::size_t bin) const { return values[frame * bins + bin]; }
};

// Log-Mel energies, row-major [bins x frames].
struct Spectrogram {
  std::size_t bins = 0;
  std::size_t frames = 0;
  double hop_seconds = 0.0;
  std::vector<double> values;

  double at(std::size_t bin, std::size_t frame) const { return values[bin * frames + frame]; }
  double& at(std::size_t bin, std::size_t frame) { return values[bin * frames + frame]; }

  friend bool operator==(const Spectrogram&, const Spectrogram&) = default;
};

// Periodic Hann window.
inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

inline std::size_t frame_count(std::size_t samples, const MelConfig& cfg) {
  return 1 + (samples - cfg.window) / cfg.hop;
}

inline StftResult stft(const AudioClip& clip, const MelConfig& cfg) {
  cfg.validate();
  if (clip.samples.size() < cfg.window) {
    throw DataError("stft: clip " + clip.source_id + " has " + std::to_string(clip.samples.size()) +
                    " samples, shorter than the " + std::to_string(cfg.window) + "-sample window");
  }
  const Fft fft(cfg.fft_size);
  const std::vector<double> window = hann_window(cfg.window);
  StftResult out;
  out.frames = frame_count(clip.samples.size(), cfg);
  out.bins = cfg.spectrum_bins();
  out.values.resize(out.frames * out.bins);
  std::vector<Complex> buf(cfg.fft_size);
  for (std::size_t f = 0; f < out.frames; ++f) {
    const double* src = clip.samples.data() + f * cfg.hop;
    for (std::size_t i = 0; i < cfg.fft_size; ++i) {
      buf[i] = i < cfg.window ? Complex(src[i] * window[i], 0.0) : Complex(0.0, 0.0);
    }
    fft.forward(buf);
    std::copy(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(out.bins),
              out.values.begin() + static_cast<std::ptrdiff_t>(f * out.bins));
  }
  return out;
}

// ln(max(filterbank * |stft|^2, floor)), time axis padded by repeating the
// final frame up to a multiple of cfg.frame_multiple.
inline Spectrogram log_mel(const AudioClip& clip, const MelConfig& cfg) {
  const StftResult spec = stft(clip, cfg);
  const std::vector<double> fb = mel_filterbank(cfg);
  const std::size_t nb = spec.bins;
  const std::size_t padded = (spec.frames + cfg.frame_multiple - 1) / cfg.frame_multiple * cfg.frame_multiple;

  Spectrogram out;
  out.bins = cfg.mel_bins;
  out.frames = padded;
  out.hop_seconds = static_cast<double>(cfg.hop) / static_cast<double>(cfg.sample_rate);
  out.values.resize(out.bins * out.frames);
  std::vector<double> power(nb);
  for (std::size_t f = 0; f < spec.frames; ++f) {
    for (std::size_t k = 0; k < nb; ++k) power[k] = std::norm(spec.at(f, k));
    for (std::size_t m = 0; m < cfg.mel_bins; ++m) {
      const double* row = fb.data() + m * nb;
      double e = 0.0;
      for (std::size_t k = 0; k < nb; ++k) e += row[k] * power[k];
      out.at(m, f) = std::log(std::max(e, cfg.log_floor));
    }
  }
  for (std::size_t f = spec.frames; f < padded; ++f) {
    for (std::size_t m = 0; m < cfg.mel_bins; ++m) out.at(m, f) = out.at(m, spec.frames - 1);
  }
  return out;
}

// SPG1: magic, u32 bins, u32 frames, f64 hop seconds, bins*frames f64 row-major.
inline io::Bytes encode_spectrogram(const Spectrogram& s) {
  io::Writer w;
  w.magic("SPG1");
  w.u32(static_cast<std::uint32_t>(s.bins));
  w.u32(static_cast<std::uint32_t>(s.frames));
  w.f64(s.hop_seconds);
  w.f64s(s.values);
  return w.take();
}

inline Spectrogram decode_spectrogram(const io::Bytes& bytes) {
  io::Reader r(bytes);
  if (!r.magic("SPG1")) throw DataError("spectrogram: bad magic");
  Spectrogram s;
  s.bins = r.u32("bins");
  s.frames = r.u32("frames");
  s.hop_seconds = r.f64("hop");
  s.values = r.f64s(s.bins * s.frames, "values");
  if (!r.done()) throw DataError("spectrogram: trailing bytes");
  return s;
}

inline void write_spectrogram(const std::filesystem::path& path, const Spectrogram& s) {
  io::write_file(path, encode_spectrogram(s));
}

inline Spectrogram read_spectrogram(const std::filesystem::path& path) {
  return decode_spectrogram(io::read_file(path));
}

}  // namespace samast::dsp
