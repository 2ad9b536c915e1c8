#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <vector>

#include "samast/core/rng.hpp"
#include "samast/dsp/fft.hpp"
#include "samast/dsp/mel.hpp"
#include "samast/dsp/resample.hpp"
#include "samast/dsp/spectrogram.hpp"
#include "samast/dsp/wav.hpp"
#include "support/oracles.hpp"

namespace samast::dsp {
namespace {

io::Bytes make_wav(std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
                   std::uint16_t bits, const io::Bytes& payload) {
  io::Writer w;
  w.magic("RIFF");
  w.u32(static_cast<std::uint32_t>(36 + payload.size()));
  w.magic("WAVE");
  w.magic("fmt ");
  w.u32(16);
  const std::uint16_t f[2] = {format, channels};
  w.raw(f, sizeof f);
  w.u32(rate);
  w.u32(rate * channels * bits / 8);
  const std::uint16_t b[2] = {static_cast<std::uint16_t>(channels * bits / 8), bits};
  w.raw(b, sizeof b);
  w.magic("data");
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.raw(payload.data(), payload.size());
  return w.take();
}

io::Bytes pcm16(const std::vector<std::int16_t>& v) {
  io::Bytes out(v.size() * 2);
  std::memcpy(out.data(), v.data(), out.size());
  return out;
}

AudioClip sine(double freq, int rate, std::size_t n, double amp = 1.0) {
  AudioClip c;
  c.sample_rate = rate;
  c.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.samples[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate);
  }
  return c;
}

TEST(DecodeWav, SilentMonoPcm16) {
  const AudioClip c = decode_wav(make_wav(1, 1, 44100, 16, pcm16(std::vector<std::int16_t>(44100, 0))));
  EXPECT_EQ(c.sample_rate, 44100);
  ASSERT_EQ(c.samples.size(), 44100u);
  for (double s : c.samples) EXPECT_EQ(s, 0.0);
}

TEST(DecodeWav, FullScaleScaling) {
  const AudioClip c = decode_wav(make_wav(1, 1, 16000, 16, pcm16({32767, -32768})));
  EXPECT_DOUBLE_EQ(c.samples[0], 32767.0 / 32768.0);
  EXPECT_DOUBLE_EQ(c.samples[1], -1.0);
}

TEST(DecodeWav, StereoAveragesToMono) {
  const AudioClip c = decode_wav(make_wav(1, 2, 16000, 16, pcm16({1000, -1000, -5, 5, 32767, -32767})));
  ASSERT_EQ(c.samples.size(), 3u);
  for (double s : c.samples) EXPECT_EQ(s, 0.0);
}

TEST(DecodeWav, Float32) {
  const float vals[3] = {0.5f, -0.25f, 1.0f};
  io::Bytes payload(sizeof vals);
  std::memcpy(payload.data(), vals, sizeof vals);
  const AudioClip c = decode_wav(make_wav(3, 1, 8000, 32, payload));
  EXPECT_EQ(c.samples, (std::vector<double>{0.5, -0.25, 1.0}));
}

TEST(DecodeWav, ErrorsNameTheChunk) {
  auto message = [](const io::Bytes& b) {
    try {
      decode_wav(b);
    } catch (const DecodeError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  io::Bytes bad = make_wav(1, 1, 16000, 16, pcm16({1, 2}));
  bad[0] = 'X';
  EXPECT_NE(message(bad).find("RIFF"), std::string::npos);
  EXPECT_NE(message(make_wav(1, 1, 16000, 8, io::Bytes{1, 2})).find("fmt"), std::string::npos);
  EXPECT_NE(message(make_wav(1, 3, 16000, 16, pcm16({1, 2, 3}))).find("fmt"), std::string::npos);
  io::Bytes no_data = make_wav(1, 1, 16000, 16, {});
  no_data.resize(36);
  EXPECT_NE(message(no_data).find("data"), std::string::npos);
}

TEST(EncodeWav, Pcm16RoundTripWithinQuantization) {
  Rng rng(3);
  AudioClip c;
  c.sample_rate = 16000;
  for (int i = 0; i < 1000; ++i) c.samples.push_back(rng.uniform(-1.0, 1.0));
  const AudioClip back = decode_wav(encode_wav_pcm16(c));
  ASSERT_EQ(back.samples.size(), c.samples.size());
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    EXPECT_LE(std::abs(back.samples[i] - c.samples[i]), 1.0 / 32768.0);
  }
}

TEST(Resample, SameRateIsBitIdentical) {
  const AudioClip c = sine(123.0, 16000, 5000);
  EXPECT_EQ(resample(c, 16000).samples, c.samples);
}

TEST(Resample, SineDownsampledMatchesAnalytic) {
  const AudioClip out = resample(sine(440.0, 44100, 44100), 16000);
  ASSERT_EQ(out.samples.size(), 16000u);
  double worst = 0.0;
  for (std::size_t j = 200; j < 16000 - 200; ++j) {
    const double expected = std::sin(2.0 * std::numbers::pi * 440.0 * static_cast<double>(j) / 16000.0);
    worst = std::max(worst, std::abs(out.samples[j] - expected));
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(Resample, SineUpsampledMatchesAnalytic) {
  const AudioClip out = resample(sine(440.0, 8000, 8000), 16000);
  ASSERT_EQ(out.samples.size(), 16000u);
  double worst = 0.0;
  for (std::size_t j = 200; j < 16000 - 200; ++j) {
    const double expected = std::sin(2.0 * std::numbers::pi * 440.0 * static_cast<double>(j) / 16000.0);
    worst = std::max(worst, std::abs(out.samples[j] - expected));
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(Resample, PreservesDc) {
  AudioClip c;
  c.sample_rate = 44100;
  c.samples.assign(22050, 0.5);
  const AudioClip out = resample(c, 16000);
  EXPECT_EQ(out.samples.size(), 8000u);
  for (std::size_t j = 100; j < out.samples.size() - 100; ++j) EXPECT_NEAR(out.samples[j], 0.5, 1e-6);
}

TEST(Resample, OutputLengthRounds) {
  AudioClip c;
  c.sample_rate = 44100;
  c.samples.assign(1000, 0.0);
  // 1000 * 16000 / 44100 = 362.81
  EXPECT_EQ(resample(c, 16000).samples.size(), 363u);
}

TEST(CyclicPad, ShortClipRepeats) {
  AudioClip c;
  c.sample_rate = 16000;
  for (int i = 0; i < 48000; ++i) c.samples.push_back(std::sin(0.001 * i * i));
  const AudioClip out = cyclic_pad(c, 8.0);
  ASSERT_EQ(out.samples.size(), 128000u);
  for (std::size_t i = 0; i < out.samples.size(); ++i) ASSERT_EQ(out.samples[i], c.samples[i % 48000]);
  for (std::size_t i = 0; i + 48000 < out.samples.size(); ++i) {
    ASSERT_EQ(out.samples[i], out.samples[i + 48000]);
  }
}

TEST(CyclicPad, ExactAndLongerClips) {
  AudioClip exact;
  exact.sample_rate = 16000;
  for (int i = 0; i < 128000; ++i) exact.samples.push_back(i * 1e-6);
  EXPECT_EQ(cyclic_pad(exact).samples, exact.samples);

  AudioClip longer = exact;
  for (int i = 0; i < 32000; ++i) longer.samples.push_back(-1.0);
  EXPECT_EQ(cyclic_pad(longer).samples, exact.samples);
}

TEST(CyclicPad, OddLengthsAlwaysHitTarget) {
  for (std::size_t len : {1u, 7u, 399u, 12345u, 127999u, 200001u}) {
    AudioClip c;
    c.sample_rate = 16000;
    c.samples.assign(len, 0.25);
    EXPECT_EQ(cyclic_pad(c).samples.size(), 128000u);
  }
}

TEST(CyclicPad, EmptyClipIsAnError) {
  AudioClip c;
  EXPECT_THROW(cyclic_pad(c), DataError);
}

TEST(Fft, MatchesNaiveDft) {
  Rng rng(5);
  for (std::size_t n : {2u, 8u, 64u, 512u}) {
    std::vector<Complex> x(n);
    for (auto& v : x) v = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const auto expected = testing::naive_dft(x);
    Fft(n).forward(x);
    for (std::size_t k = 0; k < n; ++k) EXPECT_LT(std::abs(x[k] - expected[k]), 1e-9) << n << " " << k;
  }
}

TEST(Fft, RejectsNonPowerOfTwo) { EXPECT_THROW(Fft(400), ConfigError); }

TEST(Stft, FrameOfSignalMatchesDirectDft) {
  Rng rng(9);
  AudioClip c;
  c.sample_rate = 16000;
  for (int i = 0; i < 2000; ++i) c.samples.push_back(rng.uniform(-1, 1));
  const MelConfig cfg;
  const StftResult s = stft(c, cfg);
  EXPECT_EQ(s.frames, 1 + (2000 - 400) / 160);
  const std::vector<double> w = hann_window(cfg.window);
  for (std::size_t f : {std::size_t{0}, std::size_t{3}, s.frames - 1}) {
    std::vector<Complex> frame(cfg.fft_size);
    for (std::size_t i = 0; i < cfg.window; ++i) frame[i] = c.samples[f * cfg.hop + i] * w[i];
    const auto expected = testing::naive_dft(frame);
    for (std::size_t k = 0; k < s.bins; ++k) EXPECT_LT(std::abs(s.at(f, k) - expected[k]), 1e-9);
  }
}

TEST(Stft, ParsevalPerFrame) {
  Rng rng(10);
  AudioClip c;
  c.sample_rate = 16000;
  for (int i = 0; i < 4000; ++i) c.samples.push_back(rng.normal(0.0, 0.3));
  const MelConfig cfg;
  const StftResult s = stft(c, cfg);
  const std::vector<double> w = hann_window(cfg.window);
  const std::size_t n = cfg.fft_size;
  for (std::size_t f = 0; f < s.frames; ++f) {
    double time_energy = 0.0;
    for (std::size_t i = 0; i < cfg.window; ++i) {
      const double v = c.samples[f * cfg.hop + i] * w[i];
      time_energy += v * v;
    }
    double spec = std::norm(s.at(f, 0)) + std::norm(s.at(f, n / 2));
    for (std::size_t k = 1; k < n / 2; ++k) spec += 2.0 * std::norm(s.at(f, k));
    EXPECT_NEAR(spec / static_cast<double>(n), time_energy, 1e-6 * time_energy);
  }
}

TEST(Stft, BinCentredSineConcentratesEnergy) {
  const MelConfig cfg;
  for (std::size_t k : {10u, 37u, 100u}) {
    const double freq = static_cast<double>(k) * 16000.0 / 512.0;
    const StftResult s = stft(sine(freq, 16000, 4000), cfg);
    for (std::size_t f = 0; f < s.frames; ++f) {
      double total = 0.0, near = 0.0;
      for (std::size_t b = 0; b < s.bins; ++b) {
        const double e = std::norm(s.at(f, b));
        total += e;
        if (b + 3 >= k && b <= k + 3) near += e;
      }
      EXPECT_GE(near / total, 0.99) << "bin " << k << " frame " << f;
    }
  }
}

TEST(Stft, ZeroInputZeroSpectrum) {
  AudioClip c;
  c.sample_rate = 16000;
  c.samples.assign(1600, 0.0);
  for (const Complex& v : stft(c, MelConfig{}).values) EXPECT_EQ(v, Complex(0.0, 0.0));
}

TEST(Stft, ShortClipIsAnError) {
  AudioClip c;
  c.samples.assign(399, 0.1);
  EXPECT_THROW(stft(c, MelConfig{}), DataError);
}

TEST(MelScale, HtkValues) {
  EXPECT_EQ(hz_to_mel(0.0), 0.0);
  EXPECT_NEAR(hz_to_mel(700.0), 2595.0 * std::log10(2.0), 1e-12);
  EXPECT_NEAR(hz_to_mel(700.0), 781.1728387480312, 1e-9);
  EXPECT_NEAR(mel_to_hz(hz_to_mel(1234.5)), 1234.5, 1e-9);
}

TEST(MelFilterbank, ShapeSupportAndOrdering) {
  const MelConfig cfg;
  const auto fb = mel_filterbank(cfg);
  const std::size_t nb = cfg.spectrum_bins();
  ASSERT_EQ(fb.size(), cfg.mel_bins * nb);
  const auto edges = mel_edges_hz(cfg);
  for (std::size_t i = 1; i < edges.size(); ++i) EXPECT_GT(edges[i], edges[i - 1]);
  for (std::size_t m = 0; m < cfg.mel_bins; ++m) {
    std::size_t first = nb, last = 0, nonzero = 0;
    double row = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      const double w = fb[m * nb + k];
      EXPECT_GE(w, 0.0);
      row += w;
      if (w > 0.0) {
        first = std::min(first, k);
        last = k;
        ++nonzero;
      }
    }
    EXPECT_GT(nonzero, 0u) << "filter " << m;
    EXPECT_EQ(last - first + 1, nonzero) << "support not contiguous for filter " << m;
    EXPECT_NEAR(row, 1.0, 1e-12);
  }
}

TEST(MelFilterbank, DegenerateRangeGivesEmptyFilterError) {
  MelConfig cfg;
  cfg.f_min = 4000.0;
  cfg.f_max = 4000.0;
  EXPECT_THROW(mel_filterbank(cfg), ConfigError);
}

TEST(MelConfig, Validation) {
  MelConfig cfg;
  cfg.window = 1024;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = MelConfig{};
  cfg.f_max = 9000;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(LogMel, SilentEightSecondClip) {
  AudioClip c;
  c.sample_rate = 16000;
  c.samples.assign(128000, 0.0);
  const Spectrogram s = log_mel(c, MelConfig{});
  EXPECT_EQ(s.bins, 128u);
  EXPECT_EQ(s.frames, 800u);
  EXPECT_DOUBLE_EQ(s.hop_seconds, 0.01);
  for (double v : s.values) EXPECT_DOUBLE_EQ(v, std::log(1e-10));
  EXPECT_NEAR(std::log(1e-10), -23.0259, 1e-4);
}

TEST(LogMel, PaddingRepeatsLastFrame) {
  Rng rng(4);
  AudioClip c;
  c.sample_rate = 16000;
  for (int i = 0; i < 128000; ++i) c.samples.push_back(rng.uniform(-0.5, 0.5));
  const Spectrogram s = log_mel(c, MelConfig{});
  ASSERT_EQ(s.frames, 800u);
  for (std::size_t m = 0; m < s.bins; ++m) {
    EXPECT_EQ(s.at(m, 798), s.at(m, 797));
    EXPECT_EQ(s.at(m, 799), s.at(m, 797));
  }
}

TEST(LogMel, WhiteNoiseRoughlyUniformAcrossBins) {
  Rng rng(2024);
  AudioClip c;
  c.sample_rate = 16000;
  for (int i = 0; i < 128000; ++i) c.samples.push_back(rng.normal(0.0, 0.1));
  const Spectrogram s = log_mel(c, MelConfig{});
  double lo = INFINITY, hi = 0.0;
  for (std::size_t m = 0; m < s.bins; ++m) {
    double mean = 0.0;
    for (std::size_t f = 0; f < 798; ++f) mean += std::exp(s.at(m, f));
    mean /= 798.0;
    lo = std::min(lo, mean);
    hi = std::max(hi, mean);
  }
  EXPECT_LT(hi / lo, 10.0);
}

TEST(LogMel, DeterministicAndSerializes) {
  Rng rng(77);
  AudioClip c;
  c.sample_rate = 16000;
  for (int i = 0; i < 30000; ++i) c.samples.push_back(rng.uniform(-1, 1));
  const Spectrogram a = log_mel(cyclic_pad(c), MelConfig{});
  const Spectrogram b = log_mel(cyclic_pad(c), MelConfig{});
  EXPECT_EQ(a, b);
  const io::Bytes bytes = encode_spectrogram(a);
  EXPECT_EQ(bytes.size(), 4 + 4 + 4 + 8 + 128 * 800 * 8u);
  EXPECT_EQ(std::memcmp(bytes.data(), "SPG1", 4), 0);
  EXPECT_EQ(decode_spectrogram(bytes), a);
  io::Bytes truncated(bytes.begin(), bytes.end() - 8);
  EXPECT_THROW(decode_spectrogram(truncated), DataError);
}

}  // namespace
}  // namespace samast::dsp
