#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>

#include "samast/core/binary_io.hpp"
#include "samast/core/error.hpp"
#include "samast/dsp/audio_clip.hpp"

// RIFF/WAVE reading (PCM16 and float32, mono or stereo) and PCM16 writing.
namespace samast::dsp {

namespace detail {

inline std::uint16_t le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace detail

inline AudioClip decode_wav(std::span<const std::uint8_t> bytes, std::string source_id = {}) {
  using detail::le16;
  using detail::le32;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0) {
    throw DecodeError("RIFF: missing RIFF header");
  }
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) throw DecodeError("RIFF: form type is not WAVE");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id(reinterpret_cast<const char*>(bytes.data() + pos), 4);
    const std::uint32_t size = le32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) {
      // Some writers leave a bogus data size; clamp the final data chunk.
      if (id == "data") {
        data = bytes.subspan(body);
        have_data = true;
        break;
      }
      throw DecodeError(id + ": chunk size " + std::to_string(size) + " exceeds file");
    }
    if (id == "fmt ") {
      if (size < 16) throw DecodeError("fmt : chunk too short");
      const std::uint8_t* f = bytes.data() + body;
      format = le16(f);
      channels = le16(f + 2);
      rate = le32(f + 4);
      bits = le16(f + 14);
      if (format == detail::kFormatExtensible) {
        if (size < 40) throw DecodeError("fmt : extensible chunk too short");
        format = le16(f + 24);
      }
      have_fmt = true;
    } else if (id == "data") {
      data = bytes.subspan(body, size);
      have_data = true;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw DecodeError("fmt : chunk missing");
  if (!have_data) throw DecodeError("data: chunk missing");
  if (channels < 1 || channels > 2) {
    throw DecodeError("fmt : unsupported channel count " + std::to_string(channels));
  }
  if (rate == 0) throw DecodeError("fmt : zero sample rate");
  const bool pcm16 = format == detail::kFormatPcm && bits == 16;
  const bool f32 = format == detail::kFormatFloat && bits == 32;
  if (!pcm16 && !f32) {
    throw DecodeError("fmt : unsupported codec (format " + std::to_string(format) + ", " +
                      std::to_string(bits) + " bits)");
  }
  const std::size_t frame_bytes = static_cast<std::size_t>(channels) * (bits / 8);
  const std::size_t frames = data.size() / frame_bytes;
  if (frames == 0) throw DecodeError("data: no samples");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.source_id = std::move(source_id);
  clip.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* p = data.data() + i * frame_bytes + c * (bits / 8);
      if (pcm16) {
        acc += static_cast<double>(static_cast<std::int16_t>(le16(p))) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, p, sizeof v);
        acc += static_cast<double>(v);
      }
    }
    clip.samples[i] = acc / static_cast<double>(channels);
  }
  return clip;
}

inline AudioClip read_wav(const std::filesystem::path& path) {
  const io::Bytes bytes = io::read_file(path);
  try {
    return decode_wav(bytes, path.stem().string());
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

// Mono PCM16. Samples are clamped to the representable range and rounded.
inline io::Bytes encode_wav_pcm16(const AudioClip& clip) {
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  io::Writer w;
  w.magic("RIFF");
  w.u32(36 + 2 * n);
  w.magic("WAVE");
  w.magic("fmt ");
  w.u32(16);
  const std::uint16_t fmt_fields[2] = {detail::kFormatPcm, 1};
  w.raw(fmt_fields, sizeof fmt_fields);
  w.u32(static_cast<std::uint32_t>(clip.sample_rate));
  w.u32(static_cast<std::uint32_t>(clip.sample_rate) * 2);
  const std::uint16_t block[2] = {2, 16};
  w.raw(block, sizeof block);
  w.magic("data");
  w.u32(2 * n);
  for (double s : clip.samples) {
    const double q = std::clamp(std::nearbyint(s * 32768.0), -32768.0, 32767.0);
    const auto v = static_cast<std::int16_t>(q);
    w.raw(&v, sizeof v);
  }
  return w.take();
}

inline void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  io::write_file(path, encode_wav_pcm16(clip));
}

}  // namespace samast::dsp
