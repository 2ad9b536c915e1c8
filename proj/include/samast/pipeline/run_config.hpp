#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "samast/core/error.hpp"
#include "samast/core/key_values.hpp"
#include "samast/data/manifest.hpp"
#include "samast/dsp/mel.hpp"
#include "samast/embed/tsne.hpp"
#include "samast/eval/metrics.hpp"
#include "samast/model/config.hpp"
#include "samast/optim/optimizer.hpp"

namespace samast::pipeline {

enum class DataSource { synthetic, icbhi };
enum class SplitMode { official, subject };
enum class SamplerKind { uniform, weighted };

struct RunConfig {
  DataSource source = DataSource::synthetic;
  std::filesystem::path data_path = "data";
  SplitMode split = SplitMode::official;
  std::filesystem::path split_file;  // empty: <data_path>/split.txt
  double train_ratio = 0.6;
  double min_cycle_seconds = 0.025;

  double pad_seconds = 8.0;
  dsp::MelConfig mel;
  model::ModelConfig model;
  optim::OptimizerConfig optim = [] {
    optim::OptimizerConfig o;
    o.sam_enabled = true;
    return o;
  }();

  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  SamplerKind sampler = SamplerKind::weighted;
  // Measure per-bin input statistics on the training split before training.
  bool bin_stats = true;
  std::uint64_t seed = 1234;
  std::filesystem::path out = "run";

  eval::Protocol protocol = eval::Protocol::relaxed;

  embed::TsneConfig tsne;
  std::string embed_split = "test";

  data::ClassCounts synth_train{200, 50, 25, 25};
  data::ClassCounts synth_test{25, 25, 25, 25};
  double synth_min_duration = 2.0;
  double synth_max_duration = 5.0;

  std::filesystem::path resolved_split_file() const {
    return split_file.empty() ? data_path / "split.txt" : split_file;
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline std::string counts_text(const data::ClassCounts& c) {
  return std::to_string(c[0]) + "," + std::to_string(c[1]) + "," + std::to_string(c[2]) + "," +
         std::to_string(c[3]);
}

inline data::ClassCounts parse_counts(const std::string& key, const std::string& v) {
  data::ClassCounts c{};
  std::istringstream in(v);
  std::string tok;
  std::size_t i = 0;
  while (std::getline(in, tok, ',')) {
    if (i == c.size()) throw ConfigError("config key '" + key + "': expected 4 counts");
    c[i++] = kv::to_u64(key, kv::trim(tok));
  }
  if (i != c.size()) throw ConfigError("config key '" + key + "': expected 4 counts");
  return c;
}

inline kv::Record to_record(const RunConfig& c) {
  kv::Record r{
      {"data.source", c.source == DataSource::synthetic ? "synthetic" : "icbhi"},
      {"data.path", c.data_path.string()},
      {"data.split", c.split == SplitMode::official ? "official" : "subject"},
      {"data.split_file", c.split_file.string()},
      {"data.train_ratio", kv::format_double(c.train_ratio)},
      {"data.min_cycle_seconds", kv::format_double(c.min_cycle_seconds)},
      {"audio.pad_seconds", kv::format_double(c.pad_seconds)},
      {"mel.sample_rate", std::to_string(c.mel.sample_rate)},
      {"mel.window", std::to_string(c.mel.window)},
      {"mel.hop", std::to_string(c.mel.hop)},
      {"mel.fft_size", std::to_string(c.mel.fft_size)},
      {"mel.bins", std::to_string(c.mel.mel_bins)},
      {"mel.f_min", kv::format_double(c.mel.f_min)},
      {"mel.f_max", kv::format_double(c.mel.f_max)},
      {"mel.log_floor", kv::format_double(c.mel.log_floor)},
      {"mel.frame_multiple", std::to_string(c.mel.frame_multiple)},
  };
  for (auto& kvp : model::to_record(c.model)) r.push_back(kvp);
  for (auto& kvp : optim::to_record(c.optim)) r.push_back(kvp);
  const kv::Record tail{
      {"train.epochs", std::to_string(c.epochs)},
      {"train.batch_size", std::to_string(c.batch_size)},
      {"train.sampler", c.sampler == SamplerKind::weighted ? "weighted" : "uniform"},
      {"train.input_stats", c.bin_stats ? "per_bin" : "global"},
      {"seed", std::to_string(c.seed)},
      {"out", c.out.string()},
      {"eval.protocol", std::string(eval::protocol_name(c.protocol))},
      {"tsne.perplexity", kv::format_double(c.tsne.perplexity)},
      {"tsne.iterations", std::to_string(c.tsne.iterations)},
      {"tsne.learning_rate", kv::format_double(c.tsne.learning_rate)},
      {"tsne.split", c.embed_split},
      {"synth.train_counts", counts_text(c.synth_train)},
      {"synth.test_counts", counts_text(c.synth_test)},
      {"synth.min_duration", kv::format_double(c.synth_min_duration)},
      {"synth.max_duration", kv::format_double(c.synth_max_duration)},
  };
  r.insert(r.end(), tail.begin(), tail.end());
  return r;
}

// Applies overrides; unknown keys are rejected.
inline RunConfig apply_overrides(RunConfig c, const std::map<std::string, std::string>& values) {
  std::set<std::string> known;
  for (const auto& [k, v] : to_record(RunConfig{})) known.insert(k);
  for (const auto& [k, v] : values)
    if (!known.contains(k)) throw ConfigError("unknown config key '" + k + "'");

  auto get = [&](const char* key) -> const std::string* {
    auto it = values.find(key);
    return it == values.end() ? nullptr : &it->second;
  };
  auto choice = [&](const char* key, std::initializer_list<const char*> options) -> int {
    const std::string* v = get(key);
    if (!v) return -1;
    int i = 0;
    for (const char* o : options) {
      if (*v == o) return i;
      ++i;
    }
    std::string all;
    for (const char* o : options) all += std::string(all.empty() ? "" : "|") + o;
    throw ConfigError("config key '" + std::string(key) + "' must be one of " + all + ", got '" + *v + "'");
  };
  auto real = [&](const char* key, double& f) {
    if (const auto* v = get(key)) f = kv::to_double(key, *v);
  };
  auto size = [&](const char* key, std::size_t& f) {
    if (const auto* v = get(key)) f = kv::to_u64(key, *v);
  };

  if (int i = choice("data.source", {"synthetic", "icbhi"}); i >= 0) c.source = static_cast<DataSource>(i);
  if (const auto* v = get("data.path")) c.data_path = *v;
  if (int i = choice("data.split", {"official", "subject"}); i >= 0) c.split = static_cast<SplitMode>(i);
  if (const auto* v = get("data.split_file")) c.split_file = *v;
  real("data.train_ratio", c.train_ratio);
  real("data.min_cycle_seconds", c.min_cycle_seconds);
  real("audio.pad_seconds", c.pad_seconds);
  if (const auto* v = get("mel.sample_rate")) c.mel.sample_rate = static_cast<int>(kv::to_u64("mel.sample_rate", *v));
  size("mel.window", c.mel.window);
  size("mel.hop", c.mel.hop);
  size("mel.fft_size", c.mel.fft_size);
  size("mel.bins", c.mel.mel_bins);
  real("mel.f_min", c.mel.f_min);
  real("mel.f_max", c.mel.f_max);
  real("mel.log_floor", c.mel.log_floor);
  size("mel.frame_multiple", c.mel.frame_multiple);
  c.model = model::apply_record(c.model, values);
  if (const auto* v = get("optim.kind")) c.optim.kind = optim::parse_base_kind(*v);
  real("optim.lr", c.optim.learning_rate);
  real("optim.weight_decay", c.optim.weight_decay);
  real("optim.beta1", c.optim.beta1);
  real("optim.beta2", c.optim.beta2);
  real("optim.eps", c.optim.eps);
  if (const auto* v = get("optim.sam")) c.optim.sam_enabled = kv::to_bool("optim.sam", *v);
  real("optim.rho", c.optim.rho);
  size("train.epochs", c.epochs);
  size("train.batch_size", c.batch_size);
  if (int i = choice("train.sampler", {"uniform", "weighted"}); i >= 0) c.sampler = static_cast<SamplerKind>(i);
  if (int i = choice("train.input_stats", {"global", "per_bin"}); i >= 0) c.bin_stats = i == 1;
  if (const auto* v = get("seed")) c.seed = kv::to_u64("seed", *v);
  if (const auto* v = get("out")) c.out = *v;
  if (const auto* v = get("eval.protocol")) c.protocol = eval::parse_protocol(*v);
  real("tsne.perplexity", c.tsne.perplexity);
  size("tsne.iterations", c.tsne.iterations);
  real("tsne.learning_rate", c.tsne.learning_rate);
  if (int i = choice("tsne.split", {"train", "test"}); i >= 0) c.embed_split = i == 0 ? "train" : "test";
  if (const auto* v = get("synth.train_counts")) c.synth_train = parse_counts("synth.train_counts", *v);
  if (const auto* v = get("synth.test_counts")) c.synth_test = parse_counts("synth.test_counts", *v);
  real("synth.min_duration", c.synth_min_duration);
  real("synth.max_duration", c.synth_max_duration);
  return c;
}

// "key=value" from the command line.
inline std::pair<std::string, std::string> parse_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got '" + s + "'");
  return {kv::trim(std::string_view(s).substr(0, eq)), kv::trim(std::string_view(s).substr(eq + 1))};
}

// Frames produced by the front end for a padded clip.
inline std::size_t expected_frames(const RunConfig& c) {
  const auto samples = static_cast<std::size_t>(std::llround(c.pad_seconds * c.mel.sample_rate));
  if (samples < c.mel.window) throw ConfigError("audio.pad_seconds is shorter than one window");
  const std::size_t f = 1 + (samples - c.mel.window) / c.mel.hop;
  return (f + c.mel.frame_multiple - 1) / c.mel.frame_multiple * c.mel.frame_multiple;
}

// Value checks that need no filesystem access.
inline void validate(const RunConfig& c) {
  c.mel.validate();
  c.model.validate();
  c.optim.validate();
  if (!(c.pad_seconds > 0.0)) throw ConfigError("audio.pad_seconds must be positive");
  if (c.model.bins != c.mel.mel_bins) {
    throw ConfigError("model.bins (" + std::to_string(c.model.bins) + ") must equal mel.bins (" +
                      std::to_string(c.mel.mel_bins) + ")");
  }
  if (c.model.frames != expected_frames(c)) {
    throw ConfigError("model.frames (" + std::to_string(c.model.frames) + ") must equal the " +
                      std::to_string(expected_frames(c)) + " frames produced by the front end");
  }
  if (c.epochs == 0) throw ConfigError("train.epochs must be positive");
  if (c.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(c.train_ratio > 0.0 && c.train_ratio < 1.0)) throw ConfigError("data.train_ratio must lie in (0, 1)");
  if (!(c.min_cycle_seconds >= 0.0)) throw ConfigError("data.min_cycle_seconds must be non-negative");
  if (c.tsne.iterations == 0) throw ConfigError("tsne.iterations must be positive");
  if (!(c.tsne.perplexity >= 1.0)) throw ConfigError("tsne.perplexity must be at least 1");
  if (!(c.synth_min_duration > 0.0 && c.synth_min_duration <= c.synth_max_duration))
    throw ConfigError("synth durations need 0 < min <= max");
}

}  // namespace samast::pipeline
