#pragma once

#include <cstddef>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "samast/core/error.hpp"
#include "samast/core/key_values.hpp"

namespace samast::model {

struct ModelConfig {
  std::size_t patch = 16;
  std::size_t embed_dim = 96;
  std::size_t depth = 4;
  std::size_t heads = 4;
  std::size_t mlp_ratio = 4;
  std::size_t num_classes = 4;
  std::size_t bins = 128;
  std::size_t frames = 800;
  double dropout = 0.1;
  // Inputs are mapped to (x - input_mean) / (2 * input_std) before patch embedding.
  double input_mean = -4.2677393;
  double input_std = 4.5689974;
  // Per-bin statistics measured on training data. When set they replace the
  // scalar pair above for each mel bin.
  std::vector<double> bin_mean;
  std::vector<double> bin_std;

  bool has_bin_stats() const { return !bin_mean.empty(); }
  double mean_of(std::size_t bin) const { return has_bin_stats() ? bin_mean[bin] : input_mean; }
  double std_of(std::size_t bin) const { return has_bin_stats() ? bin_std[bin] : input_std; }

  std::size_t bin_blocks() const { return bins / patch; }
  std::size_t frame_blocks() const { return frames / patch; }
  std::size_t num_patches() const { return bin_blocks() * frame_blocks(); }
  std::size_t patch_dim() const { return patch * patch; }
  std::size_t tokens() const { return num_patches() + 1; }
  std::size_t head_dim() const { return embed_dim / heads; }
  std::size_t hidden_dim() const { return embed_dim * mlp_ratio; }

  void validate() const {
    if (patch == 0 || embed_dim == 0 || depth == 0 || heads == 0 || mlp_ratio == 0 ||
        num_classes < 2 || bins == 0 || frames == 0) {
      throw ConfigError("model: every dimension must be positive and num_classes >= 2");
    }
    if (bins % patch != 0 || frames % patch != 0) {
      throw ConfigError("model: input " + std::to_string(bins) + "x" + std::to_string(frames) +
                        " is not divisible by patch size " + std::to_string(patch));
    }
    if (embed_dim % heads != 0) {
      throw ConfigError("model: embed_dim " + std::to_string(embed_dim) +
                        " is not divisible by heads " + std::to_string(heads));
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model: dropout must be in [0, 1)");
    if (!(input_std > 0.0)) throw ConfigError("model: input_std must be positive");
    if (bin_mean.size() != bin_std.size() || (has_bin_stats() && bin_mean.size() != bins)) {
      throw ConfigError("model: per-bin statistics need exactly " + std::to_string(bins) +
                        " means and standard deviations");
    }
    for (double v : bin_std)
      if (!(v > 0.0)) throw ConfigError("model: per-bin standard deviations must be positive");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Equal up to the measured input statistics.
inline bool same_architecture(ModelConfig a, ModelConfig b) {
  a.bin_mean.clear();
  a.bin_std.clear();
  b.bin_mean.clear();
  b.bin_std.clear();
  return a == b;
}

inline std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + kv::format_double(v[i]);
  return s;
}

inline std::vector<double> split_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  for (std::string tok; std::getline(in, tok, ',');) out.push_back(kv::to_double(key, kv::trim(tok)));
  return out;
}

// The per-bin statistics appear only when set.
inline kv::Record to_record(const ModelConfig& c) {
  kv::Record r{{"model.patch", std::to_string(c.patch)},
          {"model.embed_dim", std::to_string(c.embed_dim)},
          {"model.depth", std::to_string(c.depth)},
          {"model.heads", std::to_string(c.heads)},
          {"model.mlp_ratio", std::to_string(c.mlp_ratio)},
          {"model.num_classes", std::to_string(c.num_classes)},
          {"model.bins", std::to_string(c.bins)},
          {"model.frames", std::to_string(c.frames)},
          {"model.dropout", kv::format_double(c.dropout)},
          {"model.input_mean", kv::format_double(c.input_mean)},
          {"model.input_std", kv::format_double(c.input_std)}};
  if (c.has_bin_stats()) {
    r.emplace_back("model.bin_mean", join_doubles(c.bin_mean));
    r.emplace_back("model.bin_std", join_doubles(c.bin_std));
  }
  return r;
}

// Applies any model.* keys present in `values` on top of `base`.
inline ModelConfig apply_record(ModelConfig c, const std::map<std::string, std::string>& values) {
  auto size = [&](const char* key, std::size_t& field) {
    if (auto it = values.find(key); it != values.end()) field = kv::to_u64(key, it->second);
  };
  auto real = [&](const char* key, double& field) {
    if (auto it = values.find(key); it != values.end()) field = kv::to_double(key, it->second);
  };
  size("model.patch", c.patch);
  size("model.embed_dim", c.embed_dim);
  size("model.depth", c.depth);
  size("model.heads", c.heads);
  size("model.mlp_ratio", c.mlp_ratio);
  size("model.num_classes", c.num_classes);
  size("model.bins", c.bins);
  size("model.frames", c.frames);
  real("model.dropout", c.dropout);
  real("model.input_mean", c.input_mean);
  real("model.input_std", c.input_std);
  if (auto it = values.find("model.bin_mean"); it != values.end())
    c.bin_mean = split_doubles("model.bin_mean", it->second);
  if (auto it = values.find("model.bin_std"); it != values.end())
    c.bin_std = split_doubles("model.bin_std", it->second);
  return c;
}

}  // namespace samast::model
