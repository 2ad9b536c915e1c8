#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "samast/core/binary_io.hpp"
#include "samast/core/key_values.hpp"
#include "samast/core/rng.hpp"
#include "samast/data/sampler.hpp"
#include "samast/model/ast.hpp"
#include "samast/model/checkpoint.hpp"
#include "samast/optim/sam.hpp"
#include "samast/pipeline/cache.hpp"
#include "samast/pipeline/run_config.hpp"

namespace samast::pipeline {

// Stream identifiers for mix_seed(seed, stream).
inline constexpr std::uint64_t init_stream = 1;
inline constexpr std::uint64_t sampler_stream = 2;
inline constexpr std::uint64_t dropout_stream_base = 1u << 20;

// Index of the largest logit; ties go to the lowest class index.
inline int argmax(std::span<const double> logits) {
  int best = 0;
  for (std::size_t k = 1; k < logits.size(); ++k)
    if (logits[k] > logits[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  return best;
}

// Training keys stored with each checkpoint. Paths are left out so the bytes
// depend only on the configuration and seed.
inline kv::Record training_record(const RunConfig& c) {
  kv::Record out;
  for (auto& [k, v] : to_record(c))
    if (k.starts_with("optim.") || k.starts_with("train.") || k == "seed") out.emplace_back(k, v);
  return out;
}

struct TrainResult {
  model::ModelConfig model;  // run config's model plus measured input statistics
  ParamSet params;
  optim::OptimizerState state;
  std::string log_csv;
  double train_accuracy = 0.0;
  std::size_t steps = 0;
};

inline std::string checkpoint_name(std::size_t epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%03zu.astc", epoch);
  return buf;
}

// Batches for one epoch: ceil(n / batch) of them. Weighted sampling draws
// each batch with replacement; uniform sampling visits a fresh permutation.
inline std::vector<std::vector<std::size_t>> epoch_batches(const RunConfig& c,
                                                           const data::SamplerWeights* weights,
                                                           std::size_t n, Rng& rng) {
  const std::size_t steps = (n + c.batch_size - 1) / c.batch_size;
  std::vector<std::vector<std::size_t>> out;
  if (weights) {
    for (std::size_t s = 0; s < steps; ++s) out.push_back(data::weighted_sample(*weights, c.batch_size, rng));
    return out;
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t a = s * c.batch_size, b = std::min(n, a + c.batch_size);
    out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(a), perm.begin() + static_cast<std::ptrdiff_t>(b));
  }
  return out;
}

// Mean and standard deviation of every mel bin over all frames of `set`.
// Constant bins get a standard deviation of one.
inline void measure_bin_stats(model::ModelConfig& cfg, const LoadedSplit& set) {
  std::vector<double> sum(cfg.bins, 0.0), sq(cfg.bins, 0.0);
  double count = 0.0;
  for (const auto& s : set.specs) {
    for (std::size_t b = 0; b < s.bins; ++b)
      for (std::size_t f = 0; f < s.frames; ++f) sum[b] += s.at(b, f);
    count += static_cast<double>(s.frames);
  }
  cfg.bin_mean.assign(cfg.bins, 0.0);
  cfg.bin_std.assign(cfg.bins, 1.0);
  for (std::size_t b = 0; b < cfg.bins; ++b) cfg.bin_mean[b] = sum[b] / count;
  for (const auto& s : set.specs)
    for (std::size_t b = 0; b < s.bins; ++b)
      for (std::size_t f = 0; f < s.frames; ++f) {
        const double d = s.at(b, f) - cfg.bin_mean[b];
        sq[b] += d * d;
      }
  for (std::size_t b = 0; b < cfg.bins; ++b) {
    const double sd = std::sqrt(sq[b] / count);
    if (sd > 1e-6) cfg.bin_std[b] = sd;
  }
}

inline double accuracy(const model::ModelConfig& cfg, const ParamSet& params, const LoadedSplit& set) {
  if (set.specs.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < set.specs.size(); ++i)
    correct += argmax(model::forward(cfg, params, set.specs[i])) == set.labels[i];
  return static_cast<double>(correct) / static_cast<double>(set.specs.size());
}

// Trains from scratch. Writes train_log.csv, checkpoints/epoch_NNN.astc and
// model.astc under `run_dir`.
inline TrainResult train(const RunConfig& c, const LoadedSplit& set,
                         const std::filesystem::path& run_dir, const Log& log = {}) {
  validate(c);
  if (set.specs.empty()) throw ConfigError("training split is empty");
  std::vector<data::Label> labels;
  for (int l : set.labels) labels.push_back(data::label_from_index(l));
  std::optional<data::SamplerWeights> weights;
  if (c.sampler == SamplerKind::weighted) weights = data::make_weights(labels);

  TrainResult r;
  r.model = c.model;
  if (c.bin_stats) measure_bin_stats(r.model, set);
  r.params = model::init_params(r.model, mix_seed(c.seed, init_stream));
  r.state = optim::OptimizerState::for_params(r.params);
  Rng sampler(mix_seed(c.seed, sampler_stream));
  r.log_csv = "step,epoch,loss,sharpness\n";

  for (std::size_t epoch = 1; epoch <= c.epochs; ++epoch) {
    double epoch_loss = 0.0;
    const auto batches = epoch_batches(c, weights ? &*weights : nullptr, set.specs.size(), sampler);
    for (const auto& batch : batches) {
      ++r.steps;
      std::vector<const dsp::Spectrogram*> xs;
      std::vector<int> ys;
      for (std::size_t i : batch) {
        xs.push_back(&set.specs[i]);
        ys.push_back(set.labels[i]);
      }
      const model::ForwardOptions opts{true, mix_seed(c.seed, dropout_stream_base + r.steps)};
      auto loss_fn = [&](const ParamSet& p) { return model::loss_and_grad(r.model, p, xs, ys, opts); };
      const optim::SamMetrics m = optim::sam_step(loss_fn, r.params, r.state, c.optim);
      epoch_loss += m.loss;
      r.log_csv += std::to_string(r.steps) + "," + std::to_string(epoch) + "," +
                   kv::format_double(m.loss) + "," +
                   (m.sharpness ? kv::format_double(*m.sharpness) : std::string()) + "\n";
    }
    model::ModelCheckpoint ck;
    ck.config = r.model;
    ck.params = r.params;
    ck.optimizer = r.state;
    ck.seed = c.seed;
    ck.epoch = epoch;
    ck.extra = training_record(c);
    model::save_checkpoint(run_dir / "checkpoints" / checkpoint_name(epoch), ck);
    if (epoch == c.epochs) model::save_checkpoint(run_dir / "model.astc", ck);
    if (log) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "epoch %zu/%zu mean loss %.4f", epoch, c.epochs,
                    epoch_loss / static_cast<double>(batches.size()));
      log(buf);
    }
  }
  io::write_text(run_dir / "train_log.csv", r.log_csv);
  r.train_accuracy = accuracy(r.model, r.params, set);
  return r;
}

}  // namespace samast::pipeline
