#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "samast/autodiff/graph.hpp"
#include "samast/autodiff/ops.hpp"
#include "samast/core/error.hpp"
#include "samast/core/param_set.hpp"
#include "samast/core/rng.hpp"
#include "samast/dsp/spectrogram.hpp"
#include "samast/model/config.hpp"
#include "samast/optim/sam.hpp"

namespace samast::model {

inline std::string block_prefix(std::size_t i) { return "blocks." + std::to_string(i) + "."; }

// Weights and positional embeddings ~ truncated normal (sd 0.02), biases and
// the CLS token zero, layer-norm gains one. Draw order is insertion order.
inline ParamSet init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ParamSet p;
  const std::size_t d = cfg.embed_dim;
  auto weight = [&](const std::string& name, Shape shape) {
    Tensor t(std::move(shape));
    for (double& v : t.values()) v = rng.truncated_normal(0.02);
    p.add(name, std::move(t));
  };
  auto zeros = [&](const std::string& name, Shape shape) { p.add(name, Tensor(std::move(shape))); };
  auto ones = [&](const std::string& name, std::size_t n) { p.add(name, Tensor(Shape{n}, 1.0)); };

  weight("patch_embed.weight", {cfg.patch_dim(), d});
  zeros("patch_embed.bias", {d});
  zeros("cls_token", {1, d});
  weight("pos_embed", {cfg.tokens(), d});
  for (std::size_t i = 0; i < cfg.depth; ++i) {
    const std::string b = block_prefix(i);
    ones(b + "norm1.gain", d);
    zeros(b + "norm1.bias", {d});
    weight(b + "attn.qkv.weight", {d, 3 * d});
    zeros(b + "attn.qkv.bias", {3 * d});
    weight(b + "attn.proj.weight", {d, d});
    zeros(b + "attn.proj.bias", {d});
    ones(b + "norm2.gain", d);
    zeros(b + "norm2.bias", {d});
    weight(b + "mlp.fc1.weight", {d, cfg.hidden_dim()});
    zeros(b + "mlp.fc1.bias", {cfg.hidden_dim()});
    weight(b + "mlp.fc2.weight", {cfg.hidden_dim(), d});
    zeros(b + "mlp.fc2.bias", {d});
  }
  ones("norm.gain", d);
  zeros("norm.bias", {d});
  weight("head.weight", {d, cfg.num_classes});
  zeros("head.bias", {cfg.num_classes});
  return p;
}

inline void require_input_shape(const dsp::Spectrogram& s, const ModelConfig& cfg) {
  if (s.bins != cfg.bins || s.frames != cfg.frames) {
    throw ConfigError("model expects " + std::to_string(cfg.bins) + "x" +
                      std::to_string(cfg.frames) + " input, got " + std::to_string(s.bins) + "x" +
                      std::to_string(s.frames));
  }
}

// Non-overlapping tiles, ordered row-major over (bin block, frame block), each
// flattened row-major over (bin, frame). Result is [N x patch^2].
inline Tensor patchify(const dsp::Spectrogram& s, const ModelConfig& cfg) {
  cfg.validate();
  require_input_shape(s, cfg);
  const std::size_t ps = cfg.patch, fb = cfg.frame_blocks();
  Tensor out(Shape{cfg.num_patches(), cfg.patch_dim()});
  for (std::size_t n = 0; n < cfg.num_patches(); ++n) {
    const std::size_t b0 = (n / fb) * ps, f0 = (n % fb) * ps;
    for (std::size_t i = 0; i < ps; ++i)
      for (std::size_t j = 0; j < ps; ++j)
        out[n * cfg.patch_dim() + i * ps + j] = s.at(b0 + i, f0 + j);
  }
  return out;
}

inline dsp::Spectrogram unpatchify(const Tensor& patches, const ModelConfig& cfg) {
  cfg.validate();
  if (patches.shape() != Shape{cfg.num_patches(), cfg.patch_dim()}) {
    throw DimensionError("unpatchify: expected " +
                         shape_string({cfg.num_patches(), cfg.patch_dim()}) + ", got " +
                         shape_string(patches.shape()));
  }
  dsp::Spectrogram s;
  s.bins = cfg.bins;
  s.frames = cfg.frames;
  s.values.assign(cfg.bins * cfg.frames, 0.0);
  const std::size_t ps = cfg.patch, fb = cfg.frame_blocks();
  for (std::size_t n = 0; n < cfg.num_patches(); ++n) {
    const std::size_t b0 = (n / fb) * ps, f0 = (n % fb) * ps;
    for (std::size_t i = 0; i < ps; ++i)
      for (std::size_t j = 0; j < ps; ++j)
        s.values[(b0 + i) * cfg.frames + f0 + j] = patches[n * cfg.patch_dim() + i * ps + j];
  }
  return s;
}

// Parameters placed on a graph, addressed by name.
struct Bound {
  const ParamSet* layout = nullptr;
  std::vector<ad::Var> vars;

  ad::Var operator()(const std::string& name) const { return vars[layout->index_of(name)]; }
};

inline Bound bind(ad::Graph& g, const ParamSet& params, bool trainable) {
  Bound b{&params, {}};
  b.vars.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    b.vars.push_back(trainable ? g.parameter(params[i]) : g.constant(params[i]));
  return b;
}

// Inverted dropout; identity when rng is null.
inline ad::Var dropout(ad::Var x, double rate, Rng* rng) {
  if (rng == nullptr || rate == 0.0) return x;
  Tensor mask(x.shape());
  const double keep = 1.0 / (1.0 - rate);
  for (double& m : mask.values()) m = rng->uniform() < rate ? 0.0 : keep;
  return ad::mul(x, x.graph().constant(std::move(mask)));
}

inline ad::Var linear(const Bound& p, const std::string& name, ad::Var x) {
  return ad::add_bias(ad::matmul(x, p(name + ".weight")), p(name + ".bias"));
}

// [layer][head] -> [T x T] softmax weights.
using AttentionMaps = std::vector<std::vector<Tensor>>;

inline ad::Var self_attention(const ModelConfig& cfg, const Bound& p, const std::string& prefix,
                              ad::Var x, std::vector<Tensor>* maps) {
  const std::size_t d = cfg.embed_dim, dh = cfg.head_dim();
  const ad::Var qkv = linear(p, prefix + "qkv", x);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<ad::Var> heads;
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const ad::Var q = ad::slice_cols(qkv, h * dh, dh);
    const ad::Var k = ad::slice_cols(qkv, d + h * dh, dh);
    const ad::Var v = ad::slice_cols(qkv, 2 * d + h * dh, dh);
    const ad::Var a = ad::softmax(ad::scale(ad::matmul(q, ad::transpose(k)), inv_sqrt), 1);
    if (maps) maps->push_back(a.value());
    heads.push_back(ad::matmul(a, v));
  }
  return linear(p, prefix + "proj", heads.size() == 1 ? heads[0] : ad::concat_cols(heads));
}

// Pre-norm encoder stack over a token matrix [T x D]. No final norm.
inline ad::Var encode_sequence(const ModelConfig& cfg, const Bound& p, ad::Var x, Rng* rng,
                               AttentionMaps* maps) {
  for (std::size_t i = 0; i < cfg.depth; ++i) {
    const std::string b = block_prefix(i);
    std::vector<Tensor>* layer = nullptr;
    if (maps) layer = &maps->emplace_back();
    const ad::Var n1 = ad::layer_norm(x, p(b + "norm1.gain"), p(b + "norm1.bias"));
    x = ad::add(x, dropout(self_attention(cfg, p, b + "attn.", n1, layer), cfg.dropout, rng));
    const ad::Var n2 = ad::layer_norm(x, p(b + "norm2.gain"), p(b + "norm2.bias"));
    const ad::Var hidden = ad::gelu(linear(p, b + "mlp.fc1", n2));
    x = ad::add(x, dropout(linear(p, b + "mlp.fc2", hidden), cfg.dropout, rng));
  }
  return x;
}

// Patch embedding, CLS prepended, positional embeddings added. [T x D].
inline ad::Var embed_input(const ModelConfig& cfg, const Bound& p, const dsp::Spectrogram& s,
                           Rng* rng) {
  Tensor patches = patchify(s, cfg);
  const std::size_t ps = cfg.patch, fb = cfg.frame_blocks(), dim = cfg.patch_dim();
  for (std::size_t n = 0; n < cfg.num_patches(); ++n) {
    for (std::size_t r = 0; r < ps; ++r) {
      const std::size_t bin = (n / fb) * ps + r;
      const double mean = cfg.mean_of(bin), inv = 1.0 / (2.0 * cfg.std_of(bin));
      double* row = patches.values().data() + n * dim + r * ps;
      for (std::size_t c = 0; c < ps; ++c) row[c] = (row[c] - mean) * inv;
    }
  }
  ad::Graph& g = p.vars.front().graph();
  const ad::Var tokens = linear(p, "patch_embed", g.constant(std::move(patches)));
  const ad::Var x = ad::add(ad::concat_rows({p("cls_token"), tokens}), p("pos_embed"));
  return dropout(x, cfg.dropout, rng);
}

struct ForwardOptions {
  bool train = false;
  std::uint64_t dropout_seed = 0;
};

struct Outputs {
  ad::Var embedding;  // [1 x D], CLS after the final norm
  ad::Var logits;     // [1 x K]
};

inline Outputs run(const ModelConfig& cfg, const Bound& p, const dsp::Spectrogram& s,
                   const ForwardOptions& opts, AttentionMaps* maps = nullptr) {
  std::optional<Rng> rng;
  if (opts.train && cfg.dropout > 0.0) rng.emplace(opts.dropout_seed);
  Rng* r = rng ? &*rng : nullptr;
  const ad::Var x = encode_sequence(cfg, p, embed_input(cfg, p, s, r), r, maps);
  const ad::Var cls = ad::layer_norm(ad::slice_rows(x, 0, 1), p("norm.gain"), p("norm.bias"));
  return {cls, linear(p, "head", cls)};
}

inline void require_params(const ModelConfig& cfg, const ParamSet& params) {
  const ParamSet expected = init_params(cfg, 0);
  if (params.size() != expected.size()) {
    throw ConfigError("parameter set has " + std::to_string(params.size()) +
                      " tensors, model config needs " + std::to_string(expected.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (params.name(i) != expected.name(i) || params[i].shape() != expected[i].shape()) {
      throw ConfigError("parameter " + params.name(i) + " " + shape_string(params[i].shape()) +
                        " does not match model config (" + expected.name(i) + " " +
                        shape_string(expected[i].shape()) + ")");
    }
  }
}

inline std::vector<double> forward(const ModelConfig& cfg, const ParamSet& params,
                                   const dsp::Spectrogram& s, const ForwardOptions& opts = {}) {
  ad::Graph g;
  const Bound p = bind(g, params, false);
  return run(cfg, p, s, opts).logits.value().data();
}

inline std::vector<double> extract_embedding(const ModelConfig& cfg, const ParamSet& params,
                                             const dsp::Spectrogram& s) {
  ad::Graph g;
  const Bound p = bind(g, params, false);
  return run(cfg, p, s, {}).embedding.value().data();
}

inline AttentionMaps export_attention(const ModelConfig& cfg, const ParamSet& params,
                                      const dsp::Spectrogram& s) {
  ad::Graph g;
  const Bound p = bind(g, params, false);
  AttentionMaps maps;
  run(cfg, p, s, {}, &maps);
  return maps;
}

// Mean cross-entropy over a batch and its gradient. Sample b draws its
// dropout masks from mix_seed(opts.dropout_seed, b).
inline optim::LossAndGrad loss_and_grad(const ModelConfig& cfg, const ParamSet& params,
                                        std::span<const dsp::Spectrogram* const> batch,
                                        std::span<const int> labels, const ForwardOptions& opts,
                                        std::vector<double>* logits_out = nullptr) {
  if (batch.empty() || batch.size() != labels.size()) {
    throw ContractError("loss_and_grad: batch of " + std::to_string(batch.size()) +
                        " inputs with " + std::to_string(labels.size()) + " labels");
  }
  ad::Graph g;
  const Bound p = bind(g, params, true);
  std::vector<ad::Var> rows;
  rows.reserve(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    ForwardOptions o = opts;
    o.dropout_seed = mix_seed(opts.dropout_seed, b);
    rows.push_back(run(cfg, p, *batch[b], o).logits);
  }
  const ad::Var logits = rows.size() == 1 ? rows[0] : ad::concat_rows(rows);
  if (logits_out) *logits_out = logits.value().data();
  const ad::Var loss = ad::cross_entropy(logits, labels);
  g.backward(loss);
  optim::LossAndGrad out{loss.value().item(), params.zeros_like()};
  for (std::size_t i = 0; i < params.size(); ++i) out.grads[i] = g.grad(p.vars[i]);
  return out;
}

}  // namespace samast::model
