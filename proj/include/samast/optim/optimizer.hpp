#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "samast/core/error.hpp"
#include "samast/core/key_values.hpp"
#include "samast/core/param_set.hpp"

namespace samast::optim {

enum class BaseKind { sgd, adamw };

inline std::string to_string(BaseKind k) { return k == BaseKind::sgd ? "sgd" : "adamw"; }

inline BaseKind parse_base_kind(const std::string& s) {
  if (s == "sgd") return BaseKind::sgd;
  if (s == "adamw") return BaseKind::adamw;
  throw ConfigError("optimizer kind must be sgd or adamw, got '" + s + "'");
}

struct OptimizerConfig {
  BaseKind kind = BaseKind::adamw;
  double learning_rate = 1e-5;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool sam_enabled = false;
  double rho = 0.05;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("optimizer: learning rate must be positive");
    if (weight_decay < 0.0) throw ConfigError("optimizer: weight decay must be non-negative");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
      throw ConfigError("optimizer: betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw ConfigError("optimizer: eps must be positive");
    // rho == 0 is accepted and switches the perturbation off.
    if (sam_enabled && rho < 0.0) throw ConfigError("optimizer: rho must be non-negative");
  }

  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

// AdamW moments and the shared step counter. SGD only advances the counter.
struct OptimizerState {
  ParamSet first_moment;
  ParamSet second_moment;
  std::uint64_t step = 0;

  static OptimizerState for_params(const ParamSet& params) {
    return {params.zeros_like(), params.zeros_like(), 0};
  }

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

// w <- w - lr * (g + wd * w)
inline void sgd_step(ParamSet& params, const ParamSet& grads, const OptimizerConfig& cfg) {
  require_same_layout(params, grads, "sgd_step");
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto w = params[p].values();
    const auto g = grads[p].values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] -= cfg.learning_rate * (g[i] + cfg.weight_decay * w[i]);
    }
  }
}

// Bias-corrected Adam with decoupled decay: w is first scaled by
// (1 - lr * wd), then moved by the adaptive term.
inline void adamw_step(ParamSet& params, const ParamSet& grads, OptimizerState& state,
                       const OptimizerConfig& cfg) {
  require_same_layout(params, grads, "adamw_step");
  if (state.first_moment.empty() && !params.empty()) state = OptimizerState::for_params(params);
  require_same_layout(params, state.first_moment, "adamw_step moments");
  require_same_layout(params, state.second_moment, "adamw_step moments");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  const double decay = 1.0 - cfg.learning_rate * cfg.weight_decay;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto w = params[p].values();
    const auto g = grads[p].values();
    auto m = state.first_moment[p].values();
    auto v = state.second_moment[p].values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] = w[i] * decay - cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

inline void base_step(ParamSet& params, const ParamSet& grads, OptimizerState& state,
                      const OptimizerConfig& cfg) {
  if (cfg.kind == BaseKind::sgd) {
    sgd_step(params, grads, cfg);
    state.step += 1;
  } else {
    adamw_step(params, grads, state, cfg);
  }
}

inline kv::Record to_record(const OptimizerConfig& c) {
  return {{"optim.kind", to_string(c.kind)},
          {"optim.lr", kv::format_double(c.learning_rate)},
          {"optim.weight_decay", kv::format_double(c.weight_decay)},
          {"optim.beta1", kv::format_double(c.beta1)},
          {"optim.beta2", kv::format_double(c.beta2)},
          {"optim.eps", kv::format_double(c.eps)},
          {"optim.sam", kv::from_bool(c.sam_enabled)},
          {"optim.rho", kv::format_double(c.rho)}};
}

}  // namespace samast::optim
