#pragma once

#include <concepts>
#include <optional>

#include "samast/core/param_set.hpp"
#include "samast/optim/optimizer.hpp"

// Sharpness-aware minimization: ascend to w + eps_hat inside the rho-ball,
// take the gradient there, and let the base optimizer descend from w.
namespace samast::optim {

struct LossAndGrad {
  double loss = 0.0;
  ParamSet grads;
};

template <class F>
concept LossBuilder = requires(F f, const ParamSet& p) {
  { f(p) } -> std::convertible_to<LossAndGrad>;
};

// eps_hat = rho * g / ||g||_2 with the norm taken over all parameters jointly.
// Returns nullopt when the gradient is identically zero.
inline std::optional<ParamSet> sam_perturbation(const ParamSet& grads, double rho) {
  const double norm = global_norm(grads);
  if (norm == 0.0) return std::nullopt;
  ParamSet eps = grads;
  const double factor = rho / norm;
  for (std::size_t p = 0; p < eps.size(); ++p) {
    for (double& v : eps[p].values()) v *= factor;
  }
  return eps;
}

inline ParamSet offset(const ParamSet& params, const ParamSet& delta) {
  require_same_layout(params, delta, "offset");
  ParamSet out = params;
  for (std::size_t p = 0; p < out.size(); ++p) {
    auto w = out[p].values();
    const auto d = delta[p].values();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += d[i];
  }
  return out;
}

struct SamMetrics {
  double loss = 0.0;                       // at w
  std::optional<double> perturbed_loss;    // at w + eps_hat
  std::optional<double> sharpness;         // perturbed_loss - loss
  bool degenerate = false;                 // zero gradient, plain step taken
};

// One training iteration. With SAM disabled or rho == 0 this is exactly one
// loss evaluation followed by the base step.
template <LossBuilder F>
SamMetrics sam_step(F&& loss_builder, ParamSet& params, OptimizerState& state,
                    const OptimizerConfig& cfg) {
  LossAndGrad at_w = loss_builder(static_cast<const ParamSet&>(params));
  SamMetrics metrics;
  metrics.loss = at_w.loss;
  if (!cfg.sam_enabled || cfg.rho == 0.0) {
    base_step(params, at_w.grads, state, cfg);
    return metrics;
  }
  const std::optional<ParamSet> eps = sam_perturbation(at_w.grads, cfg.rho);
  if (!eps) {
    metrics.degenerate = true;
    base_step(params, at_w.grads, state, cfg);
    return metrics;
  }
  const ParamSet perturbed = offset(params, *eps);
  LossAndGrad at_eps = loss_builder(perturbed);
  metrics.perturbed_loss = at_eps.loss;
  metrics.sharpness = at_eps.loss - at_w.loss;
  base_step(params, at_eps.grads, state, cfg);
  return metrics;
}

struct SharpnessEstimate {
  double value = 0.0;
  bool degenerate = false;
};

// L(w + rho * g/||g||) - L(w).
template <LossBuilder F>
SharpnessEstimate sharpness_probe(F&& loss_builder, const ParamSet& params, double rho) {
  const LossAndGrad at_w = loss_builder(params);
  const std::optional<ParamSet> eps = sam_perturbation(at_w.grads, rho);
  if (!eps) return {0.0, true};
  return {loss_builder(offset(params, *eps)).loss - at_w.loss, false};
}

}  // namespace samast::optim
