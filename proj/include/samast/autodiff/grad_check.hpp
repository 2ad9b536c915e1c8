#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "samast/autodiff/graph.hpp"
#include "samast/core/error.hpp"

namespace samast::ad {

// Builds a scalar loss from parameter leaves already inserted in the graph.
using LossGraphBuilder = std::function<Var(Graph&, const std::vector<Var>&)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
  bool passed = true;
};

// |a - n| / max(|a|, |n|, floor). The floor keeps coordinates whose true
// derivative is ~0 from dominating through pure round-off.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

inline double evaluate_loss(const LossGraphBuilder& build, const std::vector<Tensor>& params) {
  Graph g;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (const Tensor& p : params) leaves.push_back(g.parameter(p));
  return build(g, leaves).value().item();
}

inline std::vector<Tensor> analytic_gradients(const LossGraphBuilder& build,
                                              const std::vector<Tensor>& params) {
  Graph g;
  std::vector<Var> leaves;
  for (const Tensor& p : params) leaves.push_back(g.parameter(p));
  g.backward(build(g, leaves));
  std::vector<Tensor> grads;
  for (const Var& v : leaves) grads.push_back(g.grad(v));
  return grads;
}

// Central-difference check of every coordinate of every parameter.
inline GradCheckReport grad_check(const LossGraphBuilder& build, std::vector<Tensor> params,
                                  double step = 1e-5, double tolerance = 1e-6,
                                  double floor = 1e-6) {
  if (!(step > 0.0)) throw ContractError("grad_check: step must be positive");
  const std::vector<Tensor> analytic = analytic_gradients(build, params);
  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double saved = params[p][i];
      params[p][i] = saved + step;
      const double up = evaluate_loss(build, params);
      params[p][i] = saved - step;
      const double down = evaluate_loss(build, params);
      params[p][i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = relative_error(analytic[p][i], numeric, floor);
      ++report.coordinates;
      if (err > report.max_relative_error || report.coordinates == 1) {
        report.max_relative_error = err;
        report.worst_param = p;
        report.worst_index = i;
        report.worst_analytic = analytic[p][i];
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_relative_error < tolerance;
  return report;
}

}  // namespace samast::ad
