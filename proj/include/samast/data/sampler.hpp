#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "samast/core/error.hpp"
#include "samast/core/rng.hpp"
#include "samast/data/labels.hpp"

namespace samast::data {

struct SamplerWeights {
  std::vector<double> p;  // per record, sums to 1
};

// Record of class c gets (1 / count(c)) / K, so every class is drawn with
// probability 1/K.
inline SamplerWeights make_weights(std::span<const Label> labels) {
  std::array<std::size_t, num_labels> count{};
  for (Label l : labels) ++count[static_cast<std::size_t>(l)];
  for (Label l : all_labels) {
    if (count[static_cast<std::size_t>(l)] == 0)
      throw ConfigError("weighted sampling: class " + std::string(label_name(l)) +
                        " has no training records");
  }
  SamplerWeights w;
  w.p.reserve(labels.size());
  for (Label l : labels)
    w.p.push_back(1.0 / (static_cast<double>(count[static_cast<std::size_t>(l)]) * num_labels));
  return w;
}

inline SamplerWeights uniform_weights(std::size_t n) {
  if (n == 0) throw ConfigError("cannot sample from an empty record set");
  return {std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

// Independent draws with replacement, P(i) proportional to p[i]. Records of
// weight zero are never drawn.
inline std::vector<std::size_t> weighted_sample(const SamplerWeights& w, std::size_t count,
                                                Rng& rng) {
  if (w.p.empty()) throw ConfigError("cannot sample from an empty record set");
  std::vector<double> cumulative(w.p.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.p.size(); ++i) {
    if (!(w.p[i] >= 0.0) || !std::isfinite(w.p[i]))
      throw ContractError("sampler weight " + std::to_string(i) + " is negative or not finite");
    total += w.p[i];
    cumulative[i] = total;
  }
  if (!(total > 0.0)) throw ContractError("sampler weights sum to zero");
  std::vector<std::size_t> out(count);
  for (std::size_t& idx : out) {
    const double x = rng.uniform() * total;
    idx = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), x) -
                                   cumulative.begin());
    idx = std::min(idx, w.p.size() - 1);
    while (w.p[idx] == 0.0) --idx;  // only reachable through rounding at the top end
  }
  return out;
}

}  // namespace samast::data
