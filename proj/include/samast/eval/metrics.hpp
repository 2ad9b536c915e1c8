#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "samast/core/error.hpp"
#include "samast/data/labels.hpp"

namespace samast::eval {

using data::Label;
using data::num_labels;

// counts[true][predicted]
using Confusion = std::array<std::array<std::uint64_t, num_labels>, num_labels>;

inline Confusion confusion_matrix(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) {
    throw ContractError("confusion_matrix: " + std::to_string(truth.size()) + " true labels vs " +
                        std::to_string(predicted.size()) + " predictions");
  }
  Confusion c{};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (int v : {truth[i], predicted[i]}) {
      if (v < 0 || v >= num_labels)
        throw LabelError("confusion_matrix: label " + std::to_string(v) + " at index " +
                             std::to_string(i) + " is outside 0..3",
                         static_cast<long long>(i));
    }
    ++c[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }
  return c;
}

inline std::uint64_t total(const Confusion& c) {
  std::uint64_t n = 0;
  for (const auto& row : c)
    for (std::uint64_t v : row) n += v;
  return n;
}

// Relaxed: an abnormal cycle predicted as any abnormal class counts as
// detected. Strict: only the exact abnormal class counts.
enum class Protocol { relaxed, strict };

inline std::string_view protocol_name(Protocol p) { return p == Protocol::strict ? "strict" : "relaxed"; }

inline Protocol parse_protocol(std::string_view s) {
  if (s == "relaxed") return Protocol::relaxed;
  if (s == "strict") return Protocol::strict;
  throw ConfigError("unknown evaluation protocol '" + std::string(s) + "'");
}

// Undefined (nullopt) when there are no abnormal true samples.
inline std::optional<double> sensitivity(const Confusion& c, Protocol protocol = Protocol::relaxed) {
  std::uint64_t hit = 0, all = 0;
  for (std::size_t t = 1; t < num_labels; ++t) {
    for (std::size_t p = 0; p < num_labels; ++p) {
      all += c[t][p];
      if (p != 0 && (protocol == Protocol::relaxed || p == t)) hit += c[t][p];
    }
  }
  if (all == 0) return std::nullopt;
  return static_cast<double>(hit) / static_cast<double>(all);
}

inline std::optional<double> specificity(const Confusion& c) {
  std::uint64_t all = 0;
  for (std::uint64_t v : c[0]) all += v;
  if (all == 0) return std::nullopt;
  return static_cast<double>(c[0][0]) / static_cast<double>(all);
}

inline std::optional<double> score(std::optional<double> se, std::optional<double> sp) {
  if (!se || !sp) return std::nullopt;
  return (*se + *sp) / 2.0;
}

struct EvalReport {
  Confusion confusion{};
  std::uint64_t n_total = 0;
  Protocol protocol = Protocol::relaxed;
  std::optional<double> sensitivity, specificity, score;
  std::optional<double> accuracy;  // 4-class
  std::array<std::optional<double>, num_labels> class_accuracy{};

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

inline EvalReport make_report(const Confusion& c, Protocol protocol = Protocol::relaxed) {
  EvalReport r;
  r.confusion = c;
  r.n_total = total(c);
  r.protocol = protocol;
  r.sensitivity = sensitivity(c, protocol);
  r.specificity = specificity(c);
  r.score = score(r.sensitivity, r.specificity);
  std::uint64_t diagonal = 0;
  for (std::size_t t = 0; t < num_labels; ++t) diagonal += c[t][t];
  if (r.n_total > 0) r.accuracy = static_cast<double>(diagonal) / static_cast<double>(r.n_total);
  for (std::size_t t = 0; t < num_labels; ++t) {
    std::uint64_t row = 0;
    for (std::uint64_t v : c[t]) row += v;
    if (row > 0) r.class_accuracy[t] = static_cast<double>(c[t][t]) / static_cast<double>(row);
  }
  return r;
}

inline EvalReport evaluate(std::span<const int> truth, std::span<const int> predicted,
                           Protocol protocol = Protocol::relaxed) {
  return make_report(confusion_matrix(truth, predicted), protocol);
}

}  // namespace samast::eval
