#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "samast/core/binary_io.hpp"
#include "samast/core/key_values.hpp"
#include "samast/eval/metrics.hpp"
#include "samast/eval/report.hpp"
#include "samast/model/ast.hpp"
#include "samast/pipeline/cache.hpp"
#include "samast/pipeline/train.hpp"

namespace samast::pipeline {

struct Predictions {
  std::vector<std::string> ids;
  std::vector<int> truth;
  std::vector<int> predicted;
  std::vector<std::vector<double>> logits;
};

inline Predictions predict(const model::ModelConfig& cfg, const ParamSet& params,
                           const LoadedSplit& set) {
  Predictions p;
  for (std::size_t i = 0; i < set.specs.size(); ++i) {
    std::vector<double> z = model::forward(cfg, params, set.specs[i]);
    p.ids.push_back(set.ids[i]);
    p.truth.push_back(set.labels[i]);
    p.predicted.push_back(argmax(z));
    p.logits.push_back(std::move(z));
  }
  return p;
}

// id,true,predicted,logit_0..logit_{K-1}
inline std::string predictions_csv(const Predictions& p) {
  std::string s = "id,true,predicted";
  const std::size_t k = p.logits.empty() ? 0 : p.logits.front().size();
  for (std::size_t j = 0; j < k; ++j) s += ",logit_" + std::to_string(j);
  s += "\n";
  for (std::size_t i = 0; i < p.ids.size(); ++i) {
    s += p.ids[i] + "," + std::to_string(p.truth[i]) + "," + std::to_string(p.predicted[i]);
    for (double z : p.logits[i]) s += "," + kv::format_double(z);
    s += "\n";
  }
  return s;
}

// Writes predictions.csv, report.csv and report.txt into `dir`.
inline eval::EvalReport write_evaluation(const Predictions& p, eval::Protocol protocol,
                                         const std::filesystem::path& dir) {
  const eval::EvalReport report = eval::evaluate(p.truth, p.predicted, protocol);
  io::write_text(dir / "predictions.csv", predictions_csv(p));
  eval::emit_report(report, dir / "report.csv");
  return report;
}

}  // namespace samast::pipeline
