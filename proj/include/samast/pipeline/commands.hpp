#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "samast/core/binary_io.hpp"
#include "samast/core/error.hpp"
#include "samast/data/manifest.hpp"
#include "samast/data/synth.hpp"
#include "samast/dsp/wav.hpp"
#include "samast/embed/tsne.hpp"
#include "samast/eval/report.hpp"
#include "samast/model/ast.hpp"
#include "samast/model/checkpoint.hpp"
#include "samast/pipeline/cache.hpp"
#include "samast/pipeline/evaluate.hpp"
#include "samast/pipeline/run_config.hpp"
#include "samast/pipeline/train.hpp"

namespace samast::pipeline {

inline void require_exists(const std::filesystem::path& p, const char* what) {
  if (!std::filesystem::exists(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
}

inline std::string print_config(const RunConfig& c) { return kv::to_text(to_record(c)); }

// Writes <out>/wav/<id>.wav, <out>/manifest.csv and <out>/split.txt.
inline std::vector<data::SynthEntry> cmd_synth(const RunConfig& c, const Log& log = {}) {
  validate(c);
  const auto plan = data::plan_synthetic(c.synth_train, c.synth_test, c.seed,
                                         c.synth_min_duration, c.synth_max_duration);
  for (const auto& e : plan) {
    Rng rng(e.seed);
    dsp::AudioClip clip = data::synth_generate(e.label, e.duration, rng);
    clip.source_id = e.id;
    dsp::write_wav(c.out / "wav" / (e.id + ".wav"), clip);
  }
  io::write_text(c.out / "manifest.csv", data::manifest_csv(plan));
  io::write_text(c.out / "split.txt", data::split_list(plan));
  if (log) log("wrote " + std::to_string(plan.size()) + " synthetic cycles to " + c.out.string());
  return plan;
}

inline PreprocessSummary cmd_preprocess(const RunConfig& c, const Log& log = {}) {
  validate(c);
  require_exists(c.data_path, "data directory");
  if (c.source == DataSource::synthetic) require_exists(c.data_path / "manifest.csv", "manifest");
  if (c.split == SplitMode::official) require_exists(c.resolved_split_file(), "split file");
  const PreprocessSummary s = preprocess(c, log);
  if (log)
    log("cached " + std::to_string(s.written) + " spectrograms, skipped " +
        std::to_string(s.skipped));
  return s;
}

inline TrainResult cmd_train(const RunConfig& c, const Log& log = {}) {
  validate(c);
  const LoadedSplit set = load_split(c, data::Split::train);
  TrainResult r = train(c, set, c.out, log);
  if (log) log("final train accuracy " + eval::fixed4(r.train_accuracy));
  return r;
}

inline model::ModelCheckpoint load_for(const RunConfig& c, const std::filesystem::path& checkpoint) {
  require_exists(checkpoint, "checkpoint");
  model::ModelCheckpoint ck = model::load_checkpoint(checkpoint);
  if (!model::same_architecture(ck.config, c.model)) {
    throw ConfigMismatchError("checkpoint " + checkpoint.string() +
                              " has a different model config than the run config");
  }
  return ck;
}

inline std::filesystem::path default_checkpoint(const RunConfig& c) { return c.out / "model.astc"; }

inline eval::EvalReport cmd_evaluate(const RunConfig& c, const std::filesystem::path& checkpoint,
                                     const Log& log = {}) {
  validate(c);
  const model::ModelCheckpoint ck = load_for(c, checkpoint);
  const LoadedSplit test = load_split(c, data::Split::test);
  const eval::EvalReport r = write_evaluation(predict(ck.config, ck.params, test), c.protocol, c.out);
  if (log) log("Se,Sp,Score " + eval::metrics_line(r));
  return r;
}

struct AblationRow {
  std::string name;
  eval::EvalReport report;
  double train_accuracy = 0.0;
};

inline std::vector<RunConfig> ablation_variants(const RunConfig& c) {
  RunConfig baseline = c, weighted = c, sam = c;
  baseline.sampler = SamplerKind::uniform;
  baseline.optim.sam_enabled = false;
  weighted.sampler = SamplerKind::weighted;
  weighted.optim.sam_enabled = false;
  sam.sampler = SamplerKind::weighted;
  sam.optim.sam_enabled = true;
  return {baseline, weighted, sam};
}

inline std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string s = "config,Se,Sp,Score\n";
  for (const auto& r : rows) s += r.name + "," + eval::metrics_line(r.report) + "\n";
  return s;
}

// Baseline (uniform + AdamW), + weighted sampling, + SAM. Each run writes
// into <out>/ablation/<name>/; the comparison goes to <out>/ablation.csv.
inline std::vector<AblationRow> cmd_ablation(const RunConfig& c, const Log& log = {}) {
  validate(c);
  const LoadedSplit train_set = load_split(c, data::Split::train);
  const LoadedSplit test_set = load_split(c, data::Split::test);
  const char* names[3] = {"baseline", "weighted", "sam"};
  std::vector<AblationRow> rows;
  const auto variants = ablation_variants(c);
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const auto dir = c.out / "ablation" / names[i];
    if (log) log(std::string("ablation run ") + names[i]);
    const TrainResult t = train(variants[i], train_set, dir, log);
    const eval::EvalReport r = write_evaluation(predict(t.model, t.params, test_set), c.protocol, dir);
    rows.push_back({names[i], r, t.train_accuracy});
    if (log)
      log(std::string(names[i]) + ": train accuracy " + eval::fixed4(t.train_accuracy) +
          ", Se,Sp,Score " + eval::metrics_line(r));
  }
  io::write_text(c.out / "ablation.csv", ablation_csv(rows));
  return rows;
}

struct EmbedResult {
  LoadedSplit set;
  std::vector<std::vector<double>> embeddings;
  embed::TsneResult tsne;
};

inline std::string embeddings_csv(const LoadedSplit& set, const std::vector<std::vector<double>>& e) {
  std::string s = "id,label";
  const std::size_t d = e.empty() ? 0 : e.front().size();
  for (std::size_t j = 0; j < d; ++j) s += ",e" + std::to_string(j);
  s += "\n";
  for (std::size_t i = 0; i < e.size(); ++i) {
    s += set.ids[i] + "," + std::string(data::label_name(data::label_from_index(set.labels[i])));
    for (double v : e[i]) s += "," + kv::format_double(v);
    s += "\n";
  }
  return s;
}

// CLS embeddings of one split, then t-SNE. Writes embeddings.csv, tsne.csv
// and kl_trace.csv into <out>.
inline EmbedResult cmd_embed(const RunConfig& c, const std::filesystem::path& checkpoint,
                             const Log& log = {}) {
  validate(c);
  const model::ModelCheckpoint ck = load_for(c, checkpoint);
  EmbedResult r;
  r.set = load_split(c, c.embed_split == "train" ? data::Split::train : data::Split::test);
  embed::TsneConfig tc = c.tsne;
  tc.seed = c.seed;
  tc.validate(r.set.specs.size());
  Tensor x(Shape{r.set.specs.size(), c.model.embed_dim});
  for (std::size_t i = 0; i < r.set.specs.size(); ++i) {
    r.embeddings.push_back(model::extract_embedding(ck.config, ck.params, r.set.specs[i]));
    std::copy(r.embeddings.back().begin(), r.embeddings.back().end(),
              x.values().begin() + static_cast<std::ptrdiff_t>(i * c.model.embed_dim));
  }
  r.tsne = embed::tsne_run(x, tc);
  std::vector<std::string> names;
  for (int l : r.set.labels) names.emplace_back(data::label_name(data::label_from_index(l)));
  io::write_text(c.out / "embeddings.csv", embeddings_csv(r.set, r.embeddings));
  io::write_text(c.out / "tsne.csv", embed::tsne_csv(r.set.ids, names, r.tsne.y));
  io::write_text(c.out / "kl_trace.csv", embed::kl_trace_csv(r.tsne.kl));
  if (log)
    log("t-SNE KL " + kv::format_double(r.tsne.kl.front()) + " -> " + kv::format_double(r.tsne.kl.back()));
  return r;
}

}  // namespace samast::pipeline
