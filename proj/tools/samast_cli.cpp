// samast: synth, preprocess, train, evaluate, ablation, embed, print-config.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "samast/core/allocator.hpp"
#include "samast/core/binary_io.hpp"
#include "samast/core/error.hpp"
#include "samast/core/key_values.hpp"
#include "samast/pipeline/commands.hpp"
#include "samast/pipeline/run_config.hpp"

namespace {

using namespace samast;

struct Options {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string checkpoint;
};

void add_common(CLI::App* cmd, Options& o, bool wants_checkpoint) {
  cmd->add_option("--config", o.config_path, "key = value config file");
  cmd->add_option("--set", o.sets, "override one config key (key=value), repeatable");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out, "output directory");
  if (wants_checkpoint)
    cmd->add_option("--checkpoint", o.checkpoint, "model checkpoint (default <out>/model.astc)");
}

pipeline::RunConfig resolve(const Options& o) {
  std::map<std::string, std::string> values;
  if (!o.config_path.empty()) {
    if (!std::filesystem::exists(o.config_path))
      throw ConfigError("config file not found: " + o.config_path);
    try {
      values = kv::parse_text(io::read_text(o.config_path));
    } catch (const ParseError& e) {
      throw ConfigError(o.config_path + ": " + e.what());
    }
  }
  for (const auto& s : o.sets) {
    auto [k, v] = pipeline::parse_assignment(s);
    values[k] = v;
  }
  pipeline::RunConfig c = pipeline::apply_overrides(pipeline::RunConfig{}, values);
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.out = o.out;
  pipeline::validate(c);
  return c;
}

void log_line(const std::string& m) { std::cerr << m << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  samast::tune_allocator();
  CLI::App app{"Respiratory sound classification with a small spectrogram transformer"};
  app.require_subcommand(1);
  Options o;
  auto* synth = app.add_subcommand("synth", "generate the seeded synthetic dataset into --out");
  auto* prep = app.add_subcommand("preprocess", "build the spectrogram cache under <out>/cache");
  auto* train = app.add_subcommand("train", "train from the cache; writes log and checkpoints");
  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on the test split");
  auto* ablation = app.add_subcommand("ablation", "baseline / weighted sampling / SAM comparison");
  auto* embed = app.add_subcommand("embed", "CLS embeddings and t-SNE coordinates");
  auto* print = app.add_subcommand("print-config", "print the resolved configuration");
  for (auto* cmd : {synth, prep, train, ablation, print}) add_common(cmd, o, false);
  for (auto* cmd : {evaluate, embed}) add_common(cmd, o, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const pipeline::RunConfig c = resolve(o);
    const std::filesystem::path ck =
        o.checkpoint.empty() ? pipeline::default_checkpoint(c) : std::filesystem::path(o.checkpoint);
    if (*print) {
      std::cout << pipeline::print_config(c);
    } else if (*synth) {
      pipeline::cmd_synth(c, log_line);
    } else if (*prep) {
      pipeline::cmd_preprocess(c, log_line);
    } else if (*train) {
      pipeline::cmd_train(c, log_line);
    } else if (*evaluate) {
      const auto r = pipeline::cmd_evaluate(c, ck, log_line);
      std::cout << eval::report_summary(r);
    } else if (*ablation) {
      std::cout << pipeline::ablation_csv(pipeline::cmd_ablation(c, log_line));
    } else if (*embed) {
      pipeline::cmd_embed(c, ck, log_line);
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
