#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "samast/core/error.hpp"
#include "samast/core/key_values.hpp"
#include "samast/core/rng.hpp"
#include "samast/data/cycles.hpp"
#include "samast/data/labels.hpp"

namespace samast::data {

// One synthetic cycle: regenerate with synth_generate(label, duration, Rng(seed)).
struct SynthEntry {
  std::string id;
  Label label = Label::normal;
  std::uint64_t seed = 0;
  double duration = 0.0;
  Split split = Split::unassigned;

  friend bool operator==(const SynthEntry&, const SynthEntry&) = default;
};

using ClassCounts = std::array<std::size_t, num_labels>;

// Train entries first, then test, each grouped by class. Durations are drawn
// uniformly from [min_duration, max_duration] and rounded to milliseconds.
inline std::vector<SynthEntry> plan_synthetic(const ClassCounts& train, const ClassCounts& test,
                                              std::uint64_t seed, double min_duration,
                                              double max_duration) {
  if (!(min_duration > 0.0 && min_duration <= max_duration))
    throw ConfigError("synthetic durations need 0 < min <= max");
  std::vector<SynthEntry> out;
  Rng rng(mix_seed(seed, 0));
  std::uint64_t k = 0;
  for (Split split : {Split::train, Split::test}) {
    const ClassCounts& counts = split == Split::train ? train : test;
    for (Label l : all_labels) {
      for (std::size_t i = 0; i < counts[static_cast<std::size_t>(l)]; ++i, ++k) {
        SynthEntry e;
        char id[32];
        std::snprintf(id, sizeof id, "syn%05llu", static_cast<unsigned long long>(k));
        e.id = id;
        e.label = l;
        e.seed = mix_seed(seed, k + 1);
        e.duration = std::round(rng.uniform(min_duration, max_duration) * 1000.0) / 1000.0;
        e.split = split;
        out.push_back(std::move(e));
      }
    }
  }
  return out;
}

inline std::string manifest_csv(const std::vector<SynthEntry>& entries) {
  std::string s = "id,class,seed,duration\n";
  for (const auto& e : entries) {
    s += e.id + "," + std::string(label_name(e.label)) + "," + std::to_string(e.seed) + "," +
         kv::format_double(e.duration) + "\n";
  }
  return s;
}

// Split list in the official-split format: "<id>\t<train|test>".
inline std::string split_list(const std::vector<SynthEntry>& entries) {
  std::string s;
  for (const auto& e : entries) s += e.id + "\t" + std::string(split_name(e.split)) + "\n";
  return s;
}

inline std::vector<SynthEntry> parse_manifest(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::vector<SynthEntry> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "id,class,seed,duration") throw ParseError("unexpected manifest header", 1);
      continue;
    }
    if (kv::trim(line).empty()) continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    for (std::string tok; std::getline(fields, tok, ',');) f.push_back(tok);
    if (f.size() != 4) throw ParseError("expected 4 comma-separated fields", line_no);
    SynthEntry e;
    e.id = f[0];
    try {
      e.label = parse_label(f[1]);
      e.seed = kv::to_u64("seed", f[2]);
      e.duration = kv::to_double("duration", f[3]);
    } catch (const Error& err) {
      throw ParseError(err.what(), line_no);
    }
    if (!(e.duration > 0.0)) throw ParseError("duration must be positive", line_no);
    out.push_back(std::move(e));
  }
  if (line_no == 0) throw ParseError("empty manifest", 1);
  return out;
}

}  // namespace samast::data
