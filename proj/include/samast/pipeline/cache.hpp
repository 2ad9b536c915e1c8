#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "samast/core/binary_io.hpp"
#include "samast/core/error.hpp"
#include "samast/core/key_values.hpp"
#include "samast/data/cycles.hpp"
#include "samast/data/manifest.hpp"
#include "samast/dsp/resample.hpp"
#include "samast/dsp/spectrogram.hpp"
#include "samast/dsp/wav.hpp"
#include "samast/pipeline/run_config.hpp"

namespace samast::pipeline {

using Log = std::function<void(const std::string&)>;

struct CacheEntry {
  std::string id;
  data::Label label = data::Label::normal;
  data::Split split = data::Split::unassigned;

  friend bool operator==(const CacheEntry&, const CacheEntry&) = default;
};

inline std::filesystem::path cache_dir(const RunConfig& c) { return c.out / "cache"; }

// Keys that determine cached spectrogram bytes.
inline kv::Record frontend_record(const RunConfig& c) {
  kv::Record all = to_record(c), out;
  for (auto& [k, v] : all)
    if (k.starts_with("mel.") || k.starts_with("audio.")) out.emplace_back(k, v);
  return out;
}

inline std::string index_csv(const std::vector<CacheEntry>& entries) {
  std::string s = "id,label,split\n";
  for (const auto& e : entries)
    s += e.id + "," + std::string(data::label_name(e.label)) + "," +
         std::string(data::split_name(e.split)) + "\n";
  return s;
}

inline std::vector<CacheEntry> parse_index(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::vector<CacheEntry> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != "id,label,split") throw ParseError("unexpected cache index header", 1);
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    for (std::string tok; std::getline(fields, tok, ',');) f.push_back(tok);
    if (f.size() != 3) throw ParseError("expected id,label,split", line_no);
    try {
      out.push_back({f[0], data::parse_label(f[1]), data::parse_split(f[2])});
    } catch (const DataError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

// Cycles of the configured data source with split tags, in a fixed order.
inline std::vector<data::CycleRecord> load_cycles(const RunConfig& c, const Log& log,
                                                  std::size_t& skipped) {
  std::vector<data::CycleRecord> records;
  if (c.source == DataSource::synthetic) {
    const auto entries = data::parse_manifest(io::read_text(c.data_path / "manifest.csv"));
    for (const auto& e : entries) {
      data::CycleRecord r;
      try {
        r.clip = dsp::read_wav(c.data_path / "wav" / (e.id + ".wav"));
      } catch (const DataError& err) {
        ++skipped;
        if (log) log("skipping " + e.id + ": " + err.what());
        continue;
      }
      r.clip.source_id = e.id;
      r.label = e.label;
      r.subject_id = e.id;
      r.recording_id = e.id;
      records.push_back(std::move(r));
    }
  } else {
    auto warn = [&](const std::string& m) {
      if (log) log(m);
    };
    auto skip = [&](const std::string& m) {
      if (log) log("skipping " + m);
    };
    data::IngestResult ing = data::ingest_directory(c.data_path, c.min_cycle_seconds, warn, skip);
    skipped += ing.skipped_recordings;
    records = std::move(ing.records);
  }
  if (c.split == SplitMode::official) {
    data::split_official(records, data::parse_official_split(io::read_text(c.resolved_split_file())));
  } else {
    data::split_by_subject(records, c.train_ratio, c.seed);
  }
  return records;
}

struct PreprocessSummary {
  std::size_t written = 0;
  std::size_t skipped = 0;
};

// resample -> cyclic pad -> log-mel -> <out>/cache/<id>.spg, plus index.csv
// and frontend.cfg. Rerunning rewrites identical bytes.
inline PreprocessSummary preprocess(const RunConfig& c, const Log& log = {}) {
  PreprocessSummary summary;
  const std::vector<data::CycleRecord> records = load_cycles(c, log, summary.skipped);
  const auto dir = cache_dir(c);
  const std::size_t frames = expected_frames(c);
  std::vector<CacheEntry> entries;
  for (const auto& r : records) {
    try {
      const dsp::AudioClip clip =
          dsp::cyclic_pad(dsp::resample(r.clip, c.mel.sample_rate), c.pad_seconds);
      const dsp::Spectrogram s = dsp::log_mel(clip, c.mel);
      if (s.bins != c.mel.mel_bins || s.frames != frames)
        throw DataError("unexpected spectrogram shape for " + r.clip.source_id);
      dsp::write_spectrogram(dir / (r.clip.source_id + ".spg"), s);
      entries.push_back({r.clip.source_id, r.label, r.split});
      ++summary.written;
    } catch (const DataError& e) {
      ++summary.skipped;
      if (log) log("skipping " + r.clip.source_id + ": " + e.what());
    }
  }
  io::write_text(dir / "index.csv", index_csv(entries));
  io::write_text(dir / "frontend.cfg", kv::to_text(frontend_record(c)));
  return summary;
}

struct LoadedSplit {
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<dsp::Spectrogram> specs;
};

// Reads the cached spectrograms of one split after checking that the cache
// was built with the same front end and matches the model input size.
inline LoadedSplit load_split(const RunConfig& c, data::Split split) {
  const auto dir = cache_dir(c);
  if (!std::filesystem::exists(dir / "index.csv"))
    throw ConfigError("no spectrogram cache at " + dir.string() + "; run preprocess first");
  const auto stored = kv::parse_text(io::read_text(dir / "frontend.cfg"));
  for (const auto& [k, v] : frontend_record(c)) {
    auto it = stored.find(k);
    if (it == stored.end() || it->second != v) {
      throw ConfigError("cache at " + dir.string() + " was built with " + k + " = " +
                        (it == stored.end() ? std::string("<unset>") : it->second) +
                        ", config has " + v);
    }
  }
  LoadedSplit out;
  for (const CacheEntry& e : parse_index(io::read_text(dir / "index.csv"))) {
    if (e.split != split) continue;
    dsp::Spectrogram s = dsp::read_spectrogram(dir / (e.id + ".spg"));
    if (s.bins != c.model.bins || s.frames != c.model.frames) {
      throw ConfigError("cached spectrogram " + e.id + " is " + std::to_string(s.bins) + "x" +
                        std::to_string(s.frames) + ", model expects " +
                        std::to_string(c.model.bins) + "x" + std::to_string(c.model.frames));
    }
    out.ids.push_back(e.id);
    out.labels.push_back(static_cast<int>(e.label));
    out.specs.push_back(std::move(s));
  }
  return out;
}

}  // namespace samast::pipeline
