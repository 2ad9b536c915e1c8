#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "samast/core/binary_io.hpp"
#include "samast/core/error.hpp"
#include "samast/core/rng.hpp"
#include "samast/data/annotation.hpp"
#include "samast/data/labels.hpp"
#include "samast/dsp/audio_clip.hpp"
#include "samast/dsp/wav.hpp"

namespace samast::data {

enum class Split { unassigned, train, test };

inline std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::test: return "test";
    default: return "unassigned";
  }
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw DataError("unknown split '" + std::string(s) + "'");
}

struct CycleRecord {
  dsp::AudioClip clip;
  Label label = Label::normal;
  std::string subject_id;
  std::string recording_id;
  Split split = Split::unassigned;
};

// Cuts [round(start * rate), round(end * rate)) for every row. Rows may end
// up to one sample past the clip; the slice is clamped to the clip.
inline std::vector<CycleRecord> slice_cycles(const dsp::AudioClip& clip,
                                             const std::vector<AnnotationRow>& rows,
                                             const std::string& subject_id = "",
                                             const std::string& recording_id = "") {
  const double rate = clip.sample_rate;
  const double n = static_cast<double>(clip.samples.size());
  std::vector<CycleRecord> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const AnnotationRow& r = rows[i];
    const double a = std::round(r.start * rate), b = std::round(r.end * rate);
    if (r.start < 0.0 || r.end * rate > n + 1.0 || !(a < b) || a >= n) {
      throw RangeError("annotation row " + std::to_string(i + 1) + " (" + std::to_string(r.start) +
                       ", " + std::to_string(r.end) + ") lies outside the " +
                       std::to_string(n / rate) + " s clip");
    }
    CycleRecord c;
    const auto begin = static_cast<std::size_t>(a);
    const auto end = std::min(static_cast<std::size_t>(b), clip.samples.size());
    c.clip.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                          clip.samples.begin() + static_cast<std::ptrdiff_t>(end));
    c.clip.sample_rate = clip.sample_rate;
    c.clip.source_id = recording_id + "_c" + std::to_string(i);
    c.label = label_of(r.crackle, r.wheeze);
    c.subject_id = subject_id;
    c.recording_id = recording_id;
    out.push_back(std::move(c));
  }
  return out;
}

// Subject id is the first underscore-separated field of the recording name.
inline std::string subject_of(const std::string& recording) {
  return recording.substr(0, recording.find('_'));
}

struct IngestResult {
  std::vector<CycleRecord> records;
  std::size_t dropped_short = 0;  // cycles shorter than one analysis window
  std::size_t skipped_recordings = 0;
};

// Reads every <name>.wav with its <name>.txt annotation from `dir`, in name
// order. Cycles shorter than `min_seconds` are dropped and counted.
// With `skip` set, a recording that fails to decode or parse is reported
// through it and skipped instead of aborting the ingest.
inline IngestResult ingest_directory(const std::filesystem::path& dir, double min_seconds,
                                     const std::function<void(const std::string&)>& warn = {},
                                     const std::function<void(const std::string&)>& skip = {}) {
  if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> wavs;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".wav") wavs.push_back(e.path());
  std::sort(wavs.begin(), wavs.end());
  IngestResult out;
  for (const auto& wav : wavs) {
    const std::string name = wav.stem().string();
    auto txt = wav;
    txt.replace_extension(".txt");
    std::vector<CycleRecord> cycles;
    try {
      if (!std::filesystem::exists(txt)) throw DataError("missing annotation file " + txt.string());
      std::vector<AnnotationRow> rows;
      try {
        rows = parse_annotation(io::read_text(txt));
      } catch (const ParseError& e) {
        throw DataError(txt.string() + ": " + e.what());
      }
      cycles = slice_cycles(dsp::read_wav(wav), rows, subject_of(name), name);
    } catch (const DataError& e) {
      if (!skip) throw;
      skip(name + ": " + e.what());
      ++out.skipped_recordings;
      continue;
    }
    for (CycleRecord& c : cycles) {
      if (static_cast<double>(c.clip.samples.size()) < min_seconds * c.clip.sample_rate) {
        ++out.dropped_short;
        if (warn) warn("dropping " + c.clip.source_id + ": shorter than one analysis window");
        continue;
      }
      out.records.push_back(std::move(c));
    }
  }
  return out;
}

// Lines "<recording>\t<train|test>"; blank lines ignored.
inline std::map<std::string, Split> parse_official_split(std::string_view text) {
  std::map<std::string, Split> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string name, tag, extra;
    if (!(fields >> name)) continue;
    if (!(fields >> tag) || (fields >> extra))
      throw ParseError("expected '<recording> <train|test>'", line_no);
    try {
      out[name] = parse_split(tag);
    } catch (const DataError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

inline void split_official(std::vector<CycleRecord>& records,
                           const std::map<std::string, Split>& list) {
  for (CycleRecord& r : records) {
    auto it = list.find(r.recording_id);
    if (it == list.end())
      throw DataError("recording " + r.recording_id + " is missing from the official split list");
    r.split = it->second;
  }
}

// Sorted distinct subjects are shuffled with `seed`; the first
// round(train_ratio * S) go to train, the rest to test.
inline void split_by_subject(std::vector<CycleRecord>& records, double train_ratio,
                             std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0))
    throw ConfigError("train ratio must lie in (0, 1)");
  const std::set<std::string> distinct = [&] {
    std::set<std::string> s;
    for (const auto& r : records) s.insert(r.subject_id);
    return s;
  }();
  std::vector<std::string> subjects(distinct.begin(), distinct.end());
  Rng rng(seed);
  for (std::size_t i = subjects.size(); i > 1; --i) std::swap(subjects[i - 1], subjects[rng.below(i)]);
  const auto n_train =
      static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(subjects.size())));
  std::set<std::string> train(subjects.begin(),
                              subjects.begin() + static_cast<std::ptrdiff_t>(n_train));
  for (CycleRecord& r : records) r.split = train.contains(r.subject_id) ? Split::train : Split::test;
}

}  // namespace samast::data
