#pragma once

#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "samast/core/binary_io.hpp"
#include "samast/core/error.hpp"
#include "samast/core/key_values.hpp"
#include "samast/eval/metrics.hpp"

namespace samast::eval {

inline std::string fixed4(std::optional<double> v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

// "Se,Sp,Score" to four decimals.
inline std::string metrics_line(const EvalReport& r) {
  return fixed4(r.sensitivity) + "," + fixed4(r.specificity) + "," + fixed4(r.score);
}

// metric,value block, blank line, then true,predicted,count for all 16 cells.
inline std::string report_csv(const EvalReport& r) {
  std::string s = "metric,value\n";
  s += "protocol," + std::string(protocol_name(r.protocol)) + "\n";
  s += "n_total," + std::to_string(r.n_total) + "\n";
  s += "sensitivity," + fixed4(r.sensitivity) + "\n";
  s += "specificity," + fixed4(r.specificity) + "\n";
  s += "score," + fixed4(r.score) + "\n";
  s += "accuracy," + fixed4(r.accuracy) + "\n";
  for (Label l : data::all_labels) {
    s += "accuracy_" + std::string(data::label_name(l)) + "," +
         fixed4(r.class_accuracy[static_cast<std::size_t>(l)]) + "\n";
  }
  s += "\ntrue,predicted,count\n";
  for (Label t : data::all_labels)
    for (Label p : data::all_labels)
      s += std::string(data::label_name(t)) + "," + std::string(data::label_name(p)) + "," +
           std::to_string(r.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]) +
           "\n";
  return s;
}

inline std::string report_summary(const EvalReport& r) {
  std::ostringstream o;
  o << "cycles evaluated: " << r.n_total << " (" << protocol_name(r.protocol) << " protocol)\n";
  o << "sensitivity,specificity,score\n" << metrics_line(r) << "\n";
  o << "4-class accuracy: " << fixed4(r.accuracy) << "\n\n";
  o << "confusion (rows true, columns predicted)\n";
  o << "         ";
  for (Label p : data::all_labels) {
    char cell[16];
    std::snprintf(cell, sizeof cell, "%9s", std::string(data::label_name(p)).c_str());
    o << cell;
  }
  o << "\n";
  for (Label t : data::all_labels) {
    char head[16];
    std::snprintf(head, sizeof head, "%-9s", std::string(data::label_name(t)).c_str());
    o << head;
    for (Label p : data::all_labels) {
      char cell[24];
      std::snprintf(cell, sizeof cell, "%9llu",
                    static_cast<unsigned long long>(
                        r.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]));
      o << cell;
    }
    o << "\n";
  }
  return o.str();
}

// Writes the CSV to `path` and the summary next to it with a .txt extension.
inline void emit_report(const EvalReport& r, const std::filesystem::path& path) {
  io::write_text(path, report_csv(r));
  auto summary = path;
  summary.replace_extension(".txt");
  io::write_text(summary, report_summary(r));
}

// Reads the confusion counts and protocol back; metrics are recomputed.
inline EvalReport parse_report(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  Confusion c{};
  Protocol protocol = Protocol::relaxed;
  int cells = 0;
  bool in_matrix = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line == "metric,value") continue;
    if (line == "true,predicted,count") {
      in_matrix = true;
      continue;
    }
    std::vector<std::string> f;
    std::istringstream fields(line);
    for (std::string tok; std::getline(fields, tok, ',');) f.push_back(tok);
    if (!in_matrix) {
      if (f.size() != 2) throw ParseError("expected metric,value", line_no);
      if (f[0] == "protocol") protocol = parse_protocol(f[1]);
      continue;
    }
    if (f.size() != 3) throw ParseError("expected true,predicted,count", line_no);
    try {
      const auto t = static_cast<std::size_t>(data::parse_label(f[0]));
      const auto p = static_cast<std::size_t>(data::parse_label(f[1]));
      c[t][p] = kv::to_u64("count", f[2]);
    } catch (const Error& e) {
      throw ParseError(e.what(), line_no);
    }
    ++cells;
  }
  if (cells != num_labels * num_labels)
    throw ParseError("report has " + std::to_string(cells) + " confusion cells, expected 16", line_no);
  return make_report(c, protocol);
}

}  // namespace samast::eval
