#pragma once

#include <charconv>
#include <cmath>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "samast/core/error.hpp"

namespace samast::data {

struct AnnotationRow {
  double start = 0.0;  // seconds
  double end = 0.0;
  bool crackle = false;
  bool wheeze = false;

  friend bool operator==(const AnnotationRow&, const AnnotationRow&) = default;
};

// One cycle per nonempty line: "start end crackle wheeze", whitespace separated.
inline std::vector<AnnotationRow> parse_annotation(std::string_view text) {
  std::vector<AnnotationRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> f;
    for (std::string tok; fields >> tok;) f.push_back(tok);
    if (f.empty()) continue;
    if (f.size() != 4) {
      throw ParseError("expected 4 fields, found " + std::to_string(f.size()), line_no);
    }
    auto number = [&](const std::string& s, const char* what) {
      double v = 0.0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
        throw ParseError(std::string(what) + " '" + s + "' is not a decimal number", line_no);
      return v;
    };
    auto flag = [&](const std::string& s, const char* what) {
      if (s == "0") return false;
      if (s == "1") return true;
      throw ParseError(std::string(what) + " flag '" + s + "' is not 0 or 1", line_no);
    };
    AnnotationRow r{number(f[0], "start"), number(f[1], "end"), flag(f[2], "crackle"),
                    flag(f[3], "wheeze")};
    if (!(r.start < r.end)) {
      throw RangeError("line " + std::to_string(line_no) + ": start " + f[0] +
                       " is not before end " + f[1]);
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace samast::data
