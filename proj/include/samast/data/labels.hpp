#pragma once

#include <array>
#include <string>
#include <string_view>

#include "samast/core/error.hpp"

namespace samast::data {

enum class Label : int { normal = 0, crackle = 1, wheeze = 2, both = 3 };

inline constexpr int num_labels = 4;
inline constexpr std::array<Label, 4> all_labels{Label::normal, Label::crackle, Label::wheeze,
                                                 Label::both};

inline std::string_view label_name(Label l) {
  static constexpr std::array<std::string_view, 4> names{"Normal", "Crackle", "Wheeze", "Both"};
  return names[static_cast<std::size_t>(l)];
}

inline Label label_from_index(int i) {
  if (i < 0 || i >= num_labels) throw DataError("label index " + std::to_string(i) + " out of range");
  return static_cast<Label>(i);
}

// Accepts the display name (any case) or the index digit.
inline Label parse_label(std::string_view s) {
  if (s.size() == 1 && s[0] >= '0' && s[0] <= '3') return static_cast<Label>(s[0] - '0');
  for (Label l : all_labels) {
    const std::string_view n = label_name(l);
    if (n.size() != s.size()) continue;
    bool same = true;
    for (std::size_t i = 0; i < n.size(); ++i)
      same = same && (n[i] | 0x20) == (s[i] | 0x20);
    if (same) return l;
  }
  throw DataError("unknown class '" + std::string(s) + "'");
}

inline Label label_of(bool crackle, bool wheeze) {
  return static_cast<Label>((crackle ? 1 : 0) + (wheeze ? 2 : 0));
}

inline bool has_crackle(Label l) { return l == Label::crackle || l == Label::both; }
inline bool has_wheeze(Label l) { return l == Label::wheeze || l == Label::both; }

}  // namespace samast::data
