#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <string>
#include <type_traits>

#include "korra/prob/finite_dist.hpp"
#include "korra/util/text.hpp"

namespace korra::prob {

struct HistogramStyle {
  /// Percentage points represented by one '#'.
  double percent_per_mark = 7.5;
  /// Longest bar; a 100% entry renders exactly this many marks.
  int max_marks = 13;
};

/// Bar for one entry: round(percent / percent_per_mark) marks, capped at
/// max_marks, at least one mark for any nonzero entry.
inline std::string histogram_bar(double percent, const HistogramStyle& style = {}) {
  if (percent <= 0.0) return {};
  long marks = std::lround(percent / style.percent_per_mark);
  marks = std::clamp<long>(marks, 1, style.max_marks);
  return std::string(static_cast<std::size_t>(marks), '#');
}

/// "<name> <percent, 3 significant digits>% <bar>", one line per entry in
/// entry order, each line newline-terminated.
template <class T, class Label>
  requires std::invocable<Label&, const T&>
std::string histogram_text(const FiniteDist<T>& d, Label&& label, const HistogramStyle& style = {}) {
  std::string out;
  for (const auto& [value, weight] : d.entries()) {
    const double percent = weight * 100.0;
    out += std::invoke(label, value);
    out += ' ';
    out += text::significant(percent, 3);
    out += "% ";
    out += histogram_bar(percent, style);
    out += '\n';
  }
  return out;
}

inline std::string histogram_text(const FiniteDist<std::string>& d, const HistogramStyle& style = {}) {
  return histogram_text(d, [](const std::string& s) { return s; }, style);
}

}  // namespace korra::prob
