#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "korra/error.hpp"
#include "korra/prob/finite_dist.hpp"
#include "korra/prob/histogram.hpp"
#include "korra/util/text.hpp"

namespace korra::session {

enum class LogKind {
  session_start,
  forgotten,
  histogram,
  queue_snapshot,
  forecast,
  utterance,
  awaiting_response,
  response,
  unparsed,
  timeout,
  variable_change,
  trigger_fired,
  depletion,
  nonverbal_cue,
  executed,
  notice,
  session_end,
};

inline constexpr std::pair<LogKind, std::string_view> kLogKindNames[] = {
    {LogKind::session_start, "session_start"},
    {LogKind::forgotten, "forgotten"},
    {LogKind::histogram, "histogram"},
    {LogKind::queue_snapshot, "queue_snapshot"},
    {LogKind::forecast, "forecast"},
    {LogKind::utterance, "utterance"},
    {LogKind::awaiting_response, "awaiting_response"},
    {LogKind::response, "response"},
    {LogKind::unparsed, "unparsed"},
    {LogKind::timeout, "timeout"},
    {LogKind::variable_change, "variable_change"},
    {LogKind::trigger_fired, "trigger_fired"},
    {LogKind::depletion, "depletion"},
    {LogKind::nonverbal_cue, "nonverbal_cue"},
    {LogKind::executed, "executed"},
    {LogKind::notice, "notice"},
    {LogKind::session_end, "session_end"},
};

constexpr std::string_view to_string(LogKind k) {
  for (const auto& [kind, name] : kLogKindNames) {
    if (kind == k) return name;
  }
  return "unknown";
}

inline std::optional<LogKind> parse_kind(std::string_view s) {
  for (const auto& [kind, name] : kLogKindNames) {
    if (name == s) return kind;
  }
  return std::nullopt;
}

/// `at` is seconds since session start; `seq` orders events with equal times.
struct LogEvent {
  double at = 0.0;
  std::uint64_t seq = 0;
  LogKind kind = LogKind::notice;
  std::string payload;

  friend bool operator==(const LogEvent&, const LogEvent&) = default;
};

inline constexpr std::string_view kRegenerationBanner = "***** BEGIN Regenerating interactions *****";
inline constexpr std::string_view kStartedPrefix = "# started: ";

/// Regeneration block: banner, "Histogram:", one line per category.
inline std::string histogram_block(const prob::FiniteDist<std::string>& d, const prob::HistogramStyle& style = {}) {
  std::string out(kRegenerationBanner);
  out += "\nHistogram:\n";
  out += prob::histogram_text(d, style);
  out.pop_back();
  return out;
}

/// Queue block: "Interactions queue:" followed by numbered lines.
inline std::string queue_block(const std::vector<std::string>& labels) {
  std::string out = "Interactions queue:";
  for (std::size_t i = 0; i < labels.size(); ++i) out += "\n" + std::to_string(i + 1) + ". " + labels[i];
  if (labels.empty()) out += "\n(empty)";
  return out;
}

inline std::string value_text(std::optional<double> v) { return v ? text::significant(*v, 6) : "unset"; }

/// "name: old -> new"
inline std::string variable_change_line(const std::string& name, std::optional<double> before,
                                        std::optional<double> after) {
  return name + ": " + value_text(before) + " -> " + value_text(after);
}

/// One event as text. Single-line payloads follow the kind on the same
/// line; block payloads (histograms, queues) start on the next line.
inline std::string format_event(const LogEvent& e) {
  char stamp[32];
  std::snprintf(stamp, sizeof stamp, "[%10.3f] ", e.at);
  std::string line = stamp;
  line += to_string(e.kind);
  if (e.payload.empty()) return line;
  line += e.payload.find('\n') == std::string::npos ? " " : "\n";
  line += e.payload;
  return line;
}

/// Append-only session log. Events are never modified after append and
/// their timestamps never decrease. When a file is attached, every event is
/// also written to it as it is appended.
class SessionLog {
 public:
  SessionLog() = default;
  explicit SessionLog(std::vector<std::string> header) : header_(std::move(header)) {}

  void attach_file(const std::string& path) {
    file_.open(path, std::ios::out | std::ios::app);
    if (!file_) throw StoreError("cannot open log file '" + path + "'");
    for (const auto& h : header_) file_ << h << '\n';
    for (const auto& e : events_) file_ << format_event(e) << '\n';
    file_.flush();
  }

  const LogEvent& append(double at, LogKind kind, std::string payload) {
    if (!events_.empty() && at < events_.back().at) {
      throw RangeError("log timestamps must not decrease (" + std::to_string(at) + " < " +
                       std::to_string(events_.back().at) + ")");
    }
    events_.push_back(LogEvent{at, next_seq_++, kind, std::move(payload)});
    if (file_.is_open()) {
      file_ << format_event(events_.back()) << '\n';
      file_.flush();
    }
    return events_.back();
  }

  const std::vector<LogEvent>& events() const { return events_; }
  const std::vector<std::string>& header() const { return header_; }

  /// Full text. Without the wall clock the "# started:" line is left out,
  /// which is the form replay comparisons use.
  std::string text(bool include_wall_clock = true) const {
    std::string out;
    for (const auto& h : header_) {
      if (!include_wall_clock && h.starts_with(kStartedPrefix)) continue;
      out += h + '\n';
    }
    for (const auto& e : events_) out += format_event(e) + '\n';
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<LogEvent> events_;
  std::uint64_t next_seq_ = 0;
  std::ofstream file_;
};

/// Parses log text back into events; header lines are skipped.
inline std::vector<LogEvent> parse_log(std::string_view content) {
  std::vector<LogEvent> out;
  for (const auto& line : text::split_lines(content)) {
    if (line.empty() || line.starts_with('#')) continue;
    if (line.size() > 13 && line[0] == '[' && line[11] == ']') {
      LogEvent e;
      e.at = std::stod(line.substr(1, 10));
      e.seq = out.size();
      const auto rest = line.substr(13);
      const auto sp = rest.find(' ');
      const auto kind = parse_kind(rest.substr(0, sp));
      if (!kind) throw StoreError("unknown log event kind in line: " + line);
      e.kind = *kind;
      if (sp != std::string::npos) e.payload = rest.substr(sp + 1);
      out.push_back(std::move(e));
    } else if (!out.empty()) {
      auto& p = out.back().payload;
      if (!p.empty()) p += '\n';
      p += line;
    }
  }
  return out;
}

}  // namespace korra::session
