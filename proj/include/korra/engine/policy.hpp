#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "korra/error.hpp"
#include "korra/model/types.hpp"
#include "korra/prob/rng.hpp"
#include "korra/session/log.hpp"
#include "korra/util/text.hpp"

namespace korra::engine {

/// A question waiting for the user.
struct Question {
  std::uint64_t seq = 0;
  const model::Interaction* interaction = nullptr;
  /// Rendered prompt, SSML stripped.
  std::string prompt;
  double timeout = 0.0;
  /// Seconds since session start when the wait began.
  double asked_at = 0.0;
};

/// Typed or clicked answer and how long after the question it arrived.
struct Answer {
  std::string text;
  double latency = 0.0;
};

inline double quantize_ms(double seconds) { return std::round(seconds * 1000.0) / 1000.0; }

/// Source of user answers. Returning nullopt means the user stays silent;
/// an answer whose latency reaches the timeout also counts as silence.
class Responder {
 public:
  virtual ~Responder() = default;
  virtual std::optional<Answer> await(const Question& q) = 0;
  virtual std::string name() const = 0;
};

class SilentPolicy final : public Responder {
 public:
  std::optional<Answer> await(const Question&) override { return std::nullopt; }
  std::string name() const override { return "silent"; }
};

/// Draws latencies uniformly from the model's user-latency range, on the
/// "user-latency" stream, rounded to milliseconds.
class LatencySource {
 public:
  LatencySource(std::uint64_t seed, double lo, double hi) : rng_(seed, prob::streams::kUserLatency), lo_(lo), hi_(hi) {}
  double next() { return quantize_ms(rng_.uniform(lo_, hi_)); }

 private:
  prob::RngStream rng_;
  double lo_;
  double hi_;
};

/// Picks the first positive response (or the first sample answer for free
/// text questions).
class AlwaysPositivePolicy final : public Responder {
 public:
  AlwaysPositivePolicy(std::uint64_t seed, const model::EngineParams& p)
      : latency_(seed, p.user_latency_min_s, p.user_latency_max_s) {}

  std::optional<Answer> await(const Question& q) override {
    const auto& in = *q.interaction;
    for (const auto& r : in.responses) {
      if (r.polarity == Polarity::positive) return Answer{r.label, latency_.next()};
    }
    if (!in.responses.empty()) return Answer{in.responses.front().label, latency_.next()};
    if (!in.sample_answers.empty()) return Answer{in.sample_answers.front(), latency_.next()};
    return std::nullopt;
  }
  std::string name() const override { return "always_positive"; }

 private:
  LatencySource latency_;
};

/// Picks uniformly among the predefined responses (or sample answers) on
/// the "user-choice" stream.
class UniformRandomPolicy final : public Responder {
 public:
  UniformRandomPolicy(std::uint64_t seed, const model::EngineParams& p)
      : choice_(seed, prob::streams::kUserChoice), latency_(seed, p.user_latency_min_s, p.user_latency_max_s) {}

  std::optional<Answer> await(const Question& q) override {
    const auto& in = *q.interaction;
    if (!in.responses.empty()) return Answer{in.responses[choice_.uniform_index(in.responses.size())].label, latency_.next()};
    if (!in.sample_answers.empty()) {
      return Answer{in.sample_answers[choice_.uniform_index(in.sample_answers.size())], latency_.next()};
    }
    return std::nullopt;
  }
  std::string name() const override { return "uniform_random"; }

 private:
  prob::RngStream choice_;
  LatencySource latency_;
};

/// One scripted reply; no answer means silence.
struct ScriptEntry {
  std::optional<std::string> answer;
  std::optional<double> latency;

  friend bool operator==(const ScriptEntry&, const ScriptEntry&) = default;
};

inline constexpr std::string_view kSilentToken = "<silent>";
inline constexpr double kDefaultScriptLatency = 1.0;

/// Replies from a fixed list, one entry per question; silent once the list
/// runs out.
class ScriptedPolicy final : public Responder {
 public:
  explicit ScriptedPolicy(std::vector<ScriptEntry> script) : script_(script.begin(), script.end()) {}

  std::optional<Answer> await(const Question&) override {
    if (script_.empty()) return std::nullopt;
    auto e = std::move(script_.front());
    script_.pop_front();
    if (!e.answer) return std::nullopt;
    return Answer{*e.answer, e.latency.value_or(kDefaultScriptLatency)};
  }
  std::string name() const override { return "scripted"; }
  std::size_t remaining() const { return script_.size(); }

 private:
  std::deque<ScriptEntry> script_;
};

/// Script text: one reply per line, optionally followed by a tab and the
/// latency in seconds. "<silent>" stands for no answer. Blank lines and
/// lines starting with '#' are ignored.
inline std::vector<ScriptEntry> parse_script(std::string_view content) {
  std::vector<ScriptEntry> out;
  for (const auto& raw : text::split_lines(content)) {
    if (text::trim(raw).empty() || raw.starts_with('#')) continue;
    ScriptEntry e;
    std::string answer = raw;
    if (auto tab = raw.rfind('\t'); tab != std::string::npos) {
      answer = raw.substr(0, tab);
      try {
        e.latency = std::stod(raw.substr(tab + 1));
      } catch (const std::exception&) {
        throw RangeError("bad latency in script line: " + raw);
      }
    }
    if (answer != kSilentToken) e.answer = answer;
    out.push_back(std::move(e));
  }
  return out;
}

inline std::string format_script(const std::vector<ScriptEntry>& script) {
  std::string out;
  for (const auto& e : script) {
    out += e.answer ? *e.answer : std::string(kSilentToken);
    if (e.latency) out += "\t" + text::fixed(*e.latency, 3);
    out += '\n';
  }
  return out;
}

namespace detail {

/// Value of ` key=<json>` or ` key=<token>` in a log payload.
inline std::optional<std::string> payload_field(const std::string& payload, const std::string& key) {
  const auto at = payload.find(" " + key + "=");
  if (at == std::string::npos) return std::nullopt;
  const auto start = at + key.size() + 2;
  if (start < payload.size() && payload[start] == '"') {
    std::size_t i = start + 1;
    while (i < payload.size() && payload[i] != '"') i += payload[i] == '\\' ? 2 : 1;
    return nlohmann::json::parse(payload.substr(start, i - start + 1)).get<std::string>();
  }
  const auto end = payload.find(' ', start);
  return payload.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

}  // namespace detail

/// Rebuilds the user's replies from a session log so the session can be
/// replayed with a scripted policy.
inline std::vector<ScriptEntry> script_from_log(const std::vector<session::LogEvent>& events) {
  std::vector<ScriptEntry> out;
  for (const auto& e : events) {
    if (e.kind == session::LogKind::response || e.kind == session::LogKind::unparsed) {
      ScriptEntry s;
      s.answer = detail::payload_field(e.payload, "answer");
      if (auto l = detail::payload_field(e.payload, "latency")) s.latency = std::stod(*l);
      out.push_back(std::move(s));
    } else if (e.kind == session::LogKind::timeout) {
      out.push_back(ScriptEntry{});
    }
  }
  return out;
}

/// Policy by name, or a script file path.
inline std::unique_ptr<Responder> make_policy(const std::string& spec, std::uint64_t seed,
                                              const model::EngineParams& params) {
  if (spec == "always_positive") return std::make_unique<AlwaysPositivePolicy>(seed, params);
  if (spec == "uniform_random") return std::make_unique<UniformRandomPolicy>(seed, params);
  if (spec == "silent") return std::make_unique<SilentPolicy>();
  std::ifstream in(spec);
  if (!in) throw NotFound("unknown policy '" + spec + "' (expected always_positive, uniform_random, silent or a script file)");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return std::make_unique<ScriptedPolicy>(parse_script(content));
}

}  // namespace korra::engine
