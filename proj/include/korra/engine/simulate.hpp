#pragma once

#include <chrono>
#include <ctime>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "korra/engine/engine.hpp"
#include "korra/engine/policy.hpp"
#include "korra/session/state.hpp"

namespace korra::engine {

struct SimulationOptions {
  double duration_s = 3600.0;
  std::uint64_t seed = 0;
  /// Virtual seconds per wall second. Zero or less runs unpaced.
  double speed = 0.0;
  /// Epoch seconds the virtual session starts at; fixed so runs are reproducible.
  double epoch = 0.0;
  bool timing_draws = true;
};

struct SimulationReport {
  double virtual_seconds = 0.0;
  double wall_seconds = 0.0;
  std::string end_reason;
  RunCounters counters;
  std::size_t max_queue = 0;
  std::size_t log_events = 0;

  nlohmann::json to_json() const {
    return {{"virtual_seconds", virtual_seconds},
            {"wall_seconds", wall_seconds},
            {"end_reason", end_reason},
            {"interactions_executed", counters.executed},
            {"per_category", counters.per_category},
            {"questions", counters.questions},
            {"answered", counters.answered},
            {"timeouts", counters.timeouts},
            {"depletion_events", counters.depletions},
            {"trigger_firings", counters.trigger_firings},
            {"fired_triggers", counters.fired_triggers},
            {"regenerations", counters.regenerations},
            {"peak_queue_length", counters.peak_pending},
            {"max_queue", max_queue},
            {"log_events", log_events}};
  }
};

struct SimulationResult {
  std::string log_text;
  /// Log text without the wall-clock header line; equal across replays.
  std::string replay_text;
  std::vector<session::LogEvent> events;
  SimulationReport report;
};

inline std::string wall_clock_iso() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::vector<std::string> log_header(const model::AgentModel& m) {
  return {"# korra session log", std::string(session::kStartedPrefix) + wall_clock_iso(), "# model: " + m.name};
}

/// Sleeps so virtual time `t` is reached no earlier than t / speed wall
/// seconds after construction.
class WallPacer {
 public:
  explicit WallPacer(double speed) : speed_(speed), start_(std::chrono::steady_clock::now()) {}
  void operator()(double t) const {
    if (speed_ <= 0.0) return;
    const auto due = start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(t / speed_));
    std::this_thread::sleep_until(due);
  }

 private:
  double speed_;
  std::chrono::steady_clock::time_point start_;
};

/// Headless session against an emulated user, starting from a fresh state.
inline SimulationResult simulate(const model::AgentModel& m, Responder& user, const SimulationOptions& opts) {
  const auto wall_start = std::chrono::steady_clock::now();
  auto boot = session::startup(m, nullptr, opts.seed, opts.epoch);
  Engine e(m, std::move(boot.state), EngineOptions{opts.seed, opts.timing_draws, {}}, log_header(m));
  if (opts.speed > 0.0) e.set_pacer(WallPacer(opts.speed));
  e.start(boot.forgotten);
  e.run_until(opts.duration_s, user);
  const bool exhausted = e.ended();
  e.end(exhausted ? "content exhausted" : "duration reached");

  SimulationResult r;
  r.log_text = e.log().text();
  r.replay_text = e.log().text(false);
  r.events = e.log().events();
  r.report.virtual_seconds = e.now();
  r.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  r.report.end_reason = r.events.back().payload;
  r.report.counters = e.counters();
  r.report.max_queue = m.engine.max_queue;
  r.report.log_events = r.events.size();
  return r;
}

}  // namespace korra::engine
