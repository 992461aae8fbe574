// korra: run a companion agent live, simulate it headless, or summarize logs.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "korra/engine/engine.hpp"
#include "korra/engine/policy.hpp"
#include "korra/engine/simulate.hpp"
#include "korra/model/json_io.hpp"
#include "korra/service/service.hpp"
#include "korra/session/log.hpp"
#include "korra/session/state.hpp"
#include "korra/stats/stats.hpp"

namespace {

using namespace korra;
using Json = nlohmann::json;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

double epoch_seconds() {
  return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw StoreError("cannot write '" + path + "'");
  out << content;
}

/// Prints what the agent says so a terminal user can follow along.
void echo_event(const engine::EngineEvent& ev) {
  if (ev.kind == "utterance") {
    std::cout << "agent: " << ev.payload.value("text", "") << '\n';
  } else if (ev.kind == "awaiting_response") {
    const auto& opts = ev.payload["options"];
    if (opts.empty()) {
      std::cout << "  (type an answer)\n";
    } else {
      std::cout << "  [";
      for (std::size_t i = 0; i < opts.size(); ++i) std::cout << (i ? " | " : "") << opts[i].get<std::string>();
      std::cout << "]\n";
    }
  } else if (ev.kind == "nonverbal") {
    std::cout << "  *" << ev.payload.value("cue", "") << "*\n";
  } else if (ev.kind == "timeout") {
    std::cout << "  (no answer)\n";
  } else if (ev.kind == "session_end") {
    std::cout << "session ended: " << ev.payload.value("reason", "") << '\n';
  }
  std::cout.flush();
}

struct RunArgs {
  std::string model;
  std::uint64_t seed = 0;
  std::string store;
  int port = -1;
  std::string host = "127.0.0.1";
  double duration = 0.0;
  double speed = 1.0;
};

int cmd_run(const RunArgs& a) {
  const auto m = model::load_model_file(a.model);
  const double started = epoch_seconds();
  std::optional<session::SessionStore> store;
  if (!a.store.empty()) store.emplace(a.store);
  auto boot = session::startup(m, store ? &*store : nullptr, a.seed, started);

  // Shared so the detached stdin reader never outlives what it touches.
  auto shared_channel = std::make_shared<service::CommandChannel>();
  auto asked = std::make_shared<std::atomic<std::uint64_t>>(0);
  auto& channel = *shared_channel;
  service::LiveResponder live(channel, a.speed);
  engine::Engine e(m, std::move(boot.state), engine::EngineOptions{a.seed, true, {}}, engine::log_header(m));
  if (store) {
    std::filesystem::create_directories(store->dir());
    e.log().attach_file(store->log_file(started).string());
  }
  e.set_pacer([&](double t) { live.pace(t); });

  // Tracks the current question for answers typed on stdin.
  auto observe = [&](const engine::EngineEvent& ev) {
    if (ev.kind == "awaiting_response") *asked = ev.payload["seq"].get<std::uint64_t>();
    echo_event(ev);
  };

  std::unique_ptr<service::Service> svc;
  if (a.port >= 0) {
    svc = std::make_unique<service::Service>(e, channel);
    // Service installed its own sink; chain the terminal echo behind it.
    e.set_sink([&, s = svc.get()](const engine::EngineEvent& ev) {
      s->publish(ev);
      observe(ev);
    });
    const int bound = svc->start(a.host, a.port);
    std::cout << "serving on http://" << a.host << ":" << bound << "/api/state\n";
  } else {
    e.set_sink(observe);
  }

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread watcher([&] {
    while (!g_interrupted && !channel.closed()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    channel.close();
  });
  std::thread reader([shared_channel, asked] {
    std::string line;
    while (!shared_channel->closed() && std::getline(std::cin, line)) {
      service::RespondCommand c;
      c.seq = *asked;
      c.text = line;
      auto done = c.done.get_future();
      shared_channel->push(std::move(c));
      const auto r = done.get();
      if (!r.accepted) std::cout << "  (ignored: " << r.reason << ")\n";
    }
  });
  reader.detach();

  e.start(boot.forgotten);
  const double until = a.duration > 0.0 ? a.duration : std::numeric_limits<double>::infinity();
  while (!g_interrupted && !e.ended() && e.now() < until) e.run_step(live);
  e.end(g_interrupted ? "stopped by user" : (e.ended() ? "content exhausted" : "duration reached"));
  g_interrupted = true;
  watcher.join();
  if (svc) svc->stop();
  if (store) {
    session::persist(e.state(), *store);
    std::cout << "state saved to " << store->state_file().string() << '\n';
  }
  return 0;
}

struct SimArgs {
  std::string model;
  std::string policy = "always_positive";
  double duration = 3600.0;
  double speed = 1000.0;
  bool unpaced = false;
  std::uint64_t seed = 0;
  std::string log;
  std::string report;
};

int cmd_simulate(const SimArgs& a) {
  const auto m = model::load_model_file(a.model);
  auto user = engine::make_policy(a.policy, a.seed, m.engine);
  engine::SimulationOptions o;
  o.duration_s = a.duration;
  o.seed = a.seed;
  o.speed = a.unpaced ? 0.0 : a.speed;
  const auto r = engine::simulate(m, *user, o);
  if (!a.log.empty()) write_file(a.log, r.log_text);
  auto report = r.report.to_json();
  report["policy"] = user->name();
  report["seed"] = a.seed;
  if (!a.report.empty()) write_file(a.report, report.dump(2) + "\n");
  std::cout << report.dump(2) << '\n';
  return 0;
}

/// "Cat/id duration=x" -> (Cat, x)
std::optional<std::pair<std::string, double>> parse_executed(const std::string& payload) {
  const auto slash = payload.find('/');
  const auto d = payload.rfind(" duration=");
  if (slash == std::string::npos || d == std::string::npos) return std::nullopt;
  return std::make_pair(payload.substr(0, slash), std::stod(payload.substr(d + 10)));
}

int cmd_stats(const std::string& log_path, const std::string& model_path) {
  const auto events = session::parse_log(read_file(log_path));
  stats::InteractionsStat st;
  std::size_t questions = 0, answered = 0, timeouts = 0, triggers = 0;
  double last = 0.0;
  for (const auto& e : events) {
    last = e.at;
    switch (e.kind) {
      case session::LogKind::executed:
        if (auto x = parse_executed(e.payload)) st.record_execution(x->first, x->second);
        break;
      case session::LogKind::depletion:
        st.record_depletion(e.payload.substr(0, e.payload.find(' ')));
        break;
      case session::LogKind::awaiting_response: ++questions; break;
      case session::LogKind::response: ++answered; break;
      case session::LogKind::timeout: ++timeouts; break;
      case session::LogKind::trigger_fired: ++triggers; break;
      default: break;
    }
  }
  Json out;
  out["log"] = log_path;
  out["events"] = events.size();
  out["session_seconds"] = last;
  out["questions_asked"] = questions;
  out["answers"] = answered;
  out["timeouts"] = timeouts;
  out["trigger_effects"] = triggers;
  out["depletion_events"] = st.total_depletions();
  Json cats = Json::object();
  double total = 0.0;
  for (const auto& [name, c] : st.categories()) total += c.total_time;
  for (const auto& [name, c] : st.categories()) {
    cats[name] = {{"count", c.count},
                  {"total_time", c.total_time},
                  {"avg_time", c.avg_time()},
                  {"time_share", total > 0.0 ? c.total_time / total : 0.0},
                  {"depleted_requests", c.depleted_requests}};
  }
  out["categories"] = cats;
  if (!model_path.empty()) {
    const auto m = model::load_model_file(model_path);
    if (!m.desired_time_share.empty()) {
      try {
        out["suggested_weights"] = stats::suggest_weights(m.desired_time_share, st, m.timing.pause_new.mean);
      } catch (const Error& err) {
        out["suggested_weights_error"] = err.what();
      }
    }
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

/// Seed recorded in the session_start event.
std::uint64_t seed_of(const std::vector<session::LogEvent>& events) {
  for (const auto& e : events) {
    if (e.kind != session::LogKind::session_start) continue;
    if (auto s = engine::detail::payload_field(e.payload, "seed")) return std::stoull(*s);
  }
  throw StoreError("log has no session_start event with a seed");
}

int cmd_replay(const std::string& model_path, const std::string& log_path, double duration) {
  const auto m = model::load_model_file(model_path);
  const auto text = read_file(log_path);
  const auto events = session::parse_log(text);
  engine::ScriptedPolicy user(engine::script_from_log(events));
  engine::SimulationOptions o;
  o.seed = seed_of(events);
  o.duration_s = duration > 0.0 ? duration : 0.0;
  if (duration <= 0.0) {
    // The original run's requested duration is not logged; the last
    // executed interaction bounds it.
    for (const auto& e : events) {
      if (e.kind == session::LogKind::executed) o.duration_s = e.at;
    }
  }
  const auto r = engine::simulate(m, user, o);
  const auto original = session::parse_log(text);
  const auto& again = r.events;
  const std::size_t n = std::min(original.size(), again.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (session::format_event(original[i]) == session::format_event(again[i])) continue;
    std::cout << "diverges at event " << i << ":\n  log:    " << session::format_event(original[i])
              << "\n  replay: " << session::format_event(again[i]) << '\n';
    return 1;
  }
  if (original.size() != again.size()) {
    std::cout << "same prefix, lengths differ: log " << original.size() << ", replay " << again.size() << '\n';
    return 1;
  }
  std::cout << "replay identical (" << n << " events)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Companion agent engine: live sessions, headless simulation and log statistics"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a live session");
  run_cmd->add_option("--model", run.model, "Model file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", run.seed, "Random seed")->required();
  run_cmd->add_option("--store", run.store, "Directory for persisted state and session logs");
  run_cmd->add_option("--serve", run.port, "Serve the HTTP API on this port (0 picks one)");
  run_cmd->add_option("--host", run.host, "Address to bind when serving")->capture_default_str();
  run_cmd->add_option("--duration", run.duration, "Stop after this many seconds (default: until interrupted)");
  run_cmd->add_option("--speed", run.speed, "Virtual seconds per wall second")->check(CLI::PositiveNumber)
      ->capture_default_str();

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a headless session against an emulated user");
  sim_cmd->add_option("--model", sim.model, "Model file")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--policy", sim.policy, "always_positive, uniform_random, silent or a script file")
      ->capture_default_str();
  sim_cmd->add_option("--duration", sim.duration, "Virtual seconds to simulate")->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim_cmd->add_option("--speed", sim.speed, "Virtual seconds per wall second")->check(CLI::Range(1.0, 1e12))
      ->capture_default_str();
  sim_cmd->add_flag("--unpaced", sim.unpaced, "Run as fast as possible, ignoring --speed");
  sim_cmd->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  sim_cmd->add_option("--log", sim.log, "Write the session log here");
  sim_cmd->add_option("--report", sim.report, "Write the exit report here");

  std::string stats_log, stats_model;
  auto* stats_cmd = app.add_subcommand("stats", "Summarize a session log");
  stats_cmd->add_option("--log", stats_log, "Session log")->required()->check(CLI::ExistingFile);
  stats_cmd->add_option("--model", stats_model, "Model file, for weight suggestions")->check(CLI::ExistingFile);

  std::string replay_model, replay_log;
  double replay_duration = 0.0;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a logged session and compare");
  replay_cmd->add_option("--model", replay_model, "Model file")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--log", replay_log, "Session log")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--duration", replay_duration, "Duration of the original run, seconds");

  std::string validate_model;
  auto* validate_cmd = app.add_subcommand("validate", "Check a model file");
  validate_cmd->add_option("--model", validate_model, "Model file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run);
    if (*sim_cmd) return cmd_simulate(sim);
    if (*stats_cmd) return cmd_stats(stats_log, stats_model);
    if (*replay_cmd) return cmd_replay(replay_model, replay_log, replay_duration);
    if (*validate_cmd) {
      const auto m = model::load_model_file(validate_model);
      std::cout << m.name << ": " << m.categories.size() << " categories, " << m.interactions.size()
                << " interactions, " << m.update_triggers.size() + m.evaluate_triggers.size() << " triggers\n";
      return 0;
    }
  } catch (const korra::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
