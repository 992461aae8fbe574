#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "korra/error.hpp"
#include "korra/model/facts.hpp"
#include "korra/model/types.hpp"
#include "korra/model/usage.hpp"
#include "korra/prob/rng.hpp"
#include "korra/scheduler/main_distribution.hpp"
#include "korra/stats/stats.hpp"
#include "korra/triggers/engine.hpp"

namespace korra::session {

using Json = nlohmann::json;

/// Everything carried from one session to the next.
struct SessionState {
  model::Facts facts;
  /// Current value of every uncertain variable of the model.
  std::map<std::string, std::optional<double>> variables;
  model::Usage usage;
  triggers::TriggerState triggers;
  stats::InteractionsStat stats;
  std::uint64_t seed = 0;
  /// Epoch seconds.
  double session_started_at = 0.0;

  friend bool operator==(const SessionState&, const SessionState&) = default;
};

inline SessionState fresh_state(const model::AgentModel& m, std::uint64_t seed, double now) {
  SessionState s;
  for (const auto& v : m.variables) s.variables[v.name] = v.initial;
  s.seed = seed;
  s.session_started_at = now;
  return s;
}

namespace detail {

inline Json optional_number(std::optional<double> v) { return v ? Json(*v) : Json(nullptr); }

inline std::optional<double> read_optional_number(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace detail

inline Json to_json(const SessionState& s) {
  Json j;
  j["version"] = 1;
  j["seed"] = s.seed;
  j["session_started_at"] = s.session_started_at;
  Json facts = Json::object();
  for (const auto& [id, f] : s.facts) {
    Json jf{{"answer", f.answer}, {"at", f.at}};
    jf["polarity"] = f.polarity ? Json(std::string(to_string(*f.polarity))) : Json(nullptr);
    jf["value"] = detail::optional_number(f.value);
    facts[id] = jf;
  }
  j["facts"] = facts;
  Json vars = Json::object();
  for (const auto& [name, v] : s.variables) vars[name] = detail::optional_number(v);
  j["variables"] = vars;
  Json usage = Json::object();
  for (const auto& [id, u] : s.usage) {
    usage[id] = {{"used", u.used}, {"answered", u.answered}, {"last_used_at", detail::optional_number(u.last_used_at)}};
  }
  j["usage"] = usage;
  Json stats = Json::object();
  for (const auto& [name, c] : s.stats.categories()) {
    stats[name] = {{"total_time", c.total_time}, {"count", c.count}, {"depleted_requests", c.depleted_requests}};
  }
  j["stats"] = stats;
  j["triggers"] = {{"fired_updates", s.triggers.fired_updates},
                   {"fired_evaluations", s.triggers.fired_evaluations},
                   {"injected", s.triggers.injected}};
  return j;
}

/// Reads a stored state, keeping only entries the model still knows.
inline SessionState from_json(const Json& j, const model::AgentModel& m) {
  SessionState s = fresh_state(m, j.at("seed").get<std::uint64_t>(), j.at("session_started_at").get<double>());
  for (const auto& [id, jf] : j.at("facts").items()) {
    if (!m.find_interaction(id)) continue;
    model::FactRecord f;
    f.answer = jf.at("answer").get<std::string>();
    f.at = jf.at("at").get<double>();
    if (!jf.at("polarity").is_null()) {
      f.polarity = jf.at("polarity").get<std::string>() == "negative" ? Polarity::negative : Polarity::positive;
    }
    f.value = detail::read_optional_number(jf.at("value"));
    s.facts[id] = f;
  }
  for (const auto& [name, jv] : j.at("variables").items()) {
    if (!m.find_variable(name)) continue;
    auto v = detail::read_optional_number(jv);
    if (v && !(*v >= 0.0 && *v <= 1.0)) throw StoreError("variable '" + name + "' outside [0,1]");
    s.variables[name] = v;
  }
  for (const auto& [id, ju] : j.at("usage").items()) {
    if (!m.find_interaction(id)) continue;
    model::UsageRecord u;
    u.used = ju.at("used").get<bool>();
    u.answered = ju.at("answered").get<bool>() && u.used;
    u.last_used_at = detail::read_optional_number(ju.at("last_used_at"));
    s.usage[id] = u;
  }
  for (const auto& [name, jc] : j.at("stats").items()) {
    auto& c = s.stats.categories()[name];
    c.total_time = jc.at("total_time").get<double>();
    c.count = jc.at("count").get<std::size_t>();
    c.depleted_requests = jc.at("depleted_requests").get<std::size_t>();
  }
  const auto& t = j.at("triggers");
  s.triggers.fired_updates = t.at("fired_updates").get<std::set<std::string>>();
  s.triggers.fired_evaluations = t.at("fired_evaluations").get<std::set<std::string>>();
  s.triggers.injected = t.at("injected").get<std::size_t>();
  return s;
}

/// A directory holding session_state.json and one log file per session.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path state_file() const { return dir_ / "session_state.json"; }

  /// Log path named after the session start, e.g. session_20261018T101500.log.
  std::filesystem::path log_file(double started_at) const {
    const auto secs = static_cast<std::time_t>(started_at);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%S", &tm);
    return dir_ / ("session_" + std::string(buf) + ".log");
  }

  std::optional<Json> read() const {
    std::error_code ec;
    if (!std::filesystem::exists(state_file(), ec)) return std::nullopt;
    std::ifstream in(state_file());
    if (!in) throw StoreError("cannot read " + state_file().string());
    try {
      return Json::parse(in);
    } catch (const Json::exception& e) {
      throw StoreError("corrupt session store " + state_file().string() + ": " + e.what() +
                       "; delete the file to start fresh");
    }
  }

  /// Writes atomically through a temporary file.
  void write(const Json& j) const {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw StoreError("cannot create store directory " + dir_.string() + ": " + ec.message());
    const auto tmp = dir_ / "session_state.json.tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw StoreError("cannot write " + tmp.string());
      out << j.dump(2) << '\n';
      if (!out) throw StoreError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, state_file(), ec);
    if (ec) throw StoreError("cannot replace " + state_file().string() + ": " + ec.message());
  }

 private:
  std::filesystem::path dir_;
};

/// Resets used non-repeatable interactions with probability
/// reuse_probability(now - last_used_at, tau), drawing from the "forget"
/// stream in model order. Uncertain-fact questions are left alone. Returns
/// the ids reset.
inline std::vector<std::string> apply_forgetfulness(const model::AgentModel& m, model::Usage& usage, double now,
                                                    double tau, prob::RngStream& rng) {
  std::vector<std::string> reset;
  for (const auto& in : m.interactions) {
    if (in.repeatable || in.kind == model::InteractionKind::uncertain_fact_question) continue;
    auto it = usage.find(in.id);
    if (it == usage.end() || !it->second.used || !it->second.last_used_at) continue;
    const double p = scheduler::reuse_probability(std::max(0.0, now - *it->second.last_used_at), tau);
    if (rng.uniform01() < p) {
      it->second.used = false;
      it->second.answered = false;
      reset.push_back(in.id);
    }
  }
  return reset;
}

struct Startup {
  SessionState state;
  std::vector<std::string> forgotten;
};

/// Session startup: restore the stored state if there is one, then apply
/// forgetfulness. Update-trigger firings are per session and start empty.
inline Startup startup(const model::AgentModel& m, const SessionStore* store, std::uint64_t seed, double now,
                       std::optional<double> tau = std::nullopt) {
  Startup out{fresh_state(m, seed, now), {}};
  if (store) {
    if (auto j = store->read()) {
      try {
        out.state = from_json(*j, m);
      } catch (const Json::exception& e) {
        throw StoreError("corrupt session store " + store->state_file().string() + ": " + e.what() +
                         "; delete the file to start fresh");
      }
      out.state.seed = seed;
      out.state.session_started_at = now;
      out.state.triggers.fired_updates.clear();
    }
  }
  prob::RngStream rng(seed, prob::streams::kForget);
  out.forgotten = apply_forgetfulness(m, out.state.usage, now, tau.value_or(m.engine.reuse_tau_s), rng);
  return out;
}

inline void persist(const SessionState& s, const SessionStore& store) { store.write(to_json(s)); }

}  // namespace korra::session
