#pragma once

#include <algorithm>
#include <cctype>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "korra/engine/policy.hpp"
#include "korra/error.hpp"
#include "korra/model/responses.hpp"
#include "korra/model/types.hpp"
#include "korra/model/usage.hpp"
#include "korra/prob/histogram.hpp"
#include "korra/prob/rng.hpp"
#include "korra/scheduler/queue.hpp"
#include "korra/scheduler/scheduler.hpp"
#include "korra/session/log.hpp"
#include "korra/session/state.hpp"
#include "korra/stats/stats.hpp"
#include "korra/timing/timing.hpp"
#include "korra/triggers/engine.hpp"
#include "korra/util/text.hpp"

namespace korra::engine {

using Json = nlohmann::json;
using session::LogKind;

/// Event pushed to live observers (the HTTP event stream).
struct EngineEvent {
  double at = 0.0;
  std::string kind;
  Json payload;
};

struct EngineOptions {
  std::uint64_t seed = 0;
  /// When false every interval is its distribution mean and the timing
  /// stream is never drawn from.
  bool timing_draws = true;
  prob::HistogramStyle histogram;
};

/// Counters gathered while running.
struct RunCounters {
  std::size_t executed = 0;
  std::size_t questions = 0;
  std::size_t answered = 0;
  std::size_t timeouts = 0;
  std::size_t depletions = 0;
  std::size_t trigger_firings = 0;
  std::size_t regenerations = 0;
  std::size_t peak_pending = 0;
  std::map<std::string, std::size_t> per_category;
  std::vector<std::string> fired_triggers;
};

/// The interaction loop. One Engine owns the session state, the queue and
/// the virtual clock; every mutation happens on the thread calling its
/// methods.
class Engine {
 public:
  Engine(const model::AgentModel& m, session::SessionState state, EngineOptions opts,
         std::vector<std::string> log_header = {})
      : model_(&m),
        state_(std::move(state)),
        opts_(opts),
        scheduler_(m),
        log_(std::move(log_header)),
        content_(opts.seed, prob::streams::kContent),
        timing_(opts.seed, prob::streams::kTiming),
        gates_(opts.seed, prob::streams::kGates) {}

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  /// Observer for live events; called on the engine thread.
  void set_sink(std::function<void(const EngineEvent&)> sink) { sink_ = std::move(sink); }
  /// Called with each virtual time the clock is about to reach, so a live
  /// runner can wait for the wall clock to catch up.
  void set_pacer(std::function<void(double)> pacer) { pacer_ = std::move(pacer); }

  session::SessionLog& log() { return log_; }
  const session::SessionLog& log() const { return log_; }
  const session::SessionState& state() const { return state_; }
  const scheduler::Scheduler& scheduler() const { return scheduler_; }
  const scheduler::InteractionsQueue& queue() const { return queue_; }
  const RunCounters& counters() const { return counters_; }
  double now() const { return now_; }
  bool ended() const { return ended_; }
  const std::optional<Question>& pending() const { return pending_; }
  std::optional<std::string> user_name() const {
    if (!model_->user_name_fact) return std::nullopt;
    auto it = state_.facts.find(*model_->user_name_fact);
    if (it == state_.facts.end()) return std::nullopt;
    return it->second.answer;
  }

  /// Logs the session start and builds the first queue, greeting first.
  void start(const std::vector<std::string>& forgotten = {}) {
    record(LogKind::session_start, "model=" + model_->name + " seed=" + std::to_string(opts_.seed), "session_start",
           {{"model", model_->name}, {"seed", opts_.seed}});
    for (const auto& id : forgotten) record(LogKind::forgotten, id);
    next_smile_ = interval(timing::IntervalKind::smile);
    std::vector<std::string> greet;
    for (const auto& id : model_->tuning.prepend_at_start) {
      scheduler_.reserve(id);
      greet.push_back(id);
    }
    const std::size_t n = model_->engine.batch > greet.size() ? model_->engine.batch - greet.size() : 1;
    regenerate(false, n, greet);
  }

  /// Runs one interaction. Returns false once the session has ended.
  bool run_step(Responder& user) {
    if (ended_) return false;
    if (queue_.pending() < model_->engine.low_water) regenerate(false, model_->engine.batch, {});
    if (queue_.empty()) {
      end("content exhausted");
      return false;
    }
    advance_to(now_ + interval(timing::IntervalKind::pause_new));
    if (queue_.empty()) regenerate(false, model_->engine.batch, {});
    if (queue_.empty()) {
      end("content exhausted");
      return false;
    }
    execute(queue_.advance(), user);
    queue_.compact(model_->engine.max_queue);
    return true;
  }

  /// Runs interactions until the virtual clock passes `until` seconds.
  void run_until(double until, Responder& user) {
    while (!ended_ && now_ < until) run_step(user);
  }

  void end(const std::string& reason) {
    if (ended_) return;
    ended_ = true;
    record(LogKind::session_end, reason, "session_end", {{"reason", reason}});
  }

  /// Consistent view of the engine for observers.
  Json snapshot() const {
    Json j;
    j["at"] = now_;
    j["ended"] = ended_;
    Json dist = Json::array();
    std::string hist;
    try {
      const auto eff = scheduler_.effective(state_.usage).to_dist();
      for (const auto& [name, w] : eff.entries()) {
        dist.push_back({{"category", name}, {"weight", w}, {"percent", text::significant(100.0 * w, 3)}});
      }
      hist = prob::histogram_text(eff, opts_.histogram);
    } catch (const DepletionError&) {
    }
    j["main_distribution"] = dist;
    j["histogram_text"] = hist;
    Json base = Json::object();
    for (const auto& [name, w] : scheduler_.base().weights) base[name] = w;
    j["base_weights"] = base;
    Json q = Json::array();
    std::size_t n = 0;
    for (const auto& item : queue_.unexecuted()) {
      q.push_back({{"n", ++n}, {"category", scheduler::category_of(item)}, {"text", scheduler::item_label(item, *model_)}});
    }
    j["queue"] = q;
    Json vars = Json::object();
    for (const auto& [name, v] : state_.variables) vars[name] = v ? Json(*v) : Json(nullptr);
    j["variables"] = vars;
    Json st = Json::object();
    for (const auto& [name, c] : state_.stats.categories()) {
      st[name] = {{"total_time", c.total_time},
                  {"count", c.count},
                  {"avg_time", c.avg_time()},
                  {"depleted_requests", c.depleted_requests}};
    }
    j["stats"] = st;
    j["pending"] = pending_ ? question_json(*pending_) : Json(nullptr);
    j["executed"] = counters_.executed;
    return j;
  }

  /// Forecasted time of the unexecuted queue: sum of (A_i + P_i) C_i.
  double forecast_unexecuted() const {
    std::map<std::string, std::size_t> counts;
    for (const auto& item : queue_.unexecuted()) ++counts[scheduler::category_of(item)];
    std::vector<stats::FitTerm> terms;
    for (const auto& [cat, c] : counts) {
      const auto* s = state_.stats.find(cat);
      const double a = s && s->count ? s->avg_time() : model_->engine.default_duration_s;
      terms.push_back({a, model_->timing.pause_new.mean, c});
    }
    return stats::compute_fit(terms);
  }

 private:
  // ---- clock -------------------------------------------------------------

  double interval(timing::IntervalKind k) {
    if (!opts_.timing_draws) return std::max(model_->timing[k].mean, model_->timing.floor);
    return timing::sample_interval(k, model_->timing, timing_);
  }

  double epoch_now() const { return state_.session_started_at + now_; }

  /// Moves the clock to `t`, handling every tick, smile and gaze event due
  /// on the way in time order.
  void advance_to(double t) {
    constexpr double never = std::numeric_limits<double>::infinity();
    while (true) {
      const double away = gaze_away_.value_or(never);
      const double back = gaze_return_.value_or(never);
      const double next = std::min({next_tick_, next_smile_, away, back});
      if (next > t) break;
      pace(next);
      now_ = std::max(now_, next);
      if (next == next_tick_) {
        next_tick_ += 1.0;
        apply_effects(triggers::on_tick(*model_, state_.triggers, next));
      } else if (next == next_smile_) {
        cue("smile");
        next_smile_ = now_ + interval(timing::IntervalKind::smile);
      } else if (next == away) {
        cue("gaze_away");
        gaze_away_.reset();
        gaze_return_ = now_ + model_->engine.gaze_return_s;
      } else {
        cue("gaze_return");
        gaze_return_.reset();
      }
    }
    pace(t);
    now_ = std::max(now_, t);
  }

  void pace(double t) {
    if (pacer_) pacer_(t);
  }

  // ---- logging -----------------------------------------------------------

  void record(LogKind kind, std::string payload, std::string event_kind = {}, Json event_payload = nullptr) {
    log_.append(now_, kind, payload);
    if (sink_ && !event_kind.empty()) {
      sink_(EngineEvent{now_, std::move(event_kind),
                        event_payload.is_null() ? Json{{"text", std::move(payload)}} : std::move(event_payload)});
    }
  }

  void cue(const std::string& name) { record(LogKind::nonverbal_cue, name, "nonverbal", {{"cue", name}}); }

  static Json question_json(const Question& q) {
    Json options = Json::array();
    for (const auto& r : q.interaction->responses) options.push_back(r.label);
    return {{"seq", q.seq},
            {"id", q.interaction->id},
            {"text", q.prompt},
            {"options", options},
            {"free_text", q.interaction->responses.empty()},
            {"timeout_s", q.timeout},
            {"asked_at", q.asked_at}};
  }

  // ---- queue -------------------------------------------------------------

  /// Builds `n` new items after the kept part of the queue. With `discard`
  /// the sampled unexecuted items are returned to their categories first.
  void regenerate(bool discard, std::size_t n, const std::vector<std::string>& prepend) {
    if (discard) scheduler_.give_back(queue_.extract_unexecuted(scheduler::is_sampled));
    std::vector<std::string> warnings;
    try {
      record(LogKind::histogram,
             session::histogram_block(scheduler_.effective(state_.usage, &warnings).to_dist(), opts_.histogram));
    } catch (const DepletionError& e) {
      record(LogKind::notice, e.what());
    }
    auto gen = scheduler_.generate(n, state_.usage, content_, state_.stats);
    for (const auto& w : warnings) record(LogKind::notice, w);
    for (const auto& w : gen.warnings) {
      if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) record(LogKind::notice, w);
    }
    for (const auto& c : gen.depleted_draws) {
      ++counters_.depletions;
      record(LogKind::depletion, c + " has no interaction left; draw repeated", "depletion", {{"category", c}});
    }
    if (gen.exhausted) {
      record(LogKind::notice, "content exhausted; generated " + std::to_string(gen.items.size()) + " of " +
                                  std::to_string(n) + " interactions");
    }
    queue_.append(std::move(gen.items));
    std::vector<scheduler::TuningCommand> tuning;
    for (auto it = prepend.rbegin(); it != prepend.rend(); ++it) {
      tuning.push_back(scheduler::Prepend{scheduler::Planned{*it, model_->interaction(*it).category, false}});
    }
    for (const auto& g : model_->tuning.group) tuning.push_back(scheduler::Group{g});
    scheduler::apply_tuning(queue_, tuning);
    ++counters_.regenerations;
    counters_.peak_pending = std::max(counters_.peak_pending, queue_.pending());
    log_queue();
  }

  void log_queue() {
    std::vector<std::string> labels;
    Json items = Json::array();
    for (const auto& item : queue_.unexecuted()) {
      labels.push_back(scheduler::item_label(item, *model_));
      items.push_back({{"category", scheduler::category_of(item)}, {"text", labels.back()}});
    }
    record(LogKind::queue_snapshot, session::queue_block(labels), "queue_regenerated", {{"queue", items}});
    record(LogKind::forecast,
           "FIT " + text::fixed(forecast_unexecuted(), 1) + " s for " + std::to_string(labels.size()) + " interactions");
  }

  // ---- triggers ----------------------------------------------------------

  /// Logs every firing first, then applies edits, one resample, injections
  /// at the queue head (in order) and cues.
  void apply_effects(const std::vector<triggers::TriggerEffect>& effects) {
    if (effects.empty()) return;
    std::string last_id;
    for (const auto& e : effects) {
      if (e.trigger_id() != last_id) {
        ++counters_.trigger_firings;
        counters_.fired_triggers.push_back(e.trigger_id());
        last_id = e.trigger_id();
      }
      const auto what = triggers::describe(e.payload());
      record(LogKind::trigger_fired, e.trigger_id() + " " + what + " (" + e.cause() + ")", "trigger_fired",
             {{"trigger", e.trigger_id()}, {"effect", what}, {"cause", e.cause()}});
    }
    bool resample = false;
    std::vector<model::Interaction> inject;
    std::vector<std::string> cues;
    for (const auto& e : effects) {
      const auto& p = e.payload();
      if (const auto* d = std::get_if<triggers::DistributionEdit>(&p)) {
        scheduler_.base().apply(d->edit);
      } else if (std::holds_alternative<triggers::ResampleRequest>(p)) {
        resample = true;
      } else if (const auto* i = std::get_if<triggers::InjectInteraction>(&p)) {
        inject.push_back(i->interaction);
      } else {
        cues.push_back(std::get<triggers::FacialCue>(p).cue);
      }
    }
    if (resample) regenerate(true, model_->engine.batch, {});
    for (std::size_t k = 0; k < inject.size(); ++k) {
      queue_.insert_at(queue_.cursor() + k, scheduler::Injected{inject[k]});
    }
    if (!inject.empty()) {
      counters_.peak_pending = std::max(counters_.peak_pending, queue_.pending());
      log_queue();
    }
    for (const auto& c : cues) cue(c + "_face");
  }

  // ---- execution ---------------------------------------------------------

  std::string choose_text(const model::Interaction& in) {
    if (in.variants.empty()) return in.text;
    std::vector<double> w;
    for (const auto& v : in.variants) w.push_back(v.weight > 0.0 ? v.weight : 0.0);
    return in.variants[scheduler::detail::weighted_index(w, content_)].text;
  }

  /// Fills the name slot and, when the address gate opens and the name is
  /// known, prefixes the utterance with the user's name.
  std::string personalize(std::string text) {
    const auto name = user_name();
    text = text::replace_all(std::move(text), "{user}", name.value_or("friend"));
    const bool address = timing::gate(timing::GateKind::address_by_name, model_->gates, gates_);
    if (address && name && !text.empty() && text.front() != '<') {
      if (text.size() > 1 && std::isupper(static_cast<unsigned char>(text[0])) &&
          std::islower(static_cast<unsigned char>(text[1]))) {
        text[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(text[0])));
      }
      text = *name + ", " + text;
    }
    return text;
  }

  /// Logs an utterance and lets the clock run for its spoken duration.
  void speak(const model::Interaction& in, const std::string& role, const std::string& text) {
    const std::string where = in.category + "/" + in.id;
    record(LogKind::utterance, where + (role.empty() ? "" : " " + role) + ": " + text, "utterance",
           {{"id", in.id}, {"category", in.category}, {"role", role.empty() ? "main" : role},
            {"text", text::strip_ssml(text)}, {"ssml", text}});
    gaze_away_ = now_ + interval(timing::IntervalKind::gaze_hold);
    gaze_return_.reset();
    const double words = static_cast<double>(text::word_count(text::strip_ssml(text)));
    advance_to(now_ + words / model_->engine.words_per_second);
  }

  model::Interaction resolve(const scheduler::QueueItem& item) {
    if (const auto* p = std::get_if<scheduler::Planned>(&item)) return model_->interaction(p->id);
    if (const auto* h = std::get_if<scheduler::Placeholder>(&item)) {
      auto it = state_.variables.find(h->variable);
      const std::optional<double> v = it == state_.variables.end() ? std::nullopt : it->second;
      return scheduler::fill_placeholder(*h, *model_, v, content_);
    }
    return std::get<scheduler::Injected>(item).interaction;
  }

  void execute(const scheduler::QueueItem& item, Responder& user) {
    const double started = now_;
    const bool from_model = !std::holds_alternative<scheduler::Injected>(item);
    const model::Interaction in = resolve(item);
    const std::string text = personalize(choose_text(in));
    speak(in, "", text);
    bool answered = false;
    if (in.expects_answer()) answered = ask(in, text, user);
    if (in.kind == model::InteractionKind::joke &&
        timing::gate(timing::GateKind::joke_clarify, model_->gates, gates_) && !model_->joke_clarifications.empty()) {
      const auto& phrases = model_->joke_clarifications;
      const std::size_t k = phrases.size() == 1 ? 0 : gates_.uniform_index(phrases.size());
      speak(in, "clarification", phrases[k]);
    }
    if (from_model) model::mark_used(*model_, state_.usage, in.id, answered, epoch_now());
    const double duration = now_ - started;
    state_.stats.record_execution(in.category, duration);
    ++counters_.executed;
    ++counters_.per_category[in.category];
    record(LogKind::executed, in.category + "/" + in.id + " duration=" + text::fixed(duration, 3));
  }

  /// Waits for an answer, re-asking once after an unparsed reply. Returns
  /// whether the question got a usable answer.
  bool ask(const model::Interaction& in, const std::string& text, Responder& user) {
    ++counters_.questions;
    for (int attempt = 0; attempt < 2; ++attempt) {
      if (attempt > 0) speak(in, "re-ask", text);
      Question q{++question_seq_, &in, text::strip_ssml(text), interval(timing::IntervalKind::response_timeout), now_};
      std::string options;
      for (const auto& r : in.responses) options += (options.empty() ? "" : "|") + r.label;
      pending_ = q;
      record(LogKind::awaiting_response,
             in.id + " timeout=" + text::fixed(q.timeout, 3) + " options=" + (options.empty() ? "<free text>" : options),
             "awaiting_response", question_json(q));
      auto answer = user.await(q);
      pending_.reset();
      if (!answer || !(answer->latency < q.timeout)) {
        advance_to(q.asked_at + q.timeout);
        ++counters_.timeouts;
        record(LogKind::timeout, in.id + " no answer after " + text::fixed(q.timeout, 3) + " s", "timeout",
               {{"id", in.id}, {"seq", q.seq}});
        return false;
      }
      const double latency = quantize_ms(std::max(0.0, answer->latency));
      advance_to(q.asked_at + latency);
      const std::string quoted = Json(answer->text).dump();
      if (!in.responses.empty()) {
        const auto* r = model::match_response(in, answer->text);
        if (!r) {
          const bool last = attempt == 1;
          record(LogKind::unparsed,
                 in.id + " answer=" + quoted + " latency=" + text::fixed(latency, 3) +
                     (last ? " abandoned" : " re-asking"),
                 "unparsed", {{"id", in.id}, {"answer", answer->text}});
          continue;
        }
        on_predefined(in, *r, quoted, latency);
        return true;
      }
      on_free_text(in, answer->text, quoted, latency);
      return true;
    }
    return false;
  }

  void on_predefined(const model::Interaction& in, const model::PredefinedResponse& r, const std::string& quoted,
                     double latency) {
    ++counters_.answered;
    model::FactRecord fact{r.label, r.polarity, std::nullopt, epoch_now()};
    std::optional<double> before;
    std::optional<double> after;
    if (in.variable) {
      const auto* def = model_->find_variable(*in.variable);
      if (!def) throw NotFound("interaction '" + in.id + "' names unknown variable '" + *in.variable + "'");
      model::UncertainVariable var = *def;
      before = state_.variables[*in.variable];
      var.current = before;
      after = model::map_response(var, r).current;
      state_.variables[*in.variable] = after;
      fact.value = after;
    }
    state_.facts[in.id] = fact;
    std::string payload = in.id + " answer=" + quoted + " latency=" + text::fixed(latency, 3);
    if (in.variable) payload += " " + *in.variable + "=" + session::value_text(after);
    Json ev{{"id", in.id}, {"label", r.label}, {"polarity", std::string(to_string(r.polarity))}};
    if (after) ev["value"] = *after;
    record(LogKind::response, payload, "response", ev);
    if (in.variable) {
      record(LogKind::variable_change, session::variable_change_line(*in.variable, before, after), "variable_change",
             {{"name", *in.variable},
              {"old", before ? Json(*before) : Json(nullptr)},
              {"new", after ? Json(*after) : Json(nullptr)}});
    }
    apply_effects(triggers::on_response(*model_, state_.triggers, state_.facts, in.id, r.polarity));
    if (auto reaction = model::reaction_for(in, r)) {
      advance_to(now_ + interval(timing::IntervalKind::pause_react));
      speak(in, "reaction", personalize(*reaction));
    }
  }

  void on_free_text(const model::Interaction& in, const std::string& answer, const std::string& quoted,
                    double latency) {
    ++counters_.answered;
    state_.facts[in.id] = model::FactRecord{std::string(text::trim(answer)), std::nullopt, std::nullopt, epoch_now()};
    record(LogKind::response, in.id + " answer=" + quoted + " latency=" + text::fixed(latency, 3), "response",
           {{"id", in.id}, {"text", answer}});
    apply_effects(triggers::on_response(*model_, state_.triggers, state_.facts, in.id, std::nullopt));
  }

  const model::AgentModel* model_;
  session::SessionState state_;
  EngineOptions opts_;
  scheduler::Scheduler scheduler_;
  scheduler::InteractionsQueue queue_;
  session::SessionLog log_;
  prob::RngStream content_;
  prob::RngStream timing_;
  prob::RngStream gates_;
  std::function<void(const EngineEvent&)> sink_;
  std::function<void(double)> pacer_;
  RunCounters counters_;
  double now_ = 0.0;
  double next_tick_ = 1.0;
  double next_smile_ = std::numeric_limits<double>::infinity();
  std::optional<double> gaze_away_;
  std::optional<double> gaze_return_;
  std::optional<Question> pending_;
  std::uint64_t question_seq_ = 0;
  bool ended_ = false;
};

}  // namespace korra::engine
