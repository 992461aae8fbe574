#pragma once

#include <algorithm>
#include <charconv>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "korra/bayes/bayes_net.hpp"
#include "korra/model/facts.hpp"
#include "korra/model/types.hpp"
#include "korra/triggers/definitions.hpp"
#include "korra/util/text.hpp"

namespace korra::triggers {

struct DistributionEdit {
  WeightEdit edit;
  friend bool operator==(const DistributionEdit&, const DistributionEdit&) = default;
};

struct ResampleRequest {
  friend bool operator==(const ResampleRequest&, const ResampleRequest&) = default;
};

struct InjectInteraction {
  model::Interaction interaction;
  friend bool operator==(const InjectInteraction&, const InjectInteraction&) = default;
};

struct FacialCue {
  std::string cue;
  friend bool operator==(const FacialCue&, const FacialCue&) = default;
};

/// What an update trigger may produce.
using MutEffect = std::variant<DistributionEdit, ResampleRequest>;
/// What an evaluate trigger may produce.
using MetEffect = std::variant<InjectInteraction, FacialCue>;

/// A fired trigger's consequence. Only the two factories construct one, so
/// an update trigger can never carry an injection and an evaluate trigger
/// can never request resampling.
class TriggerEffect {
 public:
  using Payload = std::variant<DistributionEdit, ResampleRequest, InjectInteraction, FacialCue>;

  static TriggerEffect from(const ModelUpdateTrigger& t, std::string cause, MutEffect e) {
    return TriggerEffect(t.id, std::move(cause), std::visit([](auto&& x) -> Payload { return x; }, std::move(e)));
  }
  static TriggerEffect from(const ModelEvaluateTrigger& t, std::string cause, MetEffect e) {
    return TriggerEffect(t.id, std::move(cause), std::visit([](auto&& x) -> Payload { return x; }, std::move(e)));
  }

  const std::string& trigger_id() const { return trigger_id_; }
  const std::string& cause() const { return cause_; }
  const Payload& payload() const { return payload_; }

  friend bool operator==(const TriggerEffect&, const TriggerEffect&) = default;

 private:
  TriggerEffect(std::string id, std::string cause, Payload p)
      : trigger_id_(std::move(id)), cause_(std::move(cause)), payload_(std::move(p)) {}

  std::string trigger_id_;
  std::string cause_;
  Payload payload_;
};

/// One-line description of an effect for logs.
inline std::string describe(const TriggerEffect::Payload& p) {
  if (const auto* d = std::get_if<DistributionEdit>(&p)) {
    return d->edit.category + (d->edit.op == EditOp::multiply ? " *= " : " = ") + text::significant(d->edit.value, 6);
  }
  if (std::holds_alternative<ResampleRequest>(p)) return "resample";
  if (const auto* i = std::get_if<InjectInteraction>(&p)) return "inject \"" + i->interaction.text + "\"";
  return "cue " + std::get<FacialCue>(p).cue;
}

/// Firing bookkeeping. Update triggers fire once per session when `once`
/// is set; evaluate triggers fire once per distinct observation set.
struct TriggerState {
  std::set<std::string> fired_updates;
  std::set<std::string> fired_evaluations;
  std::size_t injected = 0;

  friend bool operator==(const TriggerState&, const TriggerState&) = default;
};

/// Observations a MET can read off the answered facts. Facts without a
/// polarity, or with a non-numeric answer for a numeric cutoff, are skipped.
inline bayes::ObservationSet observations_for(const ModelEvaluateTrigger& t, const model::Facts& facts) {
  bayes::ObservationSet obs;
  for (const auto& b : t.observe) {
    auto it = facts.find(b.fact);
    if (it == facts.end()) continue;
    const auto& f = it->second;
    if (b.below) {
      const auto s = text::trim(f.answer);
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
      if (ec != std::errc{} || ptr != s.data() + s.size()) continue;
      obs[b.node] = x < *b.below;
    } else if (f.polarity) {
      obs[b.node] = *f.polarity == Polarity::positive;
    }
  }
  return obs;
}

inline std::string observation_key(const std::string& trigger_id, const bayes::ObservationSet& obs) {
  std::string key = trigger_id + "|";
  for (const auto& [n, v] : obs) key += n + (v ? "=1;" : "=0;");
  return key;
}

inline std::string describe(const bayes::ObservationSet& obs) {
  std::string out;
  for (const auto& [n, v] : obs) {
    if (!out.empty()) out += ", ";
    out += n + (v ? "=true" : "=false");
  }
  return out;
}

namespace detail {

inline void emit_update(const ModelUpdateTrigger& t, const std::string& cause, std::vector<TriggerEffect>& out) {
  for (const auto& e : t.edits) out.push_back(TriggerEffect::from(t, cause, DistributionEdit{e}));
  if (t.resample) out.push_back(TriggerEffect::from(t, cause, ResampleRequest{}));
}

}  // namespace detail

/// Effects of the user answering `fact_id`; the answer must already be in
/// `facts`. Update triggers watching the fact with the same polarity come
/// first, in model order, then evaluate triggers scoring all accumulated
/// observations.
inline std::vector<TriggerEffect> on_response(const model::AgentModel& m, TriggerState& state,
                                              const model::Facts& facts, const std::string& fact_id,
                                              std::optional<Polarity> polarity) {
  std::vector<TriggerEffect> out;
  for (const auto& t : m.update_triggers) {
    const auto* w = std::get_if<ResponseWatch>(&t.watch);
    if (!w || w->fact != fact_id || !polarity || w->polarity != *polarity) continue;
    if (t.once && state.fired_updates.contains(t.id)) continue;
    state.fired_updates.insert(t.id);
    detail::emit_update(t, "response " + fact_id + " " + std::string(to_string(*polarity)), out);
  }
  for (const auto& t : m.evaluate_triggers) {
    const auto* net = m.find_net(t.net);
    if (!net) continue;
    const auto obs = observations_for(t, facts);
    if (obs.empty()) continue;
    const double score = bayes::contradiction_score(*net, obs);
    if (!(score > t.threshold)) continue;
    if (!state.fired_evaluations.insert(observation_key(t.id, obs)).second) continue;
    model::Interaction in;
    in.id = t.id + "#" + std::to_string(++state.injected);
    in.category = t.inject.category;
    in.kind = model::InteractionKind::state_expression;
    in.text = t.inject.text;
    in.repeatable = true;
    const std::string cause = "contradiction " + text::fixed(score, 4) + " > " + text::significant(t.threshold, 6) +
                              " on " + describe(obs);
    out.push_back(TriggerEffect::from(t, cause, InjectInteraction{std::move(in)}));
    out.push_back(TriggerEffect::from(t, cause, FacialCue{"surprise"}));
  }
  return out;
}

/// Effects of the clock reaching `now` seconds since session start. Each
/// elapsed-time trigger fires once per session, in order of its threshold.
inline std::vector<TriggerEffect> on_tick(const model::AgentModel& m, TriggerState& state, double now) {
  std::vector<const ModelUpdateTrigger*> due;
  for (const auto& t : m.update_triggers) {
    const auto* w = std::get_if<ElapsedWatch>(&t.watch);
    if (w && w->seconds <= now && !state.fired_updates.contains(t.id)) due.push_back(&t);
  }
  std::stable_sort(due.begin(), due.end(), [](const auto* a, const auto* b) {
    return std::get<ElapsedWatch>(a->watch).seconds < std::get<ElapsedWatch>(b->watch).seconds;
  });
  std::vector<TriggerEffect> out;
  for (const auto* t : due) {
    state.fired_updates.insert(t->id);
    detail::emit_update(*t, "elapsed " + text::significant(std::get<ElapsedWatch>(t->watch).seconds, 6) + " s", out);
  }
  return out;
}

}  // namespace korra::triggers
