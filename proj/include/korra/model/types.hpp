#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "korra/bayes/bayes_net.hpp"
#include "korra/error.hpp"
#include "korra/polarity.hpp"
#include "korra/timing/params.hpp"
#include "korra/triggers/definitions.hpp"

namespace korra::model {

enum class InteractionKind {
  pure_fact_about_user,
  pure_fact_about_agent,
  uncertain_fact_question,
  statement,
  suggestion,
  joke,
  appearance_change,
  state_expression,
  placeholder,
};

enum class UpdateStrategy { fixed_values, increment };

enum class Selection { permutation_then_uniform, uniform_no_immediate_repeat };

/// Which state band a state-expression variant is meant for.
enum class StateBand { high, low, neutral };

/// A predefined answer button. Exactly one of `value` (fixed_values
/// variables) or `delta` (increment variables) is set when the asking
/// interaction updates a variable; plain PureFact answers carry neither.
struct PredefinedResponse {
  std::string label;
  std::optional<double> value;
  std::optional<double> delta;
  Polarity polarity = Polarity::positive;

  friend bool operator==(const PredefinedResponse&, const PredefinedResponse&) = default;
};

struct Reactions {
  std::string positive;
  std::string negative;

  friend bool operator==(const Reactions&, const Reactions&) = default;
};

struct Variant {
  std::string text;
  double weight = 1.0;

  friend bool operator==(const Variant&, const Variant&) = default;
};

struct Interaction {
  std::string id;
  std::string category;
  InteractionKind kind = InteractionKind::statement;
  /// Utterance template; may hold SSML tags and the {user} name slot.
  std::string text;
  /// Alternative phrasings; when non-empty one is drawn per execution.
  std::vector<Variant> variants;
  std::vector<PredefinedResponse> responses;
  std::optional<Reactions> reactions;
  bool repeatable = false;
  /// Uncertain variable updated by the responses.
  std::optional<std::string> variable;
  /// State band, for state_expression interactions filling a placeholder.
  std::optional<StateBand> state;
  /// Relative weight in the uniform selection phase.
  double weight = 1.0;
  /// Accepts any typed answer (names, ages) instead of predefined buttons.
  bool free_text = false;
  /// Answers an emulated user may type for free-text questions.
  std::vector<std::string> sample_answers;

  bool expects_answer() const { return free_text || !responses.empty(); }

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

struct UncertainVariable {
  std::string name;
  UpdateStrategy strategy = UpdateStrategy::fixed_values;
  /// Value before the user is ever asked; absent means unknown.
  std::optional<double> initial;
  /// Current value, always within [0,1] when present.
  std::optional<double> current;

  friend bool operator==(const UncertainVariable&, const UncertainVariable&) = default;
};

struct Category {
  std::string name;
  double base_weight = 0.0;
  bool fixed = false;
  Selection selection = Selection::permutation_then_uniform;
  /// When set, the category is state dependent: the queue holds a
  /// placeholder that is resolved from this variable right before execution.
  std::optional<std::string> placeholder_variable;
  double placeholder_threshold = 0.5;
  /// Interaction ids in model-file order. Filled by the loader.
  std::vector<std::string> interactions;

  friend bool operator==(const Category&, const Category&) = default;
};

struct NamedNet {
  std::string name;
  bayes::BayesNet net;

  friend bool operator==(const NamedNet& a, const NamedNet& b) {
    if (a.name != b.name || a.net.size() != b.net.size()) return false;
    for (std::size_t i = 0; i < a.net.size(); ++i) {
      const auto& x = a.net.nodes()[i];
      const auto& y = b.net.nodes()[i];
      if (x.name != y.name || x.parents != y.parents || x.cpt != y.cpt) return false;
    }
    return true;
  }
};

struct TuningRules {
  /// Interactions prepended to the first queue of a session (greeting).
  std::vector<std::string> prepend_at_start;
  /// Id groups kept contiguous in every generated queue.
  std::vector<std::vector<std::string>> group;

  friend bool operator==(const TuningRules&, const TuningRules&) = default;
};

/// Engine loop knobs that are not distributions.
struct EngineParams {
  std::size_t low_water = 3;
  std::size_t batch = 9;
  std::size_t max_queue = 32;
  /// Forgetfulness / reuse time constant, seconds.
  double reuse_tau_s = 86400.0;
  double words_per_second = 2.5;
  /// Duration estimate for categories with no recorded executions.
  double default_duration_s = 5.0;
  /// How long the gaze stays away before returning to the user.
  double gaze_return_s = 1.5;
  /// Latency range of emulated users, seconds.
  double user_latency_min_s = 0.5;
  double user_latency_max_s = 4.0;

  friend bool operator==(const EngineParams&, const EngineParams&) = default;
};

struct AgentModel {
  std::string name = "agent";
  std::vector<Category> categories;
  std::vector<Interaction> interactions;
  std::vector<UncertainVariable> variables;
  std::vector<NamedNet> nets;
  std::vector<triggers::ModelUpdateTrigger> update_triggers;
  std::vector<triggers::ModelEvaluateTrigger> evaluate_triggers;
  timing::TimingParams timing;
  timing::GateParams gates;
  TuningRules tuning;
  EngineParams engine;
  /// Interaction whose free-text answer is the user's name.
  std::optional<std::string> user_name_fact;
  std::vector<std::string> joke_clarifications{"OK, you know, that was a joke."};
  /// Target share of session time per category, used for weight suggestions.
  std::map<std::string, double> desired_time_share;

  const Interaction& interaction(const std::string& id) const {
    if (auto* i = find_interaction(id)) return *i;
    throw NotFound("no interaction with id '" + id + "'");
  }

  const Interaction* find_interaction(const std::string& id) const {
    if (interaction_index_.size() == interactions.size()) {
      auto it = interaction_index_.find(id);
      return it == interaction_index_.end() ? nullptr : &interactions[it->second];
    }
    for (const auto& i : interactions) {
      if (i.id == id) return &i;
    }
    return nullptr;
  }

  const Category& category(const std::string& name) const {
    if (auto* c = find_category(name)) return *c;
    throw NotFound("no category named '" + name + "'");
  }

  const Category* find_category(const std::string& name) const {
    for (const auto& c : categories) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  const UncertainVariable* find_variable(const std::string& name) const {
    for (const auto& v : variables) {
      if (v.name == name) return &v;
    }
    return nullptr;
  }

  const bayes::BayesNet* find_net(const std::string& name) const {
    for (const auto& n : nets) {
      if (n.name == name) return &n.net;
    }
    return nullptr;
  }

  /// Rebuilds lookup tables and each category's interaction list.
  void reindex() {
    interaction_index_.clear();
    for (std::size_t i = 0; i < interactions.size(); ++i) interaction_index_.emplace(interactions[i].id, i);
    for (auto& c : categories) c.interactions.clear();
    for (const auto& i : interactions) {
      for (auto& c : categories) {
        if (c.name == i.category) c.interactions.push_back(i.id);
      }
    }
  }

  friend bool operator==(const AgentModel& a, const AgentModel& b) {
    return a.name == b.name && a.categories == b.categories && a.interactions == b.interactions &&
           a.variables == b.variables && a.nets == b.nets && a.update_triggers == b.update_triggers &&
           a.evaluate_triggers == b.evaluate_triggers && a.timing == b.timing && a.gates == b.gates &&
           a.tuning == b.tuning && a.engine == b.engine && a.user_name_fact == b.user_name_fact &&
           a.joke_clarifications == b.joke_clarifications && a.desired_time_share == b.desired_time_share;
  }

 private:
  std::unordered_map<std::string, std::size_t> interaction_index_;
};

}  // namespace korra::model
