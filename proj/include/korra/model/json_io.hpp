#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "korra/model/types.hpp"
#include "korra/util/text.hpp"

namespace korra::model {

using Json = nlohmann::json;

namespace detail {

template <class E>
struct EnumNames;

template <>
struct EnumNames<InteractionKind> {
  static constexpr std::pair<InteractionKind, std::string_view> table[] = {
      {InteractionKind::pure_fact_about_user, "pure_fact_about_user"},
      {InteractionKind::pure_fact_about_agent, "pure_fact_about_agent"},
      {InteractionKind::uncertain_fact_question, "uncertain_fact_question"},
      {InteractionKind::statement, "statement"},
      {InteractionKind::suggestion, "suggestion"},
      {InteractionKind::joke, "joke"},
      {InteractionKind::appearance_change, "appearance_change"},
      {InteractionKind::state_expression, "state_expression"},
      {InteractionKind::placeholder, "placeholder"},
  };
};

template <>
struct EnumNames<UpdateStrategy> {
  static constexpr std::pair<UpdateStrategy, std::string_view> table[] = {
      {UpdateStrategy::fixed_values, "fixed_values"},
      {UpdateStrategy::increment, "increment"},
  };
};

template <>
struct EnumNames<Selection> {
  static constexpr std::pair<Selection, std::string_view> table[] = {
      {Selection::permutation_then_uniform, "permutation_then_uniform"},
      {Selection::uniform_no_immediate_repeat, "uniform_no_immediate_repeat"},
  };
};

template <>
struct EnumNames<StateBand> {
  static constexpr std::pair<StateBand, std::string_view> table[] = {
      {StateBand::high, "high"},
      {StateBand::low, "low"},
      {StateBand::neutral, "neutral"},
  };
};

template <>
struct EnumNames<Polarity> {
  static constexpr std::pair<Polarity, std::string_view> table[] = {
      {Polarity::positive, "positive"},
      {Polarity::negative, "negative"},
  };
};

template <class E>
std::string_view enum_name(E e) {
  for (const auto& [v, n] : EnumNames<E>::table) {
    if (v == e) return n;
  }
  return "?";
}

/// Walks one JSON object, tracking the field path for error messages and
/// rejecting keys that were never read.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw ModelError(path + ": " + what);
  }

  std::string field(std::string_view key) const { return path_ + "." + std::string(key); }

  bool has(std::string_view key) {
    seen_.insert(std::string(key));
    return j_.contains(key);
  }

  const Json& raw(std::string_view key) {
    if (!has(key)) fail(field(key), "required field missing");
    return j_.at(key);
  }

  std::string string(std::string_view key) {
    const auto& v = raw(key);
    if (!v.is_string()) fail(field(key), "expected a string");
    return v.get<std::string>();
  }

  std::string string_or(std::string_view key, std::string fallback) {
    return has(key) ? string(key) : fallback;
  }

  std::optional<std::string> optional_string(std::string_view key) {
    if (!has(key) || j_.at(key).is_null()) return std::nullopt;
    return string(key);
  }

  double number(std::string_view key) {
    const auto& v = raw(key);
    if (!v.is_number()) fail(field(key), "expected a number");
    return v.get<double>();
  }

  double number_or(std::string_view key, double fallback) { return has(key) ? number(key) : fallback; }

  std::optional<double> optional_number(std::string_view key) {
    if (!has(key) || j_.at(key).is_null()) return std::nullopt;
    return number(key);
  }

  std::size_t count_or(std::string_view key, std::size_t fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      fail(field(key), "expected a non-negative integer");
    }
    return v.get<std::size_t>();
  }

  bool boolean_or(std::string_view key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) fail(field(key), "expected true or false");
    return v.get<bool>();
  }

  template <class E>
  E enumeration(std::string_view key) {
    const std::string s = string(key);
    for (const auto& [v, n] : EnumNames<E>::table) {
      if (n == s) return v;
    }
    fail(field(key), "unknown value '" + s + "'");
  }

  template <class E>
  E enumeration_or(std::string_view key, E fallback) {
    return has(key) ? enumeration<E>(key) : fallback;
  }

  const Json& array(std::string_view key) {
    const auto& v = raw(key);
    if (!v.is_array()) fail(field(key), "expected an array");
    return v;
  }

  const Json* optional_array(std::string_view key) {
    if (!has(key)) return nullptr;
    return &array(key);
  }

  std::vector<std::string> strings_or_empty(std::string_view key) {
    std::vector<std::string> out;
    if (!has(key)) return out;
    const auto& v = array(key);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) fail(field(key) + "[" + std::to_string(i) + "]", "expected a string");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

  /// Rejects fields that were not consumed.
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.contains(k)) fail(field(k), "unknown field");
    }
  }

  const std::string& path() const { return path_; }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

inline timing::NormalParams read_normal(ObjectReader& parent, std::string_view key, timing::NormalParams fallback) {
  if (!parent.has(key)) return fallback;
  ObjectReader r(parent.raw(key), parent.field(key));
  timing::NormalParams p{r.number("mean"), r.number("variance")};
  r.finish();
  return p;
}

inline PredefinedResponse read_response(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  PredefinedResponse resp;
  resp.label = r.string("label");
  resp.value = r.optional_number("value");
  resp.delta = r.optional_number("delta");
  resp.polarity = r.enumeration_or("polarity", Polarity::positive);
  r.finish();
  return resp;
}

inline Interaction read_interaction(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  Interaction in;
  in.id = r.string("id");
  in.category = r.string("category");
  in.kind = r.enumeration<InteractionKind>("kind");
  in.text = r.string_or("text", "");
  if (const auto* vs = r.optional_array("variants")) {
    for (std::size_t i = 0; i < vs->size(); ++i) {
      const auto vpath = index_path(r.field("variants"), i);
      if ((*vs)[i].is_string()) {
        in.variants.push_back({(*vs)[i].get<std::string>(), 1.0});
        continue;
      }
      ObjectReader vr((*vs)[i], vpath);
      Variant v{vr.string("text"), vr.number_or("weight", 1.0)};
      vr.finish();
      in.variants.push_back(std::move(v));
    }
  }
  if (const auto* rs = r.optional_array("responses")) {
    for (std::size_t i = 0; i < rs->size(); ++i) {
      in.responses.push_back(read_response((*rs)[i], index_path(r.field("responses"), i)));
    }
  }
  if (r.has("reactions")) {
    ObjectReader rr(r.raw("reactions"), r.field("reactions"));
    Reactions re;
    re.positive = rr.string("positive");
    re.negative = rr.string("negative");
    rr.finish();
    in.reactions = std::move(re);
  }
  const bool default_repeatable = in.kind == InteractionKind::uncertain_fact_question ||
                                  in.kind == InteractionKind::state_expression ||
                                  in.kind == InteractionKind::appearance_change;
  in.repeatable = r.boolean_or("repeatable", default_repeatable);
  in.variable = r.optional_string("variable");
  if (r.has("state")) in.state = r.enumeration<StateBand>("state");
  in.weight = r.number_or("weight", 1.0);
  const bool default_free_text = in.kind == InteractionKind::pure_fact_about_user && in.responses.empty();
  in.free_text = r.boolean_or("free_text", default_free_text);
  in.sample_answers = r.strings_or_empty("sample_answers");
  r.finish();
  return in;
}

inline std::string cpt_key(std::size_t row, std::size_t parents) {
  std::string key;
  for (std::size_t i = 0; i < parents; ++i) key.push_back(((row >> (parents - 1 - i)) & 1u) ? 'T' : 'F');
  return key;
}

inline NamedNet read_net(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  NamedNet named;
  named.name = r.string("name");
  std::vector<bayes::BinaryNode> nodes;
  const auto& ns = r.array("nodes");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const auto npath = index_path(r.field("nodes"), i);
    ObjectReader nr(ns[i], npath);
    bayes::BinaryNode node;
    node.name = nr.string("name");
    node.parents = nr.strings_or_empty("parents");
    const std::size_t rows = std::size_t{1} << node.parents.size();
    const auto& cpt = nr.raw("cpt");
    if (cpt.is_number()) {
      node.cpt = {cpt.get<double>()};
    } else if (cpt.is_array()) {
      for (const auto& v : cpt) {
        if (!v.is_number()) ObjectReader::fail(nr.field("cpt"), "expected numbers");
        node.cpt.push_back(v.get<double>());
      }
    } else if (cpt.is_object()) {
      node.cpt.assign(rows, -1.0);
      for (const auto& [k, v] : cpt.items()) {
        if (!v.is_number()) ObjectReader::fail(nr.field("cpt") + "." + k, "expected a number");
        bool matched = false;
        for (std::size_t row = 0; row < rows; ++row) {
          if (cpt_key(row, node.parents.size()) == k) {
            node.cpt[row] = v.get<double>();
            matched = true;
          }
        }
        if (!matched) ObjectReader::fail(nr.field("cpt") + "." + k, "row key does not match the parent list");
      }
      for (std::size_t row = 0; row < rows; ++row) {
        if (node.cpt[row] < 0.0) {
          ObjectReader::fail(nr.field("cpt"), "missing row '" + cpt_key(row, node.parents.size()) + "'");
        }
      }
    } else {
      ObjectReader::fail(nr.field("cpt"), "expected a number, array or object");
    }
    nr.finish();
    nodes.push_back(std::move(node));
  }
  r.finish();
  try {
    named.net = bayes::BayesNet(std::move(nodes));
  } catch (const ModelError& e) {
    ObjectReader::fail(path, e.what());
  }
  return named;
}

inline void read_trigger(const Json& j, const std::string& path, AgentModel& m) {
  ObjectReader r(j, path);
  const std::string id = r.string("id");
  const std::string type = r.string("type");
  if (type == "update") {
    // Capability matrix: update triggers never add interactions.
    if (r.has("inject")) ObjectReader::fail(r.field("inject"), "update triggers cannot add interactions");
    triggers::ModelUpdateTrigger t;
    t.id = id;
    ObjectReader w(r.raw("watch"), r.field("watch"));
    if (w.has("elapsed_s")) {
      t.watch = triggers::ElapsedWatch{w.number("elapsed_s")};
    } else {
      t.watch = triggers::ResponseWatch{w.string("fact"), w.enumeration_or("polarity", Polarity::positive)};
    }
    w.finish();
    const auto& effects = r.array("effects");
    for (std::size_t i = 0; i < effects.size(); ++i) {
      ObjectReader er(effects[i], index_path(r.field("effects"), i));
      triggers::WeightEdit e;
      e.category = er.string("category");
      const bool mul = er.has("multiply");
      const bool set = er.has("set");
      if (mul == set) ObjectReader::fail(er.path(), "exactly one of 'multiply' or 'set' is required");
      e.op = mul ? triggers::EditOp::multiply : triggers::EditOp::set;
      e.value = er.number(mul ? "multiply" : "set");
      er.finish();
      t.edits.push_back(std::move(e));
    }
    t.resample = r.boolean_or("resample", true);
    t.once = r.boolean_or("once", true);
    r.finish();
    m.update_triggers.push_back(std::move(t));
  } else if (type == "evaluate") {
    // Capability matrix: evaluate triggers never resample and never watch time.
    if (r.has("resample")) ObjectReader::fail(r.field("resample"), "evaluate triggers cannot request resampling");
    if (r.has("watch")) ObjectReader::fail(r.field("watch"), "evaluate triggers cannot track elapsed time");
    if (r.has("effects")) ObjectReader::fail(r.field("effects"), "evaluate triggers cannot edit the Main Distribution");
    triggers::ModelEvaluateTrigger t;
    t.id = id;
    t.net = r.string("net");
    t.threshold = r.number_or("threshold", 0.85);
    const auto& obs = r.array("observe");
    for (std::size_t i = 0; i < obs.size(); ++i) {
      ObjectReader orr(obs[i], index_path(r.field("observe"), i));
      triggers::ObservationBinding b;
      b.fact = orr.string("fact");
      b.node = orr.string("node");
      b.below = orr.optional_number("below");
      orr.finish();
      t.observe.push_back(std::move(b));
    }
    ObjectReader ir(r.raw("inject"), r.field("inject"));
    t.inject.category = ir.string("category");
    t.inject.text = ir.string("text");
    ir.finish();
    r.finish();
    m.evaluate_triggers.push_back(std::move(t));
  } else {
    ObjectReader::fail(r.field("type"), "expected 'update' or 'evaluate'");
  }
}

}  // namespace detail

/// Checks cross-references and invariants. Collects every violation into one
/// ModelError, each prefixed with its field path.
inline void validate(const AgentModel& m) {
  std::vector<std::string> problems;
  auto problem = [&](std::string path, std::string what) { problems.push_back(path + ": " + what); };

  if (m.categories.empty()) problem("categories", "at least one category is required");
  if (m.interactions.empty()) problem("interactions", "at least one interaction is required");

  std::set<std::string> category_names;
  double weight_sum = 0.0;
  for (std::size_t i = 0; i < m.categories.size(); ++i) {
    const auto& c = m.categories[i];
    const auto path = detail::index_path("categories", i);
    if (!category_names.insert(c.name).second) problem(path + ".name", "duplicate category '" + c.name + "'");
    if (!(c.base_weight >= 0.0 && c.base_weight <= 1.0)) problem(path + ".base_weight", "must lie in [0,1]");
    weight_sum += c.base_weight;
    if (c.placeholder_variable && !m.find_variable(*c.placeholder_variable)) {
      problem(path + ".placeholder_variable", "unknown variable '" + *c.placeholder_variable + "'");
    }
    if (c.placeholder_variable) {
      bool neutral = false;
      for (const auto& in : m.interactions) {
        neutral |= in.category == c.name && in.kind == InteractionKind::state_expression &&
                   (!in.state || *in.state == StateBand::neutral);
      }
      if (!neutral) problem(path, "state-dependent category needs a neutral state_expression fallback");
    }
  }
  if (!m.categories.empty() && std::fabs(weight_sum - 1.0) > 1e-9) {
    problem("categories", "base_weight values sum to " + text::significant(weight_sum, 12) + ", expected 1");
  }

  std::set<std::string> ids;
  for (std::size_t i = 0; i < m.interactions.size(); ++i) {
    const auto& in = m.interactions[i];
    const auto path = detail::index_path("interactions", i);
    if (in.id.empty()) problem(path + ".id", "must not be empty");
    if (!ids.insert(in.id).second) problem(path + ".id", "duplicate interaction id '" + in.id + "'");
    if (!category_names.contains(in.category)) problem(path + ".category", "unknown category '" + in.category + "'");
    if (in.kind == InteractionKind::placeholder && (!in.text.empty() || !in.variants.empty())) {
      problem(path + ".text", "placeholder interactions carry no text");
    }
    if (in.kind != InteractionKind::placeholder && in.text.empty() && in.variants.empty()) {
      problem(path + ".text", "text or variants required");
    }
    if (!(in.weight > 0.0)) problem(path + ".weight", "must be positive");
    const UncertainVariable* var = nullptr;
    if (in.variable) {
      var = m.find_variable(*in.variable);
      if (!var) problem(path + ".variable", "unknown variable '" + *in.variable + "'");
    }
    if (in.kind == InteractionKind::uncertain_fact_question) {
      if (in.responses.size() < 2) problem(path + ".responses", "uncertain fact questions need at least 2 responses");
      if (!in.variable) problem(path + ".variable", "uncertain fact questions must name a variable");
    }
    for (std::size_t k = 0; k < in.responses.size(); ++k) {
      const auto& r = in.responses[k];
      const auto rpath = detail::index_path(path + ".responses", k);
      if (r.value && r.delta) problem(rpath, "'value' and 'delta' are mutually exclusive");
      if (r.value && !(*r.value >= 0.0 && *r.value <= 1.0)) problem(rpath + ".value", "must lie in [0,1]");
      if (var) {
        if (var->strategy == UpdateStrategy::fixed_values && !r.value) {
          problem(rpath, "variable '" + var->name + "' uses fixed_values; 'value' required");
        }
        if (var->strategy == UpdateStrategy::increment && !r.delta) {
          problem(rpath, "variable '" + var->name + "' uses increment; 'delta' required");
        }
      }
    }
    for (std::size_t k = 0; k < in.variants.size(); ++k) {
      if (!(in.variants[k].weight > 0.0)) problem(detail::index_path(path + ".variants", k) + ".weight", "must be positive");
    }
  }

  for (std::size_t i = 0; i < m.variables.size(); ++i) {
    const auto& v = m.variables[i];
    const auto path = detail::index_path("variables", i);
    if (v.initial && !(*v.initial >= 0.0 && *v.initial <= 1.0)) problem(path + ".initial", "must lie in [0,1]");
  }

  std::set<std::string> trigger_ids;
  for (std::size_t i = 0; i < m.update_triggers.size(); ++i) {
    const auto& t = m.update_triggers[i];
    const auto path = "triggers[" + t.id + "]";
    if (!trigger_ids.insert(t.id).second) problem(path, "duplicate trigger id");
    if (const auto* w = std::get_if<triggers::ResponseWatch>(&t.watch)) {
      if (!ids.contains(w->fact)) problem(path + ".watch.fact", "unknown interaction '" + w->fact + "'");
    } else if (std::get<triggers::ElapsedWatch>(t.watch).seconds < 0.0) {
      problem(path + ".watch.elapsed_s", "must be non-negative");
    }
    for (const auto& e : t.edits) {
      if (!category_names.contains(e.category)) problem(path + ".effects", "unknown category '" + e.category + "'");
      if (e.op == triggers::EditOp::multiply && !(e.value > 0.0)) problem(path + ".effects", "factors must be positive");
      if (e.op == triggers::EditOp::set && !(e.value >= 0.0 && e.value <= 1.0)) {
        problem(path + ".effects", "set-to values must lie in [0,1]");
      }
    }
  }
  for (const auto& t : m.evaluate_triggers) {
    const auto path = "triggers[" + t.id + "]";
    if (!trigger_ids.insert(t.id).second) problem(path, "duplicate trigger id");
    const auto* net = m.find_net(t.net);
    if (!net) problem(path + ".net", "unknown net '" + t.net + "'");
    if (!(t.threshold >= 0.0 && t.threshold <= 1.0)) problem(path + ".threshold", "must lie in [0,1]");
    for (const auto& b : t.observe) {
      if (!ids.contains(b.fact)) problem(path + ".observe", "unknown interaction '" + b.fact + "'");
      if (net && !net->contains(b.node)) problem(path + ".observe", "unknown node '" + b.node + "'");
    }
    if (!category_names.contains(t.inject.category)) {
      problem(path + ".inject.category", "unknown category '" + t.inject.category + "'");
    }
    if (t.inject.text.empty()) problem(path + ".inject.text", "must not be empty");
  }

  for (const auto& id : m.tuning.prepend_at_start) {
    if (!ids.contains(id)) problem("tuning.prepend_at_start", "unknown interaction '" + id + "'");
  }
  for (const auto& g : m.tuning.group) {
    for (const auto& id : g) {
      if (!ids.contains(id)) problem("tuning.group", "unknown interaction '" + id + "'");
    }
  }
  if (m.user_name_fact && !ids.contains(*m.user_name_fact)) {
    problem("user_name_fact", "unknown interaction '" + *m.user_name_fact + "'");
  }
  for (const auto& [name, share] : m.desired_time_share) {
    if (!category_names.contains(name)) problem("desired_time_share." + name, "unknown category");
    if (!(share >= 0.0 && share <= 1.0)) problem("desired_time_share." + name, "must lie in [0,1]");
  }
  const auto& tp = m.timing;
  for (auto kind : {timing::IntervalKind::smile, timing::IntervalKind::gaze_hold, timing::IntervalKind::pause_new,
                    timing::IntervalKind::pause_react, timing::IntervalKind::response_timeout}) {
    if (!(tp[kind].mean > 0.0)) problem("timing", "means must be positive");
    if (!(tp[kind].variance >= 0.0)) problem("timing", "variances must be non-negative");
  }
  if (!(tp.pause_react.mean > tp.pause_new.mean)) problem("timing.pause_react", "mean must exceed pause_new mean");
  if (!(tp.floor >= 0.0)) problem("timing.floor", "must be non-negative");
  if (!(m.gates.address_by_name_p >= 0.0 && m.gates.address_by_name_p <= 1.0)) problem("gates.address_by_name_p", "must lie in [0,1]");
  if (!(m.gates.joke_clarify_p >= 0.0 && m.gates.joke_clarify_p <= 1.0)) problem("gates.joke_clarify_p", "must lie in [0,1]");
  if (m.engine.batch == 0) problem("engine.batch", "must be positive");
  if (m.engine.max_queue < m.engine.batch + m.engine.low_water) problem("engine.max_queue", "must be at least batch + low_water");
  if (!(m.engine.reuse_tau_s > 0.0)) problem("engine.reuse_tau_s", "must be positive");
  if (!(m.engine.words_per_second > 0.0)) problem("engine.words_per_second", "must be positive");

  if (!problems.empty()) {
    std::string msg = "invalid model: ";
    for (std::size_t i = 0; i < problems.size(); ++i) msg += (i ? "; " : "") + problems[i];
    throw ModelError(msg);
  }
}

/// Parses and validates a model document.
inline AgentModel load_model(const Json& doc) {
  using detail::ObjectReader;
  ObjectReader r(doc, "model");
  AgentModel m;
  m.name = r.string_or("name", "agent");

  const auto& cats = r.array("categories");
  for (std::size_t i = 0; i < cats.size(); ++i) {
    ObjectReader cr(cats[i], detail::index_path("categories", i));
    Category c;
    c.name = cr.string("name");
    c.base_weight = cr.number("base_weight");
    c.fixed = cr.boolean_or("fixed", false);
    c.selection = cr.enumeration_or("selection", Selection::permutation_then_uniform);
    c.placeholder_variable = cr.optional_string("placeholder_variable");
    c.placeholder_threshold = cr.number_or("placeholder_threshold", 0.5);
    cr.finish();
    m.categories.push_back(std::move(c));
  }
  const auto& ins = r.array("interactions");
  for (std::size_t i = 0; i < ins.size(); ++i) {
    m.interactions.push_back(detail::read_interaction(ins[i], detail::index_path("interactions", i)));
  }
  if (const auto* vars = r.optional_array("variables")) {
    for (std::size_t i = 0; i < vars->size(); ++i) {
      ObjectReader vr((*vars)[i], detail::index_path("variables", i));
      UncertainVariable v;
      v.name = vr.string("name");
      v.strategy = vr.enumeration_or("strategy", UpdateStrategy::fixed_values);
      v.initial = vr.optional_number("initial");
      v.current = v.initial;
      vr.finish();
      m.variables.push_back(std::move(v));
    }
  }
  if (const auto* nets = r.optional_array("nets")) {
    for (std::size_t i = 0; i < nets->size(); ++i) m.nets.push_back(detail::read_net((*nets)[i], detail::index_path("nets", i)));
  }
  if (const auto* trs = r.optional_array("triggers")) {
    for (std::size_t i = 0; i < trs->size(); ++i) detail::read_trigger((*trs)[i], detail::index_path("triggers", i), m);
  }
  if (r.has("timing")) {
    ObjectReader tr(r.raw("timing"), "timing");
    auto& t = m.timing;
    t.smile = detail::read_normal(tr, "smile", t.smile);
    t.gaze_hold = detail::read_normal(tr, "gaze_hold", t.gaze_hold);
    t.pause_new = detail::read_normal(tr, "pause_new", t.pause_new);
    t.pause_react = detail::read_normal(tr, "pause_react", t.pause_react);
    t.response_timeout = detail::read_normal(tr, "response_timeout", t.response_timeout);
    t.floor = tr.number_or("floor", t.floor);
    tr.finish();
  }
  if (r.has("gates")) {
    ObjectReader gr(r.raw("gates"), "gates");
    m.gates.address_by_name_p = gr.number_or("address_by_name_p", m.gates.address_by_name_p);
    m.gates.joke_clarify_p = gr.number_or("joke_clarify_p", m.gates.joke_clarify_p);
    gr.finish();
  }
  if (r.has("tuning")) {
    ObjectReader tr(r.raw("tuning"), "tuning");
    m.tuning.prepend_at_start = tr.strings_or_empty("prepend_at_start");
    if (const auto* groups = tr.optional_array("group")) {
      for (std::size_t i = 0; i < groups->size(); ++i) {
        const auto& g = (*groups)[i];
        if (!g.is_array()) ObjectReader::fail(detail::index_path("tuning.group", i), "expected an array of ids");
        std::vector<std::string> ids;
        for (const auto& id : g) {
          if (!id.is_string()) ObjectReader::fail(detail::index_path("tuning.group", i), "expected strings");
          ids.push_back(id.get<std::string>());
        }
        m.tuning.group.push_back(std::move(ids));
      }
    }
    tr.finish();
  }
  if (r.has("engine")) {
    ObjectReader er(r.raw("engine"), "engine");
    auto& e = m.engine;
    e.low_water = er.count_or("low_water", e.low_water);
    e.batch = er.count_or("batch", e.batch);
    e.max_queue = er.count_or("max_queue", e.max_queue);
    e.reuse_tau_s = er.number_or("reuse_tau_s", e.reuse_tau_s);
    e.words_per_second = er.number_or("words_per_second", e.words_per_second);
    e.default_duration_s = er.number_or("default_duration_s", e.default_duration_s);
    e.gaze_return_s = er.number_or("gaze_return_s", e.gaze_return_s);
    e.user_latency_min_s = er.number_or("user_latency_min_s", e.user_latency_min_s);
    e.user_latency_max_s = er.number_or("user_latency_max_s", e.user_latency_max_s);
    er.finish();
  }
  m.user_name_fact = r.optional_string("user_name_fact");
  if (r.has("joke_clarifications")) m.joke_clarifications = r.strings_or_empty("joke_clarifications");
  if (r.has("desired_time_share")) {
    ObjectReader sr(r.raw("desired_time_share"), "desired_time_share");
    for (const auto& [k, v] : r.raw("desired_time_share").items()) m.desired_time_share[k] = sr.number(k);
    sr.finish();
  }
  r.finish();

  m.reindex();
  validate(m);
  return m;
}

inline AgentModel load_model_text(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ModelError(std::string("model: not valid JSON: ") + e.what());
  }
  return load_model(doc);
}

inline AgentModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("model: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return load_model_text(ss.str());
}

/// Inverse of load_model: every field is written explicitly.
inline Json to_json(const AgentModel& m) {
  using detail::enum_name;
  Json doc;
  doc["name"] = m.name;
  doc["categories"] = Json::array();
  for (const auto& c : m.categories) {
    Json j{{"name", c.name},
           {"base_weight", c.base_weight},
           {"fixed", c.fixed},
           {"selection", enum_name(c.selection)},
           {"placeholder_threshold", c.placeholder_threshold}};
    if (c.placeholder_variable) j["placeholder_variable"] = *c.placeholder_variable;
    doc["categories"].push_back(std::move(j));
  }
  doc["interactions"] = Json::array();
  for (const auto& in : m.interactions) {
    Json j{{"id", in.id},
           {"category", in.category},
           {"kind", enum_name(in.kind)},
           {"text", in.text},
           {"repeatable", in.repeatable},
           {"weight", in.weight},
           {"free_text", in.free_text}};
    if (!in.variants.empty()) {
      j["variants"] = Json::array();
      for (const auto& v : in.variants) j["variants"].push_back({{"text", v.text}, {"weight", v.weight}});
    }
    if (!in.responses.empty()) {
      j["responses"] = Json::array();
      for (const auto& r : in.responses) {
        Json rj{{"label", r.label}, {"polarity", enum_name(r.polarity)}};
        if (r.value) rj["value"] = *r.value;
        if (r.delta) rj["delta"] = *r.delta;
        j["responses"].push_back(std::move(rj));
      }
    }
    if (in.reactions) j["reactions"] = {{"positive", in.reactions->positive}, {"negative", in.reactions->negative}};
    if (in.variable) j["variable"] = *in.variable;
    if (in.state) j["state"] = enum_name(*in.state);
    if (!in.sample_answers.empty()) j["sample_answers"] = in.sample_answers;
    doc["interactions"].push_back(std::move(j));
  }
  doc["variables"] = Json::array();
  for (const auto& v : m.variables) {
    Json j{{"name", v.name}, {"strategy", enum_name(v.strategy)}};
    if (v.initial) j["initial"] = *v.initial;
    doc["variables"].push_back(std::move(j));
  }
  doc["nets"] = Json::array();
  for (const auto& n : m.nets) {
    Json nodes = Json::array();
    for (const auto& node : n.net.nodes()) {
      Json cpt = Json::object();
      for (std::size_t row = 0; row < node.cpt.size(); ++row) cpt[detail::cpt_key(row, node.parents.size())] = node.cpt[row];
      nodes.push_back({{"name", node.name}, {"parents", node.parents}, {"cpt", cpt}});
    }
    doc["nets"].push_back({{"name", n.name}, {"nodes", nodes}});
  }
  doc["triggers"] = Json::array();
  for (const auto& t : m.update_triggers) {
    Json j{{"id", t.id}, {"type", "update"}, {"resample", t.resample}, {"once", t.once}};
    if (const auto* w = std::get_if<triggers::ResponseWatch>(&t.watch)) {
      j["watch"] = {{"fact", w->fact}, {"polarity", enum_name(w->polarity)}};
    } else {
      j["watch"] = {{"elapsed_s", std::get<triggers::ElapsedWatch>(t.watch).seconds}};
    }
    j["effects"] = Json::array();
    for (const auto& e : t.edits) {
      j["effects"].push_back({{"category", e.category}, {e.op == triggers::EditOp::multiply ? "multiply" : "set", e.value}});
    }
    doc["triggers"].push_back(std::move(j));
  }
  for (const auto& t : m.evaluate_triggers) {
    Json j{{"id", t.id}, {"type", "evaluate"}, {"net", t.net}, {"threshold", t.threshold}};
    j["observe"] = Json::array();
    for (const auto& b : t.observe) {
      Json bj{{"fact", b.fact}, {"node", b.node}};
      if (b.below) bj["below"] = *b.below;
      j["observe"].push_back(std::move(bj));
    }
    j["inject"] = {{"category", t.inject.category}, {"text", t.inject.text}};
    doc["triggers"].push_back(std::move(j));
  }
  auto normal = [](const timing::NormalParams& p) { return Json{{"mean", p.mean}, {"variance", p.variance}}; };
  doc["timing"] = {{"smile", normal(m.timing.smile)},
                   {"gaze_hold", normal(m.timing.gaze_hold)},
                   {"pause_new", normal(m.timing.pause_new)},
                   {"pause_react", normal(m.timing.pause_react)},
                   {"response_timeout", normal(m.timing.response_timeout)},
                   {"floor", m.timing.floor}};
  doc["gates"] = {{"address_by_name_p", m.gates.address_by_name_p}, {"joke_clarify_p", m.gates.joke_clarify_p}};
  doc["tuning"] = {{"prepend_at_start", m.tuning.prepend_at_start}, {"group", m.tuning.group}};
  doc["engine"] = {{"low_water", m.engine.low_water},
                   {"batch", m.engine.batch},
                   {"max_queue", m.engine.max_queue},
                   {"reuse_tau_s", m.engine.reuse_tau_s},
                   {"words_per_second", m.engine.words_per_second},
                   {"default_duration_s", m.engine.default_duration_s},
                   {"gaze_return_s", m.engine.gaze_return_s},
                   {"user_latency_min_s", m.engine.user_latency_min_s},
                   {"user_latency_max_s", m.engine.user_latency_max_s}};
  if (m.user_name_fact) doc["user_name_fact"] = *m.user_name_fact;
  doc["joke_clarifications"] = m.joke_clarifications;
  if (!m.desired_time_share.empty()) doc["desired_time_share"] = m.desired_time_share;
  return doc;
}

}  // namespace korra::model
