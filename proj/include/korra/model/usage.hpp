#pragma once

#include <map>
#include <optional>
#include <string>

#include "korra/error.hpp"
#include "korra/model/types.hpp"

namespace korra::model {

/// Per-interaction usage flags. Invariant: answered implies used.
struct UsageRecord {
  bool used = false;
  bool answered = false;
  /// Absolute time (epoch seconds) of the last execution.
  std::optional<double> last_used_at;

  friend bool operator==(const UsageRecord&, const UsageRecord&) = default;
};

using Usage = std::map<std::string, UsageRecord>;

inline UsageRecord usage_of(const Usage& usage, const std::string& id) {
  auto it = usage.find(id);
  return it == usage.end() ? UsageRecord{} : it->second;
}

/// Marks an executed interaction. Timestamps never move backwards.
inline void mark_used(const AgentModel& model, Usage& usage, const std::string& id, bool answered, double at) {
  if (!model.find_interaction(id)) throw NotFound("cannot mark unknown interaction '" + id + "'");
  auto& rec = usage[id];
  rec.used = true;
  rec.answered = answered;
  rec.last_used_at = rec.last_used_at ? std::max(*rec.last_used_at, at) : at;
}

/// A non-repeatable interaction stays out of sampling once used.
inline bool eligible(const Interaction& interaction, const Usage& usage) {
  return interaction.repeatable || !usage_of(usage, interaction.id).used;
}

}  // namespace korra::model
