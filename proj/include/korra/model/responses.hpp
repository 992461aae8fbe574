#pragma once

#include <algorithm>
#include <optional>
#include <string>

#include "korra/error.hpp"
#include "korra/model/types.hpp"
#include "korra/util/text.hpp"

namespace korra::model {

/// Applies an answer to its probabilistic variable. fixed_values sets the
/// value; increment adds the delta and clamps to [0,1]. An increment on a
/// variable that was never set starts from 0.5.
inline UncertainVariable map_response(UncertainVariable var, const PredefinedResponse& response) {
  switch (var.strategy) {
    case UpdateStrategy::fixed_values:
      if (!response.value || response.delta) {
        throw ModelError("response '" + response.label + "' does not carry a fixed value for '" + var.name + "'");
      }
      var.current = std::clamp(*response.value, 0.0, 1.0);
      break;
    case UpdateStrategy::increment:
      if (!response.delta || response.value) {
        throw ModelError("response '" + response.label + "' does not carry an increment for '" + var.name + "'");
      }
      var.current = std::clamp(var.current.value_or(0.5) + *response.delta, 0.0, 1.0);
      break;
  }
  return var;
}

/// Reaction text matching the response polarity, if the interaction has any.
inline std::optional<std::string> reaction_for(const Interaction& interaction, const PredefinedResponse& response) {
  if (!interaction.reactions) return std::nullopt;
  return response.polarity == Polarity::positive ? interaction.reactions->positive : interaction.reactions->negative;
}

/// Response whose label equals `text` ignoring case and surrounding blanks.
inline const PredefinedResponse* match_response(const Interaction& interaction, std::string_view text) {
  const auto wanted = text::trim(text);
  for (const auto& r : interaction.responses) {
    if (text::iequals(text::trim(r.label), wanted)) return &r;
  }
  return nullptr;
}

}  // namespace korra::model
