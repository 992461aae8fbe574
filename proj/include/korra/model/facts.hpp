#pragma once

#include <map>
#include <optional>
#include <string>

#include "korra/polarity.hpp"

namespace korra::model {

/// What the user answered to a question, keyed by the asking interaction id.
struct FactRecord {
  std::string answer;
  /// Set for predefined responses.
  std::optional<Polarity> polarity;
  /// Probability the answer mapped to, for uncertain-fact questions.
  std::optional<double> value;
  /// Epoch seconds.
  double at = 0.0;

  friend bool operator==(const FactRecord&, const FactRecord&) = default;
};

using Facts = std::map<std::string, FactRecord>;

}  // namespace korra::model
