#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "korra/polarity.hpp"

namespace korra::triggers {

/// Fires when the user answers `fact` (an interaction id) with the given polarity.
struct ResponseWatch {
  std::string fact;
  Polarity polarity = Polarity::positive;

  friend bool operator==(const ResponseWatch&, const ResponseWatch&) = default;
};

/// Fires once the session has run for at least `seconds`.
struct ElapsedWatch {
  double seconds = 0.0;

  friend bool operator==(const ElapsedWatch&, const ElapsedWatch&) = default;
};

enum class EditOp { multiply, set };

/// Edit applied to a category's pre-normalization weight.
struct WeightEdit {
  std::string category;
  EditOp op = EditOp::multiply;
  double value = 1.0;

  friend bool operator==(const WeightEdit&, const WeightEdit&) = default;
};

/// Model Update Trigger: tracks responses or elapsed time, edits the Main
/// Distribution and may request resampling. It has no way to carry an
/// interaction.
struct ModelUpdateTrigger {
  std::string id;
  std::variant<ResponseWatch, ElapsedWatch> watch;
  std::vector<WeightEdit> edits;
  bool resample = true;
  bool once = true;

  friend bool operator==(const ModelUpdateTrigger&, const ModelUpdateTrigger&) = default;
};

/// Maps an answered fact onto a network node. Polarity-bearing answers map
/// positive -> true. With `below` set, the answer is parsed as a number and
/// the node is true when the number is below the cutoff (e.g. Age -> young).
struct ObservationBinding {
  std::string fact;
  std::string node;
  std::optional<double> below;

  friend bool operator==(const ObservationBinding&, const ObservationBinding&) = default;
};

/// Template for the interaction a MET inserts at the queue head.
struct InjectionTemplate {
  std::string category;
  std::string text;

  friend bool operator==(const InjectionTemplate&, const InjectionTemplate&) = default;
};

/// Model Evaluate Trigger: tracks responses through a Bayesian network and
/// may add an interaction. It cannot resample and cannot watch time.
struct ModelEvaluateTrigger {
  std::string id;
  std::string net;
  double threshold = 0.85;
  std::vector<ObservationBinding> observe;
  InjectionTemplate inject;

  friend bool operator==(const ModelEvaluateTrigger&, const ModelEvaluateTrigger&) = default;
};

}  // namespace korra::triggers
