#pragma once

#include <stdexcept>
#include <string>

namespace korra {

/// Base of every error the engine raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Weights, probabilities or parameters outside their legal range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Conditioning on an event of probability zero.
class ImpossibleEvidence : public Error {
 public:
  using Error::Error;
};

/// Model document failed to parse or validate. The message carries the field path.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Reference to a name (node, interaction, category) that does not exist.
class NotFound : public Error {
 public:
  using Error::Error;
};

/// Category has no interaction left to emit.
class DepletionError : public Error {
 public:
  using Error::Error;
};

/// Queue edit touched the executed prefix.
class TuningError : public Error {
 public:
  using Error::Error;
};

/// Session store unreadable or unwritable.
class StoreError : public Error {
 public:
  using Error::Error;
};

}  // namespace korra
