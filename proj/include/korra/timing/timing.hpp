#pragma once

#include <algorithm>
#include <cmath>

#include "korra/prob/rng.hpp"
#include "korra/timing/params.hpp"

namespace korra::timing {

inline constexpr int kMaxRedraws = 16;

/// Draws from Normal(mean, sqrt(variance)). Values below the floor are
/// redrawn up to 16 times, then clamped to the floor. Zero variance returns
/// the mean without consuming randomness.
inline double sample_interval(IntervalKind kind, const TimingParams& params, prob::RngStream& rng) {
  const NormalParams& p = params[kind];
  if (p.variance <= 0.0) return std::max(p.mean, params.floor);
  const double sd = std::sqrt(p.variance);
  double x = rng.normal(p.mean, sd);
  for (int attempt = 1; attempt < kMaxRedraws && x < params.floor; ++attempt) x = rng.normal(p.mean, sd);
  return std::max(x, params.floor);
}

/// Bernoulli gate; true means the optional phrase or name slot is rendered.
inline bool gate(GateKind kind, const GateParams& params, prob::RngStream& rng) {
  const double p = params[kind];
  if (p >= 1.0) return true;
  if (p <= 0.0) return false;
  return rng.bernoulli(p);
}

}  // namespace korra::timing
