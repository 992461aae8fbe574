#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "korra/error.hpp"
#include "korra/model/types.hpp"
#include "korra/prob/finite_dist.hpp"
#include "korra/triggers/definitions.hpp"

namespace korra::scheduler {

/// Category weights in model order plus the set of fixed categories.
/// Trigger edits act on these pre-normalization weights.
struct MainDistribution {
  std::vector<std::pair<std::string, double>> weights;
  std::set<std::string> fixed;

  static MainDistribution from_model(const model::AgentModel& m) {
    MainDistribution d;
    for (const auto& c : m.categories) {
      d.weights.emplace_back(c.name, c.base_weight);
      if (c.fixed) d.fixed.insert(c.name);
    }
    return d;
  }

  double weight(const std::string& category) const {
    for (const auto& [name, w] : weights) {
      if (name == category) return w;
    }
    return 0.0;
  }

  double total() const {
    double s = 0.0;
    for (const auto& [name, w] : weights) s += w;
    return s;
  }

  /// Applies a trigger edit. Unknown categories throw NotFound.
  void apply(const triggers::WeightEdit& edit) {
    for (auto& [name, w] : weights) {
      if (name != edit.category) continue;
      w = edit.op == triggers::EditOp::multiply ? w * edit.value : edit.value;
      w = std::max(w, 0.0);
      return;
    }
    throw NotFound("edit names unknown category '" + edit.category + "'");
  }

  /// Categories with positive weight as a distribution (order preserved).
  prob::FiniteDist<std::string> to_dist() const {
    std::vector<std::pair<std::string, double>> pairs;
    for (const auto& [name, w] : weights) {
      if (w > 0.0) pairs.emplace_back(name, w);
    }
    return prob::FiniteDist<std::string>::from_weighted(std::move(pairs));
  }

  friend bool operator==(const MainDistribution&, const MainDistribution&) = default;
};

/// Removes depleted categories and renormalizes. Fixed categories that are
/// still available keep their weight exactly; the remaining mass
/// 1 - sum(fixed) goes to the other available categories in proportion to
/// their weights. When only fixed categories remain and their weights sum
/// below one, the residual is spread uniformly over them and a warning is
/// appended to `warnings`. Throws DepletionError when nothing is available.
inline MainDistribution effective_distribution(const MainDistribution& base, const std::set<std::string>& depleted,
                                               std::vector<std::string>* warnings = nullptr) {
  auto warn = [&](std::string w) {
    if (warnings) warnings->push_back(std::move(w));
  };
  std::vector<std::pair<std::string, double>> alive;
  double fixed_sum = 0.0;
  double free_sum = 0.0;
  std::size_t fixed_alive = 0;
  for (const auto& [name, w] : base.weights) {
    if (depleted.contains(name) || !(w > 0.0)) continue;
    alive.emplace_back(name, w);
    if (base.fixed.contains(name)) {
      fixed_sum += w;
      ++fixed_alive;
    } else {
      free_sum += w;
    }
  }
  if (alive.empty()) throw DepletionError("every category of the Main Distribution is depleted");

  MainDistribution out;
  out.fixed = base.fixed;
  if (free_sum > 0.0 && fixed_sum < 1.0) {
    const double free_mass = 1.0 - fixed_sum;
    for (const auto& [name, w] : alive) {
      out.weights.emplace_back(name, base.fixed.contains(name) ? w : free_mass * w / free_sum);
    }
    return out;
  }
  if (free_sum > 0.0) {
    warn("fixed categories hold " + std::to_string(fixed_sum) + " of the mass; other categories get none");
  } else if (fixed_sum < 1.0) {
    warn("only fixed categories remain; spreading residual " + std::to_string(1.0 - fixed_sum) + " uniformly");
  }
  if (fixed_sum < 1.0) {
    const double share = (1.0 - fixed_sum) / static_cast<double>(fixed_alive);
    for (const auto& [name, w] : alive) out.weights.emplace_back(name, w + share);
  } else {
    for (const auto& [name, w] : alive) {
      if (base.fixed.contains(name)) out.weights.emplace_back(name, w / fixed_sum);
    }
  }
  return out;
}

/// Probability of reusing an interaction `elapsed` seconds after its last
/// use: 1 - exp(-elapsed / tau). An infinite tau never reuses.
inline double reuse_probability(double elapsed, double tau) {
  if (elapsed < 0.0) throw RangeError("elapsed time must be non-negative");
  if (!(tau > 0.0)) throw RangeError("reuse time constant must be positive");
  if (std::isinf(tau)) return 0.0;
  return 1.0 - std::exp(-elapsed / tau);
}

}  // namespace korra::scheduler
