#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <initializer_list>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "korra/error.hpp"
#include "korra/prob/rng.hpp"

namespace korra::prob {

inline constexpr double kTolerance = 1e-9;

/// Probability of observed evidence.
struct Evidence {
  double poe = 1.0;
};

/// A finite discrete distribution. Values are unique, weights are positive
/// and sum to one. Construction merges duplicates, drops zero weights and
/// normalizes; the result is immutable.
template <class T>
  requires std::equality_comparable<T>
class FiniteDist {
 public:
  using value_type = T;
  using Entry = std::pair<T, double>;

  /// Normalizes the given (value, weight) pairs. Throws RangeError on a
  /// negative or non-finite weight, or when no weight is positive.
  static FiniteDist from_weighted(std::vector<Entry> pairs) {
    std::vector<Entry> merged;
    merged.reserve(pairs.size());
    double total = 0.0;
    for (auto& [value, weight] : pairs) {
      if (!std::isfinite(weight) || weight < 0.0) {
        throw RangeError("weight must be finite and non-negative, got " + std::to_string(weight));
      }
      if (weight == 0.0) continue;
      total += weight;
      auto it = std::find_if(merged.begin(), merged.end(),
                             [&](const Entry& e) { return e.first == value; });
      if (it != merged.end()) {
        it->second += weight;
      } else {
        merged.emplace_back(std::move(value), weight);
      }
    }
    if (merged.empty() || total <= 0.0) {
      throw RangeError("distribution needs at least one positive weight");
    }
    for (auto& e : merged) e.second /= total;
    return FiniteDist(std::move(merged));
  }

  static FiniteDist from_weighted(std::initializer_list<Entry> pairs) {
    return from_weighted(std::vector<Entry>(pairs));
  }

  static FiniteDist point(T value) { return FiniteDist({Entry{std::move(value), 1.0}}); }

  /// Equal weight on every value (duplicates merged).
  static FiniteDist uniform(const std::vector<T>& values) {
    std::vector<Entry> pairs;
    for (const auto& v : values) pairs.emplace_back(v, 1.0);
    return from_weighted(std::move(pairs));
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Weight of `value`, zero when outside the support.
  double weight_of(const T& value) const {
    for (const auto& [v, w] : entries_) {
      if (v == value) return w;
    }
    return 0.0;
  }

  template <class Pred>
  double prob_of(Pred&& pred) const {
    double mass = 0.0;
    for (const auto& [v, w] : entries_) {
      if (std::invoke(pred, v)) mass += w;
    }
    return mass;
  }

  /// Inverse-CDF draw; one uniform per call.
  const T& sample(RngStream& rng) const {
    const double u = rng.uniform01();
    double acc = 0.0;
    for (const auto& [v, w] : entries_) {
      acc += w;
      if (u < acc) return v;
    }
    return entries_.back().first;
  }

 private:
  explicit FiniteDist(std::vector<Entry> entries) : entries_(std::move(entries)) {}

  std::vector<Entry> entries_;
};

/// Posterior plus the mass of the conditioning event.
template <class T>
struct Conditioned {
  FiniteDist<T> posterior;
  Evidence evidence;
};

template <class T>
FiniteDist<T> point(T value) {
  return FiniteDist<T>::point(std::move(value));
}

/// Bernoulli over {true, false}; p in [0, 1].
inline FiniteDist<bool> bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw RangeError("bernoulli parameter must lie in [0,1], got " + std::to_string(p));
  }
  return FiniteDist<bool>::from_weighted({{true, p}, {false, 1.0 - p}});
}

/// Exact mixture: P(out) = sum_v P_d(v) * P_{kernel(v)}(out).
template <class T, class Kernel>
auto bind(const FiniteDist<T>& d, Kernel&& kernel) {
  using Out = std::remove_cvref_t<std::invoke_result_t<Kernel&, const T&>>;
  using U = typename Out::value_type;
  std::vector<std::pair<U, double>> pairs;
  for (const auto& [v, p] : d.entries()) {
    const Out inner = std::invoke(kernel, v);
    for (const auto& [u, q] : inner.entries()) pairs.emplace_back(u, p * q);
  }
  return FiniteDist<U>::from_weighted(std::move(pairs));
}

template <class T, class F>
auto map(const FiniteDist<T>& d, F&& f) {
  using U = std::remove_cvref_t<std::invoke_result_t<F&, const T&>>;
  std::vector<std::pair<U, double>> pairs;
  for (const auto& [v, p] : d.entries()) pairs.emplace_back(std::invoke(f, v), p);
  return FiniteDist<U>::from_weighted(std::move(pairs));
}

template <class T, class Pred>
double prob_of(const FiniteDist<T>& d, Pred&& pred) {
  return d.prob_of(std::forward<Pred>(pred));
}

/// Restricts `d` to values satisfying `pred`. Throws ImpossibleEvidence when
/// the satisfying mass is zero.
template <class T, class Pred>
Conditioned<T> condition(const FiniteDist<T>& d, Pred&& pred) {
  std::vector<std::pair<T, double>> kept;
  double mass = 0.0;
  for (const auto& [v, w] : d.entries()) {
    if (std::invoke(pred, v)) {
      kept.emplace_back(v, w);
      mass += w;
    }
  }
  if (kept.empty() || mass <= 0.0) {
    throw ImpossibleEvidence("conditioning event has probability zero");
  }
  return {FiniteDist<T>::from_weighted(std::move(kept)), Evidence{mass}};
}

template <class T>
const T& sample(const FiniteDist<T>& d, RngStream& rng) {
  return d.sample(rng);
}

}  // namespace korra::prob
