#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "korra/error.hpp"
#include "korra/model/types.hpp"
#include "korra/model/usage.hpp"
#include "korra/prob/rng.hpp"
#include "korra/scheduler/main_distribution.hpp"
#include "korra/scheduler/queue.hpp"
#include "korra/stats/stats.hpp"

namespace korra::scheduler {

/// Selection state of one category. Items are first emitted in a seeded
/// random order, each eligible item once; after that the repeatable ones are
/// drawn uniformly, never the same item twice in a row when there is a choice.
struct CategoryCursor {
  enum class Phase { unstarted, permutation, uniform };

  Phase phase = Phase::unstarted;
  std::deque<std::string> remaining;
  std::optional<std::string> last_emitted;
  /// Ids held by the queue outside of sampling (tuning prepends).
  std::set<std::string> reserved;
};

namespace detail {

inline std::size_t weighted_index(const std::vector<double>& weights, prob::RngStream& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform01() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

}  // namespace detail

/// Picks the next interaction of `category`, or nullopt when it is depleted.
inline std::optional<std::string> select_within_category(CategoryCursor& cursor, const model::Category& category,
                                                         const model::AgentModel& m, const model::Usage& usage,
                                                         prob::RngStream& rng) {
  using Phase = CategoryCursor::Phase;
  if (cursor.phase == Phase::unstarted) {
    if (category.selection == model::Selection::permutation_then_uniform) {
      std::vector<std::string> pool;
      for (const auto& id : category.interactions) {
        if (!cursor.reserved.contains(id) && model::eligible(m.interaction(id), usage)) pool.push_back(id);
      }
      for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.uniform_index(i)]);
      cursor.remaining.assign(pool.begin(), pool.end());
      cursor.phase = Phase::permutation;
    } else {
      cursor.phase = Phase::uniform;
    }
  }
  while (cursor.phase == Phase::permutation && !cursor.remaining.empty()) {
    std::string id = cursor.remaining.front();
    cursor.remaining.pop_front();
    if (cursor.remaining.empty()) cursor.phase = Phase::uniform;
    if (!model::eligible(m.interaction(id), usage)) continue;
    cursor.last_emitted = id;
    return id;
  }
  cursor.phase = Phase::uniform;

  std::vector<std::string> candidates;
  std::vector<double> weights;
  for (const auto& id : category.interactions) {
    const auto& in = m.interaction(id);
    if (!in.repeatable || !(in.weight > 0.0)) continue;
    candidates.push_back(id);
    weights.push_back(in.weight);
  }
  if (candidates.size() > 1 && cursor.last_emitted) {
    auto it = std::find(candidates.begin(), candidates.end(), *cursor.last_emitted);
    if (it != candidates.end()) {
      weights.erase(weights.begin() + (it - candidates.begin()));
      candidates.erase(it);
    }
  }
  if (candidates.empty()) return std::nullopt;
  const std::string& id = candidates[detail::weighted_index(weights, rng)];
  cursor.last_emitted = id;
  return id;
}

/// True when `select_within_category` would emit something, without
/// consuming randomness or changing the cursor.
inline bool can_emit(const CategoryCursor& cursor, const model::Category& category, const model::AgentModel& m,
                     const model::Usage& usage) {
  if (category.placeholder_variable) return true;
  for (const auto& id : category.interactions) {
    const auto& in = m.interaction(id);
    if (in.repeatable && in.weight > 0.0) return true;
  }
  if (cursor.phase == CategoryCursor::Phase::unstarted) {
    return std::any_of(category.interactions.begin(), category.interactions.end(), [&](const std::string& id) {
      return !cursor.reserved.contains(id) && model::eligible(m.interaction(id), usage);
    });
  }
  return std::any_of(cursor.remaining.begin(), cursor.remaining.end(),
                     [&](const std::string& id) { return model::eligible(m.interaction(id), usage); });
}

/// Resolves a placeholder from the current variable value: at or above the
/// category threshold picks a high variant, below picks a low one, an unset
/// variable picks a neutral one. Missing bands fall back to neutral.
inline model::Interaction fill_placeholder(const Placeholder& slot, const model::AgentModel& m,
                                           std::optional<double> value, prob::RngStream& rng) {
  const auto& cat = m.category(slot.category);
  model::StateBand band = model::StateBand::neutral;
  if (value) band = *value >= cat.placeholder_threshold ? model::StateBand::high : model::StateBand::low;
  auto collect = [&](model::StateBand b) {
    std::vector<const model::Interaction*> out;
    for (const auto& id : cat.interactions) {
      const auto& in = m.interaction(id);
      if (in.kind != model::InteractionKind::state_expression) continue;
      if (in.state.value_or(model::StateBand::neutral) == b) out.push_back(&in);
    }
    return out;
  };
  auto pool = collect(band);
  if (pool.empty()) pool = collect(model::StateBand::neutral);
  if (pool.empty()) throw ModelError("category '" + slot.category + "' has no neutral state expression");
  std::vector<double> weights;
  for (const auto* in : pool) weights.push_back(in->weight > 0.0 ? in->weight : 1.0);
  return *pool[detail::weighted_index(weights, rng)];
}

/// Outcome of one queue generation.
struct Generation {
  std::vector<QueueItem> items;
  /// Categories that were drawn after running dry, one entry per retried draw.
  std::vector<std::string> depleted_draws;
  std::vector<std::string> warnings;
  /// Set when every category ran dry and the batch came out short.
  bool exhausted = false;
};

/// Owns the Main Distribution weights and the per-category cursors.
class Scheduler {
 public:
  explicit Scheduler(const model::AgentModel& m) : model_(&m), base_(MainDistribution::from_model(m)) {
    for (const auto& c : m.categories) cursors_[c.name];
  }

  const model::AgentModel& model() const { return *model_; }
  const MainDistribution& base() const { return base_; }
  MainDistribution& base() { return base_; }
  const CategoryCursor& cursor(const std::string& category) const { return cursors_.at(category); }

  /// Categories that currently have nothing to emit.
  std::set<std::string> depleted(const model::Usage& usage) const {
    std::set<std::string> out;
    for (const auto& c : model_->categories) {
      if (!can_emit(cursors_.at(c.name), c, *model_, usage)) out.insert(c.name);
    }
    return out;
  }

  /// The distribution queue generation would draw from right now.
  MainDistribution effective(const model::Usage& usage, std::vector<std::string>* warnings = nullptr) const {
    return effective_distribution(base_, depleted(usage), warnings);
  }

  /// Draws `n` items from the effective distribution. A draw that lands on
  /// a category that ran out during this batch is recorded in `stats`, the
  /// category is removed and the draw is repeated. When every category runs
  /// dry the batch ends early.
  Generation generate(std::size_t n, const model::Usage& usage, prob::RngStream& rng, stats::InteractionsStat& stats) {
    Generation g;
    std::set<std::string> dry = depleted(usage);
    std::optional<prob::FiniteDist<std::string>> dist;
    auto rebuild = [&] {
      dist = effective_distribution(base_, dry, &g.warnings).to_dist();
    };
    try {
      rebuild();
      while (g.items.size() < n) {
        const std::string cat_name = dist->sample(rng);
        const auto& cat = model_->category(cat_name);
        if (cat.placeholder_variable) {
          g.items.push_back(Placeholder{cat_name, *cat.placeholder_variable});
          continue;
        }
        if (auto id = select_within_category(cursors_.at(cat_name), cat, *model_, usage, rng)) {
          g.items.push_back(Planned{*id, cat_name, true});
          continue;
        }
        stats.record_depletion(cat_name);
        g.depleted_draws.push_back(cat_name);
        dry.insert(cat_name);
        rebuild();
      }
    } catch (const DepletionError&) {
      g.exhausted = true;
    }
    return g;
  }

  /// Returns unexecuted sampled items to their categories so they can be
  /// drawn again, in their original order.
  void give_back(const std::vector<QueueItem>& discarded) {
    for (auto it = discarded.rbegin(); it != discarded.rend(); ++it) {
      const auto* p = std::get_if<Planned>(&*it);
      if (!p) continue;
      auto& c = cursors_.at(p->category);
      if (!p->sampled) {
        c.reserved.erase(p->id);
        continue;
      }
      if (model_->interaction(p->id).repeatable && c.phase == CategoryCursor::Phase::uniform) continue;
      if (c.phase == CategoryCursor::Phase::unstarted) continue;
      c.remaining.push_front(p->id);
      c.phase = CategoryCursor::Phase::permutation;
    }
  }

  /// Keeps `id` out of sampling while it sits in the queue as a prepend.
  void reserve(const std::string& id) {
    const auto& in = model_->interaction(id);
    auto& c = cursors_.at(in.category);
    c.reserved.insert(id);
    c.remaining.erase(std::remove(c.remaining.begin(), c.remaining.end(), id), c.remaining.end());
  }

 private:
  const model::AgentModel* model_;
  MainDistribution base_;
  std::map<std::string, CategoryCursor> cursors_;
};

}  // namespace korra::scheduler
