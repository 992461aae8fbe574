#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "korra/error.hpp"
#include "korra/model/types.hpp"

namespace korra::scheduler {

/// A model interaction. `sampled` marks items drawn from the Main
/// Distribution; tuning prepends are not sampled and survive resampling.
struct Planned {
  std::string id;
  std::string category;
  bool sampled = true;

  friend bool operator==(const Planned&, const Planned&) = default;
};

/// State-dependent slot resolved right before execution.
struct Placeholder {
  std::string category;
  std::string variable;

  friend bool operator==(const Placeholder&, const Placeholder&) = default;
};

/// Interaction created at runtime by an evaluate trigger.
struct Injected {
  model::Interaction interaction;

  friend bool operator==(const Injected&, const Injected&) = default;
};

using QueueItem = std::variant<Planned, Placeholder, Injected>;

inline const std::string& category_of(const QueueItem& item) {
  return std::visit(
      [](const auto& x) -> const std::string& {
        if constexpr (std::is_same_v<std::decay_t<decltype(x)>, Injected>) {
          return x.interaction.category;
        } else {
          return x.category;
        }
      },
      item);
}

inline bool is_sampled(const QueueItem& item) {
  if (const auto* p = std::get_if<Planned>(&item)) return p->sampled;
  return std::holds_alternative<Placeholder>(item);
}

/// Text shown for an item in queue snapshots.
inline std::string item_label(const QueueItem& item, const model::AgentModel& m) {
  if (const auto* p = std::get_if<Planned>(&item)) {
    const auto& in = m.interaction(p->id);
    return in.text.empty() && !in.variants.empty() ? in.variants.front().text : in.text;
  }
  if (const auto* h = std::get_if<Placeholder>(&item)) return "###place holder for " + h->variable;
  return std::get<Injected>(item).interaction.text;
}

/// Buffered upcoming interactions. Items before `cursor` have been executed
/// and never change; old executed items are dropped once the history exceeds
/// `history_limit` so memory stays bounded over long sessions.
class InteractionsQueue {
 public:
  const std::vector<QueueItem>& items() const { return items_; }
  std::size_t cursor() const { return cursor_; }
  std::size_t pending() const { return items_.size() - cursor_; }
  bool empty() const { return pending() == 0; }
  std::size_t executed_total() const { return dropped_ + cursor_; }

  std::vector<QueueItem> unexecuted() const {
    return {items_.begin() + static_cast<std::ptrdiff_t>(cursor_), items_.end()};
  }

  const QueueItem& peek() const {
    if (empty()) throw DepletionError("interactions queue is empty");
    return items_[cursor_];
  }

  /// Marks the next item executed and returns it.
  QueueItem advance() {
    QueueItem item = peek();
    ++cursor_;
    return item;
  }

  void append(std::vector<QueueItem> more) {
    for (auto& i : more) items_.push_back(std::move(i));
  }

  void insert_at(std::size_t index, QueueItem item) {
    if (index < cursor_ || index > items_.size()) throw TuningError("insert position inside the executed prefix");
    items_.insert(items_.begin() + static_cast<std::ptrdiff_t>(index), std::move(item));
  }

  void erase_at(std::size_t index) {
    if (index < cursor_ || index >= items_.size()) throw TuningError("cannot remove an executed item");
    items_.erase(items_.begin() + static_cast<std::ptrdiff_t>(index));
  }

  /// Removes unexecuted items matching `pred`; returns them in queue order.
  template <class Pred>
  std::vector<QueueItem> extract_unexecuted(Pred&& pred) {
    std::vector<QueueItem> removed;
    std::vector<QueueItem> kept;
    for (std::size_t i = cursor_; i < items_.size(); ++i) {
      (std::invoke(pred, items_[i]) ? removed : kept).push_back(std::move(items_[i]));
    }
    items_.resize(cursor_);
    for (auto& k : kept) items_.push_back(std::move(k));
    return removed;
  }

  /// Replaces the unexecuted suffix wholesale.
  void replace_unexecuted(std::vector<QueueItem> suffix) {
    items_.resize(cursor_);
    for (auto& s : suffix) items_.push_back(std::move(s));
  }

  /// Drops executed items from the front so the queue holds at most
  /// `limit` items; unexecuted items are never dropped.
  void compact(std::size_t limit) {
    if (items_.size() <= limit) return;
    const std::size_t drop = std::min(cursor_, items_.size() - limit);
    items_.erase(items_.begin(), items_.begin() + static_cast<std::ptrdiff_t>(drop));
    cursor_ -= drop;
    dropped_ += drop;
  }

 private:
  std::vector<QueueItem> items_;
  std::size_t cursor_ = 0;
  std::size_t dropped_ = 0;
};

/// Queue edits available to tuning rules and triggers.
struct Prepend {
  QueueItem item;
};
struct Remove {
  std::function<bool(const QueueItem&)> predicate;
};
/// Removes the item at an absolute queue index.
struct RemoveAt {
  std::size_t index;
};
struct Group {
  std::vector<std::string> ids;
};
using TuningCommand = std::variant<Prepend, Remove, RemoveAt, Group>;

inline bool has_planned_id(const QueueItem& item, const std::string& id) {
  const auto* p = std::get_if<Planned>(&item);
  return p && p->id == id;
}

/// Applies tuning edits in order. Prepend inserts at the cursor; Remove
/// drops matching unexecuted items; Group makes the listed ids contiguous,
/// in list order, at the position of the first one found. Returns the items
/// removed. Edits reaching into the executed prefix throw TuningError.
inline std::vector<QueueItem> apply_tuning(InteractionsQueue& queue, const std::vector<TuningCommand>& commands) {
  std::vector<QueueItem> removed;
  for (const auto& cmd : commands) {
    if (const auto* p = std::get_if<Prepend>(&cmd)) {
      queue.insert_at(queue.cursor(), p->item);
    } else if (const auto* r = std::get_if<Remove>(&cmd)) {
      for (auto& item : queue.extract_unexecuted(r->predicate)) removed.push_back(std::move(item));
    } else if (const auto* ra = std::get_if<RemoveAt>(&cmd)) {
      if (ra->index < queue.cursor()) throw TuningError("cannot remove an executed item");
      if (ra->index >= queue.items().size()) throw TuningError("remove index past the end of the queue");
      removed.push_back(queue.items()[ra->index]);
      queue.erase_at(ra->index);
    } else {
      const auto& ids = std::get<Group>(cmd).ids;
      auto suffix = queue.unexecuted();
      std::vector<std::size_t> at;
      for (const auto& id : ids) {
        for (std::size_t i = 0; i < suffix.size(); ++i) {
          if (has_planned_id(suffix[i], id) && std::find(at.begin(), at.end(), i) == at.end()) {
            at.push_back(i);
            break;
          }
        }
      }
      if (at.size() < 2) continue;
      const std::size_t first = *std::min_element(at.begin(), at.end());
      std::vector<QueueItem> rest;
      std::size_t anchor = 0;
      for (std::size_t i = 0; i < suffix.size(); ++i) {
        if (std::find(at.begin(), at.end(), i) != at.end()) continue;
        if (i < first) ++anchor;
        rest.push_back(suffix[i]);
      }
      std::vector<QueueItem> members;
      for (std::size_t i : at) members.push_back(suffix[i]);
      rest.insert(rest.begin() + static_cast<std::ptrdiff_t>(anchor), members.begin(), members.end());
      queue.replace_unexecuted(std::move(rest));
    }
  }
  return removed;
}

}  // namespace korra::scheduler
