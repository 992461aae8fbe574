#pragma once

#include <map>
#include <string>
#include <vector>

#include "korra/error.hpp"

namespace korra::stats {

/// Per-category execution accounting.
struct CategoryStat {
  double total_time = 0.0;
  std::size_t count = 0;
  /// Draws that hit this category after it ran out of interactions.
  std::size_t depleted_requests = 0;

  double avg_time() const { return count ? total_time / static_cast<double>(count) : 0.0; }

  friend bool operator==(const CategoryStat&, const CategoryStat&) = default;
};

/// Execution statistics keyed by category name.
class InteractionsStat {
 public:
  void record_execution(const std::string& category, double duration) {
    if (duration < 0.0) throw RangeError("execution duration must be non-negative");
    auto& s = by_category_[category];
    s.total_time += duration;
    ++s.count;
  }

  void record_depletion(const std::string& category) { ++by_category_[category].depleted_requests; }

  const std::map<std::string, CategoryStat>& categories() const { return by_category_; }
  std::map<std::string, CategoryStat>& categories() { return by_category_; }

  const CategoryStat* find(const std::string& category) const {
    auto it = by_category_.find(category);
    return it == by_category_.end() ? nullptr : &it->second;
  }

  std::size_t total_depletions() const {
    std::size_t n = 0;
    for (const auto& [k, s] : by_category_) n += s.depleted_requests;
    return n;
  }

  friend bool operator==(const InteractionsStat&, const InteractionsStat&) = default;

 private:
  std::map<std::string, CategoryStat> by_category_;
};

/// One category's FIT term: average execution time, average pause, count.
struct FitTerm {
  double avg_time = 0.0;
  double avg_pause = 0.0;
  std::size_t count = 0;
};

/// Forecasted interaction time: sum over categories of (A_i + P_i) * C_i.
inline double compute_fit(const std::vector<FitTerm>& terms) {
  double fit = 0.0;
  for (const auto& t : terms) fit += (t.avg_time + t.avg_pause) * static_cast<double>(t.count);
  return fit;
}

/// Weights whose expected time shares match `desired_share`:
/// w_i proportional to share_i / (A_i + P_i). `avg_time` supplies A_i.
inline std::map<std::string, double> suggest_weights(const std::map<std::string, double>& desired_share,
                                                     const std::map<std::string, double>& avg_time,
                                                     double avg_pause) {
  std::map<std::string, double> weights;
  double total = 0.0;
  for (const auto& [name, share] : desired_share) {
    auto it = avg_time.find(name);
    if (it == avg_time.end()) throw NotFound("no duration statistics for category '" + name + "'");
    const double cost = it->second + avg_pause;
    if (!(cost > 0.0)) throw RangeError("category '" + name + "' has zero expected duration");
    weights[name] = share / cost;
    total += weights[name];
  }
  if (!(total > 0.0)) throw RangeError("desired shares are all zero");
  for (auto& [name, w] : weights) w /= total;
  return weights;
}

inline std::map<std::string, double> suggest_weights(const std::map<std::string, double>& desired_share,
                                                     const InteractionsStat& stats, double avg_pause) {
  std::map<std::string, double> avg;
  for (const auto& [name, share] : desired_share) {
    const auto* s = stats.find(name);
    if (!s || s->count == 0) throw NotFound("no duration statistics for category '" + name + "'");
    avg[name] = s->avg_time();
  }
  return suggest_weights(desired_share, avg, avg_pause);
}

}  // namespace korra::stats
