#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "korra/error.hpp"
#include "korra/prob/finite_dist.hpp"

namespace korra::bayes {

/// A boolean node. `cpt[row]` is P(node = true | parents), where row bit
/// (k-1-i) is the truth value of parents[i]; the first parent is the most
/// significant bit. A root node has a single row.
struct BinaryNode {
  std::string name;
  std::vector<std::string> parents;
  std::vector<double> cpt;
};

using ObservationSet = std::map<std::string, bool>;

/// Joint truth assignment indexed by node position.
using Assignment = std::vector<bool>;

/// Small network of binary nodes, validated and topologically ordered on
/// construction.
class BayesNet {
 public:
  BayesNet() = default;

  /// Nodes may be given in any order; they are sorted so every parent
  /// precedes its children. Throws ModelError on duplicates, unknown
  /// parents, cycles, wrong CPT sizes or out-of-range probabilities.
  explicit BayesNet(std::vector<BinaryNode> nodes) {
    std::unordered_map<std::string, std::size_t> given;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!given.emplace(nodes[i].name, i).second) {
        throw ModelError("duplicate node name '" + nodes[i].name + "'");
      }
    }
    for (const auto& n : nodes) {
      for (const auto& p : n.parents) {
        if (!given.contains(p)) {
          throw ModelError("node '" + n.name + "' references unknown parent '" + p + "'");
        }
      }
      if (n.parents.size() > 16) throw ModelError("node '" + n.name + "' has too many parents");
      const std::size_t rows = std::size_t{1} << n.parents.size();
      if (n.cpt.size() != rows) {
        throw ModelError("node '" + n.name + "' needs " + std::to_string(rows) + " CPT rows, has " +
                         std::to_string(n.cpt.size()));
      }
      for (double p : n.cpt) {
        if (!(p >= 0.0 && p <= 1.0)) {
          throw ModelError("node '" + n.name + "' has CPT entry outside [0,1]");
        }
      }
    }
    // Kahn-style ordering, stable with respect to the given order.
    std::vector<bool> placed(nodes.size(), false);
    while (nodes_.size() < nodes.size()) {
      bool progressed = false;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (placed[i]) continue;
        bool ready = true;
        for (const auto& p : nodes[i].parents) {
          if (!index_.contains(p)) {
            ready = false;
            break;
          }
        }
        if (!ready) continue;
        index_.emplace(nodes[i].name, nodes_.size());
        nodes_.push_back(nodes[i]);
        placed[i] = true;
        progressed = true;
      }
      if (!progressed) throw ModelError("network contains a cycle");
    }
    parent_index_.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      for (const auto& p : nodes_[i].parents) parent_index_[i].push_back(index_.at(p));
    }
  }

  const std::vector<BinaryNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  bool contains(const std::string& name) const { return index_.contains(name); }

  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw NotFound("no node named '" + name + "'");
    return it->second;
  }

  /// P(node i = true | parent values in `a`).
  double p_true(std::size_t i, const Assignment& a) const {
    std::size_t row = 0;
    for (std::size_t parent : parent_index_[i]) row = (row << 1) | (a[parent] ? 1u : 0u);
    return nodes_[i].cpt[row];
  }

  /// Product of local conditionals for a full assignment.
  double joint_probability(const Assignment& a) const {
    double p = 1.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const double t = p_true(i, a);
      p *= a[i] ? t : 1.0 - t;
    }
    return p;
  }

  /// Full joint distribution composed node by node with `bind`, in
  /// topological order (ancestral construction).
  prob::FiniteDist<Assignment> joint() const {
    auto d = prob::point(Assignment{});
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      d = prob::bind(d, [this, i](const Assignment& prefix) {
        const double t = p_true(i, prefix);
        std::vector<std::pair<Assignment, double>> next;
        Assignment yes = prefix;
        yes.push_back(true);
        Assignment no = prefix;
        no.push_back(false);
        next.emplace_back(std::move(yes), t);
        next.emplace_back(std::move(no), 1.0 - t);
        return prob::FiniteDist<Assignment>::from_weighted(std::move(next));
      });
    }
    return d;
  }

  void check_observations(const ObservationSet& obs) const {
    for (const auto& [name, value] : obs) {
      if (!contains(name)) throw NotFound("observation names unknown node '" + name + "'");
    }
  }

 private:
  std::vector<BinaryNode> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> parent_index_;
};

namespace detail {

inline void require_unobserved(const BayesNet& net, const std::string& target,
                               const ObservationSet& obs) {
  net.check_observations(obs);
  net.index_of(target);
  if (obs.contains(target)) throw RangeError("target '" + target + "' is observed");
}

/// Visits every full assignment agreeing with `obs`, calling f(assignment, joint probability).
template <class F>
void enumerate_consistent(const BayesNet& net, const ObservationSet& obs, F&& f) {
  const std::size_t n = net.size();
  std::vector<std::size_t> free;
  Assignment a(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = obs.find(net.nodes()[i].name);
    if (it == obs.end()) {
      free.push_back(i);
    } else {
      a[i] = it->second;
    }
  }
  const std::uint64_t combos = std::uint64_t{1} << free.size();
  for (std::uint64_t mask = 0; mask < combos; ++mask) {
    for (std::size_t k = 0; k < free.size(); ++k) a[free[k]] = ((mask >> k) & 1u) != 0;
    f(a, net.joint_probability(a));
  }
}

}  // namespace detail

/// Marginal of `target` given `observations`, computed on the ancestrally
/// composed joint: condition the joint on the observations, then project.
inline prob::FiniteDist<bool> forward_marginal(const BayesNet& net, const std::string& target,
                                               const ObservationSet& observations) {
  detail::require_unobserved(net, target, observations);
  const std::size_t t = net.index_of(target);
  std::vector<std::pair<std::size_t, bool>> obs_idx;
  for (const auto& [name, value] : observations) obs_idx.emplace_back(net.index_of(name), value);
  const auto conditioned = prob::condition(net.joint(), [&](const Assignment& a) {
    for (const auto& [i, v] : obs_idx) {
      if (a[i] != v) return false;
    }
    return true;
  });
  return prob::map(conditioned.posterior, [t](const Assignment& a) { return bool{a[t]}; });
}

/// P(target | observations) by Bayes' rule over the observation-consistent
/// slice of the joint table: P(target, obs) / P(obs).
inline prob::FiniteDist<bool> posterior(const BayesNet& net, const std::string& target,
                                        const ObservationSet& observations) {
  detail::require_unobserved(net, target, observations);
  const std::size_t t = net.index_of(target);
  double with_true = 0.0;
  double evidence = 0.0;
  detail::enumerate_consistent(net, observations, [&](const Assignment& a, double p) {
    evidence += p;
    if (a[t]) with_true += p;
  });
  if (evidence <= 0.0) throw ImpossibleEvidence("observations have probability zero");
  return prob::FiniteDist<bool>::from_weighted({{true, with_true}, {false, evidence - with_true}});
}

/// Joint probability of the observed assignment.
inline double probability_of_evidence(const BayesNet& net, const ObservationSet& observations) {
  net.check_observations(observations);
  double evidence = 0.0;
  detail::enumerate_consistent(net, observations,
                               [&](const Assignment&, double p) { evidence += p; });
  return std::clamp(evidence, 0.0, 1.0);
}

/// 1 - POE(observations); higher means more surprising. Requires at least
/// one observation.
inline double contradiction_score(const BayesNet& net, const ObservationSet& observations) {
  if (observations.empty()) throw RangeError("contradiction score needs at least one observation");
  return 1.0 - probability_of_evidence(net, observations);
}

}  // namespace korra::bayes
