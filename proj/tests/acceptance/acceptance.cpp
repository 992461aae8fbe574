// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Each check recomputes its expectations from an independent oracle or a
// value written down by hand; nothing here reads the library's own results
// back as the reference.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "korra/bayes/bayes_net.hpp"
#include "korra/bayes/examples.hpp"
#include "korra/engine/engine.hpp"
#include "korra/engine/simulate.hpp"
#include "korra/model/json_io.hpp"
#include "korra/scheduler/scheduler.hpp"
#include "korra/stats/stats.hpp"
#include "korra/timing/timing.hpp"
#include "korra/triggers/engine.hpp"
#include "oracle.hpp"
#include "support.hpp"

namespace bayes = korra::bayes;
namespace sched = korra::scheduler;
namespace trig = korra::triggers;
using korra::engine::Engine;
using korra::engine::EngineOptions;
using korra::prob::RngStream;
using korra::session::LogEvent;
using korra::session::LogKind;

// Capability matrix: crossed trigger/effect combinations must not compile.
static_assert(!std::is_constructible_v<trig::MutEffect, trig::InjectInteraction>);
static_assert(!std::is_constructible_v<trig::MutEffect, trig::FacialCue>);
static_assert(!std::is_constructible_v<trig::MetEffect, trig::ResampleRequest>);
static_assert(!std::is_constructible_v<trig::MetEffect, trig::DistributionEdit>);
static_assert(std::is_constructible_v<trig::MutEffect, trig::DistributionEdit>);
static_assert(std::is_constructible_v<trig::MetEffect, trig::InjectInteraction>);

namespace {

/// Collects failure reasons for one criterion.
struct Check {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s.precision(12);
    s << what << ": got " << got << ", want " << want << " +- " << tol;
    expect(std::fabs(got - want) <= tol, s.str());
  }
};

struct Criterion {
  std::string name;
  double budget_s;
  std::function<void(Check&)> body;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string golden(const std::string& name) {
  auto s = read_file(std::string(KORRA_GOLDEN_DIR) + "/" + name);
  while (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

std::vector<const LogEvent*> of_kind(const std::vector<LogEvent>& events, LogKind k) {
  std::vector<const LogEvent*> out;
  for (const auto& e : events) {
    if (e.kind == k) out.push_back(&e);
  }
  return out;
}

korra::model::AgentModel with_opening(std::vector<std::string> ids) {
  auto doc = support::demo_json();
  doc["tuning"]["prepend_at_start"] = ids;
  return korra::model::load_model(doc);
}

std::string load_error(const nlohmann::json& doc) {
  try {
    korra::model::load_model(doc);
  } catch (const korra::ModelError& e) {
    return e.what();
  }
  return {};
}

void joke_model(Check& c) {
  c.near(bayes::joke_telling_rate(1.0, 1.0).weight_of(true), 0.4, 1e-12, "(1,1)");
  c.near(bayes::joke_telling_rate(1.0, 0.0).weight_of(true), 0.9, 1e-12, "(1,0)");
  c.near(bayes::joke_telling_rate(0.0, 1.0).weight_of(true), 0.2, 1e-12, "(0,1)");
  c.near(bayes::joke_telling_rate(0.0, 0.0).weight_of(true), 0.2, 1e-12, "(0,0)");
  // Summation order differs from the enumeration, so compare to the last few ulps.
  c.near(bayes::joke_telling_rate(0.8, 0.6).weight_of(true), oracle::joke_rate_by_hand(0.8, 0.6), 1e-12,
         "mixed priors (0.8, 0.6) against the 8-outcome enumeration");
}

void inference_oracle(Check& c) {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 5;
    const auto nodes = oracle::random_net(gen, n);
    const bayes::BayesNet net(nodes);
    const auto table = oracle::full_joint(nodes);
    for (unsigned pick = 0; pick < (1u << n); ++pick) {
      bayes::ObservationSet obs;
      for (std::size_t i = 0; i < n; ++i) {
        if ((pick >> i) & 1u) obs[nodes[i].name] = ((pick + trial) >> i) & 2u;
      }
      const std::string where = "net " + std::to_string(trial) + " evidence " + std::to_string(pick);
      for (const auto& node : nodes) {
        if (obs.contains(node.name)) continue;
        const double want = oracle::conditional_true(table, node.name, obs);
        c.near(bayes::forward_marginal(net, node.name, obs).weight_of(true), want, 1e-9, where + " forward " + node.name);
        c.near(bayes::posterior(net, node.name, obs).weight_of(true), want, 1e-9, where + " posterior " + node.name);
      }
      if (!obs.empty()) {
        c.near(bayes::contradiction_score(net, obs), 1.0 - oracle::evidence(table, obs), 1e-9, where + " contradiction");
      }
    }
  }
}

const std::vector<std::pair<std::string, double>> kDemoWeights{
    {"MakeSuggestion", 0.375},           {"AskUncertainFactQuestion", 0.00791}, {"AskPureFactQuestionAboutUser", 0.27729},
    {"SharePureFactInfoAboutBot", 0.316}, {"ChangeVisualAppearance", 0.0119},    {"ExpressMentalState", 0.0119},
    {"TellJoke", 0.0}};

void distribution_adherence(Check& c) {
  // Repeatable items make content effectively unlimited.
  const auto m = korra::model::load_model(
      support::tiny_json(kDemoWeights, std::vector<int>(kDemoWeights.size(), 3), true));
  sched::Scheduler s(m);
  RngStream rng(123, "content");
  korra::stats::InteractionsStat stats;
  const std::size_t n = 10000;
  const auto g = s.generate(n, {}, rng, stats);
  c.expect(g.items.size() == n, "batch shorter than requested");
  std::map<std::string, double> freq;
  for (const auto& item : g.items) freq[sched::category_of(item)] += 1.0 / static_cast<double>(n);
  for (const auto& [name, w] : kDemoWeights) c.near(freq[name], w, 0.015, name);
}

void fixed_preservation(Check& c) {
  const sched::MainDistribution base{{{"A", 0.3}, {"B", 0.4}, {"C", 0.3}}, {"A"}};
  const auto e = sched::effective_distribution(base, {"C"});
  c.near(e.weight("A"), 0.3, 1e-9, "A");
  c.near(e.weight("B"), 0.7, 1e-9, "B");
  c.expect(!e.weights.empty() && e.weights.size() == 2, "depleted C still present");
}

void within_category(Check& c) {
  for (int size = 2; size <= 20; ++size) {
    const auto m = korra::model::load_model(support::tiny_json({{"A", 1.0}}, {size}, true));
    const auto& cat = m.category("A");
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      sched::CategoryCursor cursor;
      RngStream rng(seed, "content");
      std::set<std::string> first_round;
      std::string prev;
      const std::string where = "size " + std::to_string(size) + " seed " + std::to_string(seed);
      for (int k = 0; k < 3 * size; ++k) {
        const auto id = sched::select_within_category(cursor, cat, m, {}, rng);
        if (!id) {
          c.expect(false, where + ": ran dry");
          break;
        }
        if (k < size) {
          c.expect(first_round.insert(*id).second, where + ": repeat inside permutation");
        } else {
          c.expect(*id != prev, where + ": immediate repeat");
        }
        prev = *id;
      }
    }
  }
}

void fit(Check& c) {
  c.expect(korra::stats::compute_fit({{4.0, 3.7, 3}, {6.0, 3.7, 2}}) == 42.5, "worked example is not 42.5");
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> t(0.0, 30.0);
  std::uniform_int_distribution<std::size_t> n(0, 12);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<korra::stats::FitTerm> terms;
    double by_hand = 0.0;
    for (int i = 0; i < 1 + trial % 7; ++i) {
      korra::stats::FitTerm term{t(gen), t(gen), n(gen)};
      terms.push_back(term);
      by_hand += (term.avg_time + term.avg_pause) * static_cast<double>(term.count);
    }
    c.expect(korra::stats::compute_fit(terms) == by_hand, "random input " + std::to_string(trial));
  }
}

void timing_statistics(Check& c) {
  using korra::timing::IntervalKind;
  const korra::timing::TimingParams p;
  struct Want {
    IntervalKind kind;
    const char* name;
    double mean, mean_tol, var, var_tol;
  };
  const Want wants[] = {{IntervalKind::smile, "smile", 12.0, 0.1, 3.0, 0.3},
                        {IntervalKind::gaze_hold, "gaze", 7.0, 0.1, 1.2, 0.15},
                        {IntervalKind::pause_new, "pause_new", 3.7, 0.05, 0.25, 0.05}};
  for (const auto& w : wants) {
    RngStream rng(7, "timing");
    std::vector<double> xs;
    for (int i = 0; i < 10000; ++i) xs.push_back(korra::timing::sample_interval(w.kind, p, rng));
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
    c.near(mean, w.mean, w.mean_tol, std::string(w.name) + " mean");
    c.near(var, w.var, w.var_tol, std::string(w.name) + " variance");
    c.expect(*std::min_element(xs.begin(), xs.end()) >= p.floor, std::string(w.name) + " below floor");
  }
}

void trigger_semantics(Check& c) {
  // Movie: halving before normalization, and only the unexecuted suffix changes.
  {
    auto doc = support::demo_json();
    doc["tuning"]["prepend_at_start"] = {"greet", "ask_movie"};
    doc["engine"]["max_queue"] = 1000;
    const auto m = korra::model::load_model(doc);
    Engine e(m, korra::session::fresh_state(m, 8, 0.0), EngineOptions{8, true, {}});
    korra::engine::ScriptedPolicy user({{"Yes", 1.0}});
    e.start();
    c.expect(e.run_step(user), "greeting step");
    const auto before = e.queue().items();
    const std::size_t cursor = e.queue().cursor();
    c.expect(e.run_step(user), "movie question step");
    c.near(e.scheduler().base().weight("MakeSuggestion"), 0.375 * 0.5, 1e-15, "MakeSuggestion pre-normalization weight");
    for (std::size_t i = 0; i <= cursor && i < e.queue().items().size(); ++i) {
      c.expect(sched::item_label(e.queue().items()[i], m) == sched::item_label(before[i], m),
               "executed prefix changed at " + std::to_string(i));
    }
    c.expect(e.counters().regenerations == 2, "movie answer did not regenerate exactly once");
  }
  // Surprise: injected at the head with a surprise cue.
  {
    const auto m = with_opening({"ask_age", "ask_twitch", "ask_likes_games"});
    Engine e(m, korra::session::fresh_state(m, 9, 0.0), EngineOptions{9, true, {}});
    korra::engine::ScriptedPolicy user({{"24", 1.0}, {"Yes", 1.0}, {"No", 1.0}});
    e.start();
    for (int i = 0; i < 3; ++i) c.expect(e.run_step(user), "surprise setup step");
    const auto* head = e.queue().empty() ? nullptr : std::get_if<sched::Injected>(&e.queue().peek());
    c.expect(head != nullptr, "queue head is not the injected interaction");
    if (head) c.expect(head->interaction.text == m.evaluate_triggers[0].inject.text, "wrong injected text");
    const auto cues = of_kind(e.log().events(), LogKind::nonverbal_cue);
    c.expect(std::any_of(cues.begin(), cues.end(), [](const LogEvent* x) { return x->payload == "surprise_face"; }),
             "no surprise cue");
  }
  // Capability matrix at validation time (the compile-time half is the static_asserts above).
  {
    auto doc = support::demo_json();
    for (auto& t : doc["triggers"]) {
      if (t["type"] == "update") t["inject"] = {{"category", "TellJoke"}, {"text", "x"}};
    }
    c.expect(!load_error(doc).empty(), "update trigger with inject accepted");
    auto doc2 = support::demo_json();
    for (auto& t : doc2["triggers"]) {
      if (t["type"] == "evaluate") t["resample"] = true;
    }
    c.expect(!load_error(doc2).empty(), "evaluate trigger with resample accepted");
    auto doc3 = support::demo_json();
    for (auto& t : doc3["triggers"]) {
      if (t["type"] == "evaluate") t["effects"] = {{{"category", "MakeSuggestion"}, {"multiply", 0.5}}};
    }
    c.expect(!load_error(doc3).empty(), "evaluate trigger with weight edit accepted");
  }
}

korra::engine::SimulationOptions sim(std::uint64_t seed, double duration, double speed = 0.0) {
  korra::engine::SimulationOptions o;
  o.seed = seed;
  o.duration_s = duration;
  o.speed = speed;
  return o;
}

void determinism_replay(Check& c) {
  const auto m = support::demo_model();
  const std::vector<korra::engine::ScriptEntry> script{
      {"Sam", 2.0}, {"Yes", 1.5}, {std::nullopt, {}}, {"No", 3.25}, {"Great", 0.8}};
  korra::engine::ScriptedPolicy a(script), b(script);
  const auto ra = korra::engine::simulate(m, a, sim(11, 1800));
  const auto rb = korra::engine::simulate(m, b, sim(11, 1800));
  c.expect(ra.replay_text == rb.replay_text, "same seed and script gave different logs");

  korra::engine::UniformRandomPolicy user(21, m.engine);
  const auto original = korra::engine::simulate(m, user, sim(21, 3600));
  const auto replayed_script = korra::engine::script_from_log(korra::session::parse_log(original.log_text));
  korra::engine::ScriptedPolicy replay(replayed_script);
  const auto again = korra::engine::simulate(m, replay, sim(21, 3600));
  c.expect(again.replay_text == original.replay_text, "replayed session differs from the original");
  c.expect(replay.remaining() == 0, "replay left answers unused");
}

void soak(Check& c) {
  const auto m = support::demo_model();
  const double horizon = 4 * 3600.0;
  for (const std::string policy : {"always_positive", "silent"}) {
    auto user = korra::engine::make_policy(policy, 31, m.engine);
    try {
      Engine e(m, korra::session::fresh_state(m, 31, 0.0), EngineOptions{31, true, {}});
      e.set_pacer(korra::engine::WallPacer(1000.0));
      e.start();
      std::size_t peak = 0;
      std::size_t timeouts_seen = 0;
      bool stalled = false;
      while (e.now() < horizon) {
        const double before = e.now();
        if (!e.run_step(*user)) break;
        peak = std::max(peak, e.queue().items().size());
        const std::size_t t = e.counters().timeouts;
        // After a timeout the next step must still move time forward.
        if (t > timeouts_seen && e.now() <= before) stalled = true;
        timeouts_seen = t;
      }
      c.expect(!stalled, policy + ": engine stalled after a timeout");
      c.expect(e.now() >= horizon, policy + ": session ended early at " + std::to_string(e.now()));
      c.expect(peak <= m.engine.max_queue,
               policy + ": queue reached " + std::to_string(peak) + " > " + std::to_string(m.engine.max_queue));
      if (policy == "silent") c.expect(e.counters().timeouts > 0, "silent user never timed out");
    } catch (const std::exception& ex) {
      c.expect(false, policy + ": threw " + ex.what());
    }
  }
}

void log_format(Check& c) {
  const auto m = support::demo_model();
  Engine e(m, korra::session::fresh_state(m, 2, 0.0), EngineOptions{2, true, {}});
  e.start();
  const auto hist = of_kind(e.log().events(), LogKind::histogram);
  const auto queue = of_kind(e.log().events(), LogKind::queue_snapshot);
  c.expect(!hist.empty() && hist[0]->payload == golden("histogram_seed2.txt"), "histogram block differs from golden");
  c.expect(!queue.empty() && queue[0]->payload == golden("queue_seed2.txt"), "queue block differs from golden");
  // Layout goldens written by hand.
  c.expect(golden("histogram_layout.txt") == golden("histogram_seed2.txt"), "histogram layout differs from hand-written layout");
  const auto layout = golden("queue_layout.txt");
  std::vector<std::string> labels;
  std::istringstream lines(layout);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) labels.push_back(line.substr(line.find(". ") + 2));
  c.expect(korra::session::queue_block(labels) == layout, "queue_block does not reproduce the hand-written layout");
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"joke-model exactness", 1.0, joke_model},
      {"inference oracle equivalence", 10.0, inference_oracle},
      {"main distribution adherence", 5.0, distribution_adherence},
      {"fixed-category preservation", 1.0, fixed_preservation},
      {"within-category selection", 30.0, within_category},
      {"FIT", 1.0, fit},
      {"timing statistics", 5.0, timing_statistics},
      {"trigger semantics", 10.0, trigger_semantics},
      {"determinism and replay", 30.0, determinism_replay},
      {"soak", 120.0, soak},
      {"log format", 5.0, log_format},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.body(c);
    } catch (const std::exception& ex) {
      c.failures.push_back(std::string("exception: ") + ex.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > cr.budget_s) c.failures.push_back("took " + std::to_string(secs) + " s, budget " + std::to_string(cr.budget_s));
    const bool ok = c.failures.empty();
    failed += !ok;
    std::printf("%s %s (%.2f s)\n", ok ? "PASS" : "FAIL", cr.name.c_str(), secs);
    for (const auto& f : c.failures) std::printf("     %s\n", f.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
