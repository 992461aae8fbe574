#include <gtest/gtest.h>

#include <random>

#include "korra/bayes/bayes_net.hpp"
#include "korra/bayes/examples.hpp"
#include "oracle.hpp"

namespace bayes = korra::bayes;

TEST(JokeModel, TruthTable) {
  EXPECT_EQ(bayes::tell_joke_prob(true, true), 0.4);
  EXPECT_EQ(bayes::tell_joke_prob(true, false), 0.9);
  EXPECT_EQ(bayes::tell_joke_prob(false, true), 0.2);
  EXPECT_EQ(bayes::tell_joke_prob(false, false), 0.2);
}

TEST(JokeModel, DegeneratePriorsSelectOneCell) {
  EXPECT_NEAR(bayes::joke_telling_rate(1.0, 1.0).weight_of(true), 0.4, 1e-12);
  EXPECT_NEAR(bayes::joke_telling_rate(1.0, 0.0).weight_of(true), 0.9, 1e-12);
  EXPECT_NEAR(bayes::joke_telling_rate(0.0, 0.3).weight_of(true), 0.2, 1e-12);
}

TEST(JokeModel, MixedPriorsMatchEnumeration) {
  EXPECT_NEAR(bayes::joke_telling_rate(0.8, 0.6).weight_of(true), oracle::joke_rate_by_hand(0.8, 0.6), 1e-12);
  EXPECT_NEAR(bayes::joke_telling_rate(0.8, 0.6).weight_of(true), 0.52, 1e-12);
}

TEST(JokeModel, NetworkFormAgrees) {
  const auto net = bayes::joke_net(0.8, 0.6);
  EXPECT_NEAR(bayes::forward_marginal(net, "JokeTellingRate", {}).weight_of(true), 0.52, 1e-12);
  // Observing every parent reduces to the CPT row.
  EXPECT_NEAR(bayes::forward_marginal(net, "JokeTellingRate", {{"LikesJoke", true}, {"UserInAGoodMood", false}})
                  .weight_of(true),
              0.9, 1e-12);
  // Root with no evidence returns its prior.
  EXPECT_NEAR(bayes::forward_marginal(net, "LikesJoke", {}).weight_of(true), 0.8, 1e-12);
}

TEST(BayesNet, RejectsMalformedNetworks) {
  EXPECT_THROW(bayes::BayesNet({{"A", {}, {0.5}}, {"A", {}, {0.5}}}), korra::ModelError);
  EXPECT_THROW(bayes::BayesNet({{"A", {"B"}, {0.5, 0.5}}}), korra::ModelError);
  EXPECT_THROW(bayes::BayesNet({{"A", {}, {0.5, 0.1}}}), korra::ModelError);
  EXPECT_THROW(bayes::BayesNet({{"A", {}, {1.5}}}), korra::ModelError);
  EXPECT_THROW(bayes::BayesNet({{"A", {"B"}, {0.5, 0.5}}, {"B", {"A"}, {0.5, 0.5}}}), korra::ModelError);
}

TEST(BayesNet, OrdersNodesTopologically) {
  const bayes::BayesNet net({{"C", {"B"}, {0.1, 0.9}}, {"B", {"A"}, {0.2, 0.8}}, {"A", {}, {0.5}}});
  EXPECT_EQ(net.nodes()[0].name, "A");
  EXPECT_EQ(net.nodes()[2].name, "C");
}

TEST(Posterior, EmptyEvidenceEqualsPrior) {
  const auto net = bayes::video_game_surprise_net();
  for (const auto& node : net.nodes()) {
    EXPECT_NEAR(bayes::posterior(net, node.name, {}).weight_of(true),
                bayes::forward_marginal(net, node.name, {}).weight_of(true), 1e-12);
  }
}

TEST(Posterior, DeterministicChainInverts) {
  const bayes::BayesNet net({{"A", {}, {0.3}}, {"B", {"A"}, {0.0, 1.0}}});
  EXPECT_NEAR(bayes::posterior(net, "A", {{"B", true}}).weight_of(true), 1.0, 1e-12);
  EXPECT_NEAR(bayes::posterior(net, "A", {{"B", false}}).weight_of(false), 1.0, 1e-12);
}

TEST(Posterior, TwitchRaisesLikesVideoGames) {
  const auto net = bayes::video_game_surprise_net();
  const double prior = bayes::posterior(net, "UserLikesVideoGames", {}).weight_of(true);
  const double after = bayes::posterior(net, "UserLikesVideoGames", {{"HasTwitchAccount", true}}).weight_of(true);
  EXPECT_GT(after, prior);
  const auto table = oracle::full_joint(net.nodes());
  EXPECT_NEAR(after, oracle::conditional_true(table, "UserLikesVideoGames", {{"HasTwitchAccount", true}}), 1e-12);
}

TEST(Posterior, ObservedTargetAndImpossibleEvidence) {
  const bayes::BayesNet net({{"A", {}, {0.0}}, {"B", {"A"}, {0.0, 1.0}}});
  EXPECT_THROW(bayes::posterior(net, "A", {{"A", true}}), korra::RangeError);
  EXPECT_THROW(bayes::posterior(net, "A", {{"B", true}}), korra::ImpossibleEvidence);
  EXPECT_THROW(bayes::forward_marginal(net, "A", {{"B", true}}), korra::ImpossibleEvidence);
  EXPECT_THROW(bayes::posterior(net, "Nope", {}), korra::NotFound);
}

TEST(Contradiction, DeterministicConsistentScoresZero) {
  const bayes::BayesNet net({{"A", {}, {1.0}}, {"B", {"A"}, {0.0, 1.0}}});
  EXPECT_NEAR(bayes::contradiction_score(net, {{"A", true}, {"B", true}}), 0.0, 1e-12);
  EXPECT_NEAR(bayes::contradiction_score(net, {{"A", true}, {"B", false}}), 1.0, 1e-12);
}

TEST(Contradiction, SingleRootObservation) {
  const bayes::BayesNet net({{"A", {}, {0.7}}});
  EXPECT_NEAR(bayes::contradiction_score(net, {{"A", true}}), 0.3, 1e-12);
  EXPECT_THROW(bayes::contradiction_score(net, {}), korra::RangeError);
}

TEST(Contradiction, DenyingInferredPreferenceIsMoreSurprising) {
  const auto net = bayes::video_game_surprise_net();
  const bayes::ObservationSet denies{{"Age", true}, {"HasTwitchAccount", true}, {"UserLikesVideoGames", false}};
  const bayes::ObservationSet agrees{{"Age", true}, {"HasTwitchAccount", true}, {"UserLikesVideoGames", true}};
  const auto table = oracle::full_joint(net.nodes());
  EXPECT_NEAR(bayes::contradiction_score(net, denies), 1.0 - oracle::evidence(table, denies), 1e-12);
  EXPECT_NEAR(bayes::contradiction_score(net, agrees), 1.0 - oracle::evidence(table, agrees), 1e-12);
  EXPECT_GT(bayes::contradiction_score(net, denies), bayes::contradiction_score(net, agrees));
}

TEST(Contradiction, AddingObservationNeverRaisesEvidence) {
  const auto net = bayes::video_game_surprise_net();
  std::vector<std::string> names;
  for (const auto& n : net.nodes()) names.push_back(n.name);
  for (unsigned mask = 1; mask < 81; ++mask) {  // every partial assignment, base 3
    bayes::ObservationSet obs;
    unsigned m = mask;
    for (const auto& name : names) {
      const unsigned digit = m % 3;
      m /= 3;
      if (digit) obs[name] = digit == 2;
    }
    if (obs.empty()) continue;
    const double score = bayes::contradiction_score(net, obs);
    EXPECT_GE(score, 0.0);
    EXPECT_LE(score, 1.0);
    for (const auto& name : names) {
      if (obs.contains(name)) continue;
      for (bool v : {true, false}) {
        auto more = obs;
        more[name] = v;
        EXPECT_LE(bayes::probability_of_evidence(net, more), bayes::probability_of_evidence(net, obs) + 1e-12);
      }
    }
  }
}

TEST(Inference, AgreesWithJointTableOnRandomNets) {
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
      for (const auto& node : nodes) {
        if (obs.contains(node.name)) continue;
        const double expected = oracle::conditional_true(table, node.name, obs);
        EXPECT_NEAR(bayes::forward_marginal(net, node.name, obs).weight_of(true), expected, 1e-9);
        EXPECT_NEAR(bayes::posterior(net, node.name, obs).weight_of(true), expected, 1e-9);
      }
      if (!obs.empty()) {
        EXPECT_NEAR(bayes::contradiction_score(net, obs), 1.0 - oracle::evidence(table, obs), 1e-9);
      }
    }
  }
}
