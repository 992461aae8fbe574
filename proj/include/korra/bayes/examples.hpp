#pragma once

#include "korra/bayes/bayes_net.hpp"
#include "korra/prob/finite_dist.hpp"

namespace korra::bayes {

/// Truth table for the joke-telling rate: a neutral rate when the user likes
/// jokes and is in a good mood, a boosted rate when they like jokes but are
/// in a bad mood, and a low rate otherwise.
constexpr double tell_joke_prob(bool likes_joke, bool in_good_mood) {
  if (likes_joke && in_good_mood) return 0.4;
  if (likes_joke && !in_good_mood) return 0.9;
  return 0.2;
}

/// P(tell a joke) composed from the two priors:
///   from like in LikesJoke, from mood in UserInAGoodMood,
///   from joke in Bernoulli(tell_joke_prob(like, mood)).
inline prob::FiniteDist<bool> joke_telling_rate(double likes_prior, double mood_prior) {
  const auto likes = prob::bernoulli(likes_prior);
  const auto mood = prob::bernoulli(mood_prior);
  return prob::bind(likes, [&](bool like) {
    return prob::bind(mood, [like](bool good) { return prob::bernoulli(tell_joke_prob(like, good)); });
  });
}

/// The same model as a three-node network (LikesJoke, UserInAGoodMood ->
/// JokeTellingRate).
inline BayesNet joke_net(double likes_prior, double mood_prior) {
  return BayesNet({
      {"LikesJoke", {}, {likes_prior}},
      {"UserInAGoodMood", {}, {mood_prior}},
      {"JokeTellingRate",
       {"LikesJoke", "UserInAGoodMood"},
       // rows: FF, FT, TF, TT
       {tell_joke_prob(false, false), tell_joke_prob(false, true), tell_joke_prob(true, false),
        tell_joke_prob(true, true)}},
  });
}

/// Video-game surprise network: Age (young) and HasTwitchAccount feed
/// UserLikesVideoGames, which feeds ThinksAVideoGameIsAGoodPresent.
/// The CPT numbers are illustrative defaults, shared with the demo model.
inline BayesNet video_game_surprise_net() {
  return BayesNet({
      {"Age", {}, {0.5}},
      {"HasTwitchAccount", {}, {0.5}},
      // rows: (young, twitch) = FF, FT, TF, TT
      {"UserLikesVideoGames", {"Age", "HasTwitchAccount"}, {0.2, 0.7, 0.6, 0.9}},
      {"ThinksAVideoGameIsAGoodPresent", {"UserLikesVideoGames"}, {0.1, 0.8}},
  });
}

}  // namespace korra::bayes
