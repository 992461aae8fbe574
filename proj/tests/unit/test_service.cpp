#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include <httplib.h>

#include "korra/service/service.hpp"
#include "support.hpp"

using namespace korra;
using namespace std::chrono_literals;
using Json = nlohmann::json;

namespace {

/// A live engine on its own thread, served over HTTP on an ephemeral port.
class LiveFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    auto doc = support::demo_json();
    doc["tuning"]["prepend_at_start"] = {"ask_mood", "ask_twitch"};
    model_ = model::load_model(doc);
    engine_ = std::make_unique<engine::Engine>(model_, session::fresh_state(model_, 3, 0.0),
                                               engine::EngineOptions{3, true, {}});
    live_ = std::make_unique<service::LiveResponder>(channel_, kSpeed);
    engine_->set_pacer([this](double t) { live_->pace(t); });
    service_ = std::make_unique<service::Service>(*engine_, channel_);
    port_ = service_->start("127.0.0.1", 0);
    thread_ = std::thread([this] {
      engine_->start();
      engine_->run_until(600.0, *live_);
    });
  }

  void TearDown() override {
    channel_.close();
    thread_.join();
    service_->stop();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(15, 0);
    return c;
  }

  Json state() const {
    auto r = client().Get("/api/state");
    if (!r || r->status != 200) return Json();
    return Json::parse(r->body);
  }

  /// Polls /api/state until `pred` holds or a few seconds pass.
  template <class Pred>
  Json wait_for(Pred pred) const {
    const auto deadline = std::chrono::steady_clock::now() + 8s;
    while (std::chrono::steady_clock::now() < deadline) {
      auto s = state();
      if (!s.is_null() && pred(s)) return s;
      std::this_thread::sleep_for(20ms);
    }
    return Json();
  }

  Json wait_for_question(const std::string& id) const {
    return wait_for([&](const Json& s) { return !s["pending"].is_null() && s["pending"]["id"] == id; });
  }

  static constexpr double kSpeed = 4.0;
  model::AgentModel model_;
  service::CommandChannel channel_;
  std::unique_ptr<engine::Engine> engine_;
  std::unique_ptr<service::LiveResponder> live_;
  std::unique_ptr<service::Service> service_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace

TEST_F(LiveFixture, StateListsQueueAndDistribution) {
  const auto s = wait_for([](const Json& j) { return !j["queue"].empty(); });
  ASSERT_FALSE(s.is_null());
  EXPECT_FALSE(s["main_distribution"].empty());
  EXPECT_NE(s["histogram_text"].get<std::string>().find("MakeSuggestion"), std::string::npos);
  EXPECT_TRUE(s.contains("variables"));
}

TEST_F(LiveFixture, GreatDrivesMoodToPointNine) {
  const auto asked = wait_for_question("ask_mood");
  ASSERT_FALSE(asked.is_null());
  EXPECT_EQ(asked["pending"]["options"], Json({"Not so well", "Fine", "Great"}));
  auto r = client().Post("/api/respond", Json{{"response_label", "Great"}}.dump(), "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(Json::parse(r->body)["accepted"], true);
  const auto s = wait_for([](const Json& j) { return j["variables"]["InAGoodMood"] == 0.9; });
  EXPECT_FALSE(s.is_null());
}

TEST_F(LiveFixture, StaleQuestionIsRejected) {
  const auto asked = wait_for_question("ask_mood");
  ASSERT_FALSE(asked.is_null());
  const auto seq = asked["pending"]["seq"].get<std::uint64_t>();
  auto r = client().Post("/api/respond", Json{{"response_label", "Fine"}, {"question", seq + 7}}.dump(),
                         "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 409);
  EXPECT_EQ(state()["variables"]["InAGoodMood"], nullptr);
}

TEST_F(LiveFixture, BadBodiesAreRejected) {
  auto c = client();
  auto r = c.Post("/api/respond", "not json", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  r = c.Post("/api/respond", Json{{"colour", "red"}}.dump(), "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
}

TEST_F(LiveFixture, EventStreamCarriesEngineEvents) {
  std::vector<Json> events;
  std::string buffer;
  auto c = client();
  c.Get("/api/events", [&](const char* data, std::size_t n) {
    buffer.append(data, n);
    std::size_t end;
    while ((end = buffer.find("\n\n")) != std::string::npos) {
      const auto chunk = buffer.substr(0, end);
      buffer.erase(0, end + 2);
      if (chunk.starts_with("data: ")) events.push_back(Json::parse(chunk.substr(6)));
    }
    return std::none_of(events.begin(), events.end(), [](const Json& e) { return e["kind"] == "awaiting_response"; });
  });
  ASSERT_FALSE(events.empty());
  EXPECT_TRUE(std::any_of(events.begin(), events.end(), [](const Json& e) { return e["kind"] == "utterance"; }));
  const auto& last = events.back();
  EXPECT_EQ(last["kind"], "awaiting_response");
  EXPECT_EQ(last["payload"]["id"], "ask_mood");
  EXPECT_TRUE(last.contains("at"));
}

TEST(LiveResponder, TimesOutWithoutAnswers) {
  service::CommandChannel ch;
  service::LiveResponder live(ch, 100.0);
  engine::Question q;
  q.seq = 1;
  q.timeout = 5.0;
  const auto t0 = std::chrono::steady_clock::now();
  EXPECT_FALSE(live.await(q));
  EXPECT_GE(std::chrono::steady_clock::now() - t0, 45ms);
}

TEST(LiveResponder, RejectsAnswersForOtherQuestions) {
  service::CommandChannel ch;
  service::LiveResponder live(ch, 100.0);
  service::RespondCommand stale;
  stale.seq = 4;
  stale.text = "Yes";
  auto stale_result = stale.done.get_future();
  ch.push(std::move(stale));
  service::RespondCommand good;
  good.seq = 5;
  good.text = "No";
  auto good_result = good.done.get_future();
  ch.push(std::move(good));
  engine::Question q;
  q.seq = 5;
  q.timeout = 20.0;
  const auto a = live.await(q);
  ASSERT_TRUE(a);
  EXPECT_EQ(a->text, "No");
  EXPECT_LT(a->latency, q.timeout);
  EXPECT_FALSE(stale_result.get().accepted);
  EXPECT_TRUE(good_result.get().accepted);
}
