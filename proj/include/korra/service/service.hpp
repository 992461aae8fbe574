#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <future>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "korra/engine/engine.hpp"
#include "korra/engine/policy.hpp"

namespace korra::service {

using Json = nlohmann::json;
using Clock = std::chrono::steady_clock;

struct RespondResult {
  bool accepted = false;
  std::string reason;
};

/// An answer submitted from outside the engine thread.
struct RespondCommand {
  std::uint64_t seq = 0;
  std::string text;
  std::promise<RespondResult> done;
};

/// Commands in, one consumer (the engine thread).
class CommandChannel {
 public:
  void push(RespondCommand c) {
    {
      std::lock_guard lock(mu_);
      if (closed_) {
        c.done.set_value({false, "engine stopped"});
        return;
      }
      items_.push_back(std::move(c));
    }
    cv_.notify_all();
  }

  /// Waits until `deadline` for a command; nullopt on timeout or close.
  std::optional<RespondCommand> pop_until(Clock::time_point deadline) {
    std::unique_lock lock(mu_);
    cv_.wait_until(lock, deadline, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    auto c = std::move(items_.front());
    items_.pop_front();
    return c;
  }

  void close() {
    std::deque<RespondCommand> rest;
    {
      std::lock_guard lock(mu_);
      closed_ = true;
      rest.swap(items_);
    }
    for (auto& c : rest) c.done.set_value({false, "engine stopped"});
    cv_.notify_all();
  }

  bool closed() const {
    std::lock_guard lock(mu_);
    return closed_;
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<RespondCommand> items_;
  bool closed_ = false;
};

/// Waits in wall-clock time for answers arriving on a channel. The virtual
/// clock runs `speed` times faster than the wall clock. Answers for any
/// other question than the one asked are rejected as stale.
class LiveResponder final : public engine::Responder {
 public:
  LiveResponder(CommandChannel& channel, double speed) : channel_(&channel), speed_(speed > 0.0 ? speed : 1.0) {
    start_ = Clock::now();
  }

  std::optional<engine::Answer> await(const engine::Question& q) override {
    const auto asked = Clock::now();
    const auto deadline = asked + to_wall(q.timeout);
    while (true) {
      auto c = channel_->pop_until(deadline);
      if (!c) return std::nullopt;
      if (c->seq != q.seq) {
        c->done.set_value({false, "stale question"});
        continue;
      }
      const double latency = std::chrono::duration<double>(Clock::now() - asked).count() * speed_;
      c->done.set_value({true, {}});
      return engine::Answer{c->text, std::min(engine::quantize_ms(latency), std::max(0.0, q.timeout - 0.001))};
    }
  }
  std::string name() const override { return "live"; }

  /// Pacer: sleeps until virtual time `t` is due, rejecting any answer that
  /// arrives while no question is open.
  void pace(double t) {
    const auto due = start_ + to_wall(t);
    while (true) {
      auto c = channel_->pop_until(due);
      if (!c) return;
      c->done.set_value({false, "no pending question"});
    }
  }

 private:
  Clock::duration to_wall(double virtual_seconds) const {
    return std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(virtual_seconds / speed_));
  }

  CommandChannel* channel_;
  double speed_;
  Clock::time_point start_;
};

/// Fan-out of engine events to event-stream subscribers.
class EventHub {
 public:
  struct Subscriber {
    std::deque<std::string> messages;
  };

  std::shared_ptr<Subscriber> subscribe() {
    std::lock_guard lock(mu_);
    auto s = std::make_shared<Subscriber>();
    subs_.push_back(s);
    return s;
  }

  void unsubscribe(const std::shared_ptr<Subscriber>& s) {
    std::lock_guard lock(mu_);
    subs_.remove(s);
  }

  void publish(const std::string& message) {
    {
      std::lock_guard lock(mu_);
      for (auto& s : subs_) {
        s->messages.push_back(message);
        // A stalled client must not grow memory without bound.
        while (s->messages.size() > kMaxBacklog) s->messages.pop_front();
      }
    }
    cv_.notify_all();
  }

  /// Next message for `s`, waiting up to `wait`; nullopt on timeout or stop.
  std::optional<std::string> next(const std::shared_ptr<Subscriber>& s, Clock::duration wait) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, wait, [&] { return !s->messages.empty() || stopped_; });
    if (s->messages.empty()) return std::nullopt;
    auto m = std::move(s->messages.front());
    s->messages.pop_front();
    return m;
  }

  void stop() {
    {
      std::lock_guard lock(mu_);
      stopped_ = true;
    }
    cv_.notify_all();
  }

  bool stopped() const {
    std::lock_guard lock(mu_);
    return stopped_;
  }

 private:
  static constexpr std::size_t kMaxBacklog = 4096;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::list<std::shared_ptr<Subscriber>> subs_;
  bool stopped_ = false;
};

/// HTTP surface over a running engine:
///   GET  /api/state    latest engine snapshot
///   POST /api/respond  {"response_label": ...} or {"free_text": ...}, optional "question" seq
///   GET  /api/events   server-sent events, one JSON object {at, kind, payload} each
/// The engine thread publishes whole snapshots under a mutex, so readers
/// never see a partially updated state.
class Service {
 public:
  Service(engine::Engine& e, CommandChannel& channel) : engine_(&e), channel_(&channel) {
    e.set_sink([this](const engine::EngineEvent& ev) { publish(ev); });
    publish_snapshot();
    routes();
  }

  ~Service() { stop(); }

  /// Binds and serves on a background thread; returns the bound port.
  int start(const std::string& host, int port) {
    const int bound = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return bound;
  }

  void stop() {
    hub_.stop();
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  /// Refreshes the published snapshot; call on the engine thread.
  void publish_snapshot() {
    auto s = engine_->snapshot();
    std::lock_guard lock(mu_);
    snapshot_ = std::move(s);
  }

  Json snapshot() const {
    std::lock_guard lock(mu_);
    return snapshot_;
  }

  /// Snapshot refresh plus fan-out of `ev`; this is the engine sink the
  /// constructor installs. Call on the engine thread.
  void publish(const engine::EngineEvent& ev) {
    publish_snapshot();
    hub_.publish(Json{{"at", ev.at}, {"kind", ev.kind}, {"payload", ev.payload}}.dump());
  }

 private:

  void routes() {
    server_.Get("/api/state", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(snapshot().dump(), "application/json");
    });

    server_.Post("/api/respond", [this](const httplib::Request& req, httplib::Response& res) {
      auto reply = [&](int status, Json body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
      };
      Json body;
      try {
        body = Json::parse(req.body);
      } catch (const Json::exception&) {
        return reply(400, {{"error", "body must be a JSON object"}});
      }
      std::string text;
      if (body.contains("response_label") && body["response_label"].is_string()) {
        text = body["response_label"].get<std::string>();
      } else if (body.contains("free_text") && body["free_text"].is_string()) {
        text = body["free_text"].get<std::string>();
      } else {
        return reply(400, {{"error", "expected response_label or free_text"}});
      }
      const auto pending = snapshot()["pending"];
      std::uint64_t seq = 0;
      if (body.contains("question") && body["question"].is_number_unsigned()) {
        seq = body["question"].get<std::uint64_t>();
      } else if (!pending.is_null()) {
        seq = pending["seq"].get<std::uint64_t>();
      }
      if (pending.is_null() || pending["seq"].get<std::uint64_t>() != seq) {
        return reply(409, {{"error", "stale question"}, {"accepted", false}});
      }
      RespondCommand cmd;
      cmd.seq = seq;
      cmd.text = text;
      auto fut = cmd.done.get_future();
      channel_->push(std::move(cmd));
      if (fut.wait_for(std::chrono::seconds(10)) != std::future_status::ready) {
        return reply(409, {{"error", "stale question"}, {"accepted", false}});
      }
      const auto r = fut.get();
      if (!r.accepted) return reply(409, {{"error", r.reason}, {"accepted", false}});
      reply(200, {{"accepted", true}, {"question", seq}});
    });

    server_.Get("/api/events", [this](const httplib::Request&, httplib::Response& res) {
      auto sub = hub_.subscribe();
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream",
          [this, sub](std::size_t, httplib::DataSink& sink) {
            if (hub_.stopped()) {
              sink.done();
              return true;
            }
            const auto msg = hub_.next(sub, std::chrono::milliseconds(500));
            const std::string chunk = msg ? "data: " + *msg + "\n\n" : ": keep-alive\n\n";
            return sink.write(chunk.data(), chunk.size());
          },
          [this, sub](bool) { hub_.unsubscribe(sub); });
    });
  }

  engine::Engine* engine_;
  CommandChannel* channel_;
  httplib::Server server_;
  EventHub hub_;
  std::thread thread_;
  mutable std::mutex mu_;
  Json snapshot_;
};

}  // namespace korra::service
