#include "edgeoffload/cluster/actor.h"

#include <cstdio>

#include <fmt/format.h>

namespace edgeoffload::cluster {

Actor::Actor(std::chrono::milliseconds period, std::function<void()> on_period)
    : period_(period), on_period_(std::move(on_period)) {}

Actor::~Actor() { stop(); }

void Actor::start() {
  std::lock_guard lock(mu_);
  if (thread_.joinable()) return;
  stopping_ = false;
  thread_ = std::thread([this] { run(); });
}

void Actor::stop() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable() && std::this_thread::get_id() != thread_.get_id()) thread_.join();
  // Dropping a packaged_task breaks its promise, so waiting callers wake up.
  std::deque<std::function<void()>> dropped;
  {
    std::lock_guard lock(mu_);
    dropped.swap(tasks_);
  }
}

void Actor::post(std::function<void()> task) {
  {
    std::lock_guard lock(mu_);
    if (stopping_) throw InternalError("actor is stopped");
    tasks_.push_back(std::move(task));
  }
  cv_.notify_one();
}

void Actor::run() {
  auto next = std::chrono::steady_clock::now() + period_;
  for (;;) {
    std::function<void()> task;
    {
      std::unique_lock lock(mu_);
      cv_.wait_until(lock, next, [&] { return stopping_ || !tasks_.empty(); });
      if (stopping_) return;
      if (!tasks_.empty()) {
        task = std::move(tasks_.front());
        tasks_.pop_front();
      }
    }
    if (task) {
      try {
        task();
      } catch (const std::exception& e) {
        fmt::print(stderr, "actor task failed: {}\n", e.what());
      }
    }
    if (std::chrono::steady_clock::now() >= next) {
      try {
        if (on_period_) on_period_();
      } catch (const std::exception& e) {
        fmt::print(stderr, "periodic task failed: {}\n", e.what());
      }
      next = std::chrono::steady_clock::now() + period_;
    }
  }
}

}  // namespace edgeoffload::cluster
