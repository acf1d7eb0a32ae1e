#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <thread>
#include <type_traits>

#include "edgeoffload/common/error.h"

namespace edgeoffload::cluster {

// One thread that runs posted tasks in order, plus a periodic callback.
// Everything that touches control-plane state goes through here.
class Actor {
 public:
  Actor(std::chrono::milliseconds period, std::function<void()> on_period);
  ~Actor();
  Actor(const Actor&) = delete;
  Actor& operator=(const Actor&) = delete;

  void start();
  // Drains nothing: queued tasks that have not started are dropped and their
  // callers see InternalError.
  void stop();

  void post(std::function<void()> task);

  // Runs `f` on the actor thread and returns its result or rethrows.
  template <class F>
  auto call(F&& f) -> std::invoke_result_t<F> {
    using R = std::invoke_result_t<F>;
    if (std::this_thread::get_id() == thread_.get_id()) return f();
    auto task = std::make_shared<std::packaged_task<R()>>(std::forward<F>(f));
    auto result = task->get_future();
    post([task] { (*task)(); });
    return result.get();
  }

 private:
  void run();

  std::chrono::milliseconds period_;
  std::function<void()> on_period_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> tasks_;
  bool stopping_ = false;
  std::thread thread_;
};

}  // namespace edgeoffload::cluster
