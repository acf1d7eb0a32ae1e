#include "edgeoffload/cluster/frame_server.h"

#include <cstdio>

#include <fmt/format.h>

#include "edgeoffload/cluster/control_plane.h"

namespace edgeoffload::cluster {

using protocol::Message;
namespace ec = protocol::error_code;

namespace {

constexpr std::chrono::milliseconds kPoll{250};

}  // namespace

FrameServer::FrameServer(const protocol::Endpoint& listen, Handler handler)
    : listener_(listen), handler_(std::move(handler)) {}

FrameServer::~FrameServer() { stop(); }

void FrameServer::start() {
  if (accept_thread_.joinable()) return;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void FrameServer::stop() {
  stopping_ = true;
  listener_.close();
  if (accept_thread_.joinable()) accept_thread_.join();
  reap(true);
}

void FrameServer::reap(bool all) {
  std::list<Session> finished;
  {
    std::lock_guard lock(sessions_mu_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      if (all || it->done->load()) {
        finished.splice(finished.end(), sessions_, it++);
      } else {
        ++it;
      }
    }
  }
  for (auto& s : finished) s.thread.join();
}

void FrameServer::accept_loop() {
  while (!stopping_) {
    std::optional<protocol::Connection> conn;
    try {
      conn = listener_.accept(kPoll);
    } catch (const std::exception& e) {
      if (!stopping_) fmt::print(stderr, "accept failed: {}\n", e.what());
      continue;
    }
    reap(false);
    if (!conn) continue;
    auto done = std::make_shared<std::atomic<bool>>(false);
    std::lock_guard lock(sessions_mu_);
    sessions_.push_back(Session{
        std::thread([this, c = std::move(*conn), done]() mutable {
          serve(std::move(c));
          *done = true;
        }),
        done});
  }
}

void FrameServer::serve(protocol::Connection conn) {
  while (!stopping_) {
    std::optional<Message> request;
    try {
      request = conn.receive(kPoll);
    } catch (const protocol::TimeoutError&) {
      continue;
    } catch (const protocol::ProtocolError& e) {
      // The frame was consumed for parse and schema errors, but the stream
      // position is unknown after a framing error; answer and hang up.
      try {
        Message anon;
        anon.id = "0";
        conn.send(protocol::make_error(anon, ec::kBadRequest, e.what()));
      } catch (const std::exception&) {
      }
      return;
    } catch (const std::exception&) {
      return;
    }
    if (!request) return;
    Message reply = dispatch(*request);
    try {
      conn.send(reply);
    } catch (const std::exception&) {
      return;
    }
  }
}

Message FrameServer::dispatch(const Message& request) {
  try {
    return handler_(request);
  } catch (const protocol::RemoteError& e) {
    return protocol::make_error(request, e.code(), e.what());
  } catch (const NoCapacityError& e) {
    return protocol::make_error(request, ec::kNoCapacity, e.what());
  } catch (const SubmissionError& e) {
    return protocol::make_error(request, ec::kRejected, e.what());
  } catch (const ValidationError& e) {
    return protocol::make_error(request, ec::kBadRequest, e.what());
  } catch (const protocol::ProtocolError& e) {
    return protocol::make_error(request, ec::kBadRequest, e.what());
  } catch (const std::exception& e) {
    return protocol::make_error(request, ec::kInternal, e.what());
  }
}

}  // namespace edgeoffload::cluster
