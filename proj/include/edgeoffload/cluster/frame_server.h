#pragma once

#include <atomic>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <thread>

#include "edgeoffload/protocol/net.h"

namespace edgeoffload::cluster {

// Accept loop with one thread per connection. Each request frame is passed
// to the handler and its return value sent back. Exceptions thrown by the
// handler become ERROR replies:
//   ValidationError, ProtocolError   -> bad_request
//   NoCapacityError                  -> no_capacity
//   SubmissionError                  -> rejected
//   RemoteError                      -> the remote code
//   anything else                    -> internal
class FrameServer {
 public:
  using Handler = std::function<protocol::Message(const protocol::Message&)>;

  FrameServer(const protocol::Endpoint& listen, Handler handler);
  ~FrameServer();
  FrameServer(const FrameServer&) = delete;
  FrameServer& operator=(const FrameServer&) = delete;

  void start();
  void stop();
  // The bound address; port 0 in the listen endpoint is resolved here.
  protocol::Endpoint address() const { return listener_.local(); }

 private:
  struct Session {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };

  void accept_loop();
  void serve(protocol::Connection conn);
  protocol::Message dispatch(const protocol::Message& request);
  void reap(bool all);

  protocol::Listener listener_;
  Handler handler_;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::mutex sessions_mu_;
  std::list<Session> sessions_;
};

}  // namespace edgeoffload::cluster
