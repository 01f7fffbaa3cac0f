#pragma once

#include <atomic>
#include <memory>
#include <string>

#include "calibguide/session.hpp"

namespace httplib {
class Server;
}

namespace calibguide {

/// HTTP status for an error code.
int http_status(ErrorCode code);

/// REST + server-push front end of a SessionManager.
///   POST /sessions                  SessionConfig      -> {id, state}
///   POST /sessions/{id}/captures    CaptureRequest     -> state
///   POST /sessions/{id}/suggest                        -> suggestion
///   GET  /sessions/{id}                                -> state
///   GET  /sessions/{id}/events      text/event-stream, or ?since=N&timeout_ms=T long-poll
/// Errors are {code, message}.
class GuidanceServer {
 public:
  explicit GuidanceServer(SessionManager& sessions);
  ~GuidanceServer();

  /// Binds and serves until stop(); false if binding failed.
  bool listen(const std::string& host, int port);
  /// Binds to a free port and returns it; serve with listen_after_bind().
  int bind_to_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  bool is_running() const;

 private:
  SessionManager& sessions_;
  std::unique_ptr<httplib::Server> server_;
  std::atomic<bool> stopping_{false};
};

}  // namespace calibguide
