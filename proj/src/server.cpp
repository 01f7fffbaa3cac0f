#include "calibguide/server.hpp"

#include "httplib.h"

#include "calibguide/errors.hpp"

namespace calibguide {

namespace {

constexpr const char* kJson = "application/json";

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  res.status = http_status(code);
  res.set_content(error_json(code_string(code), message).dump(), kJson);
}

// Runs `fn` and maps every failure to an error body.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_error(res, e.code(), e.what());
  } catch (const json::exception& e) {
    send_error(res, ErrorCode::InvalidConfig, e.what());
  } catch (const std::exception& e) {
    res.status = 500;
    res.set_content(error_json("INTERNAL", e.what()).dump(), kJson);
  }
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return parse_json(req.body);
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::SessionNotFound:
      return 404;
    case ErrorCode::InvalidConfig:
      return 400;
    case ErrorCode::InsufficientViews:
      return 409;
    case ErrorCode::NotVisible:
    case ErrorCode::NoFeasibleCandidate:
    case ErrorCode::ConstraintUnsatisfiable:
    case ErrorCode::InsufficientPoints:
    case ErrorCode::DegenerateConfiguration:
    case ErrorCode::BehindCamera:
    case ErrorCode::DegenerateRays:
      return 422;
    default:
      return 500;
  }
}

GuidanceServer::GuidanceServer(SessionManager& sessions)
    : sessions_(sessions), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;

  srv.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const SessionConfig config = json_as<SessionConfig>(body_json(req));
      const std::string id = sessions_.create_session(config);
      res.set_content(json{{"id", id}, {"state", sessions_.state(id)}}.dump(), kJson);
    });
  });

  srv.Post(R"(/sessions/([0-9A-Za-z]+)/captures)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const CaptureRequest request = capture_request_from_json(body_json(req));
      res.set_content(sessions_.capture(req.matches[1], request).dump(), kJson);
    });
  });

  srv.Post(R"(/sessions/([0-9A-Za-z]+)/suggest)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { res.set_content(sessions_.suggest(req.matches[1]).dump(), kJson); });
  });

  srv.Get(R"(/sessions/([0-9A-Za-z]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { res.set_content(sessions_.state(req.matches[1]).dump(), kJson); });
  });

  srv.Get(R"(/sessions/([0-9A-Za-z]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      std::uint64_t since = 0;
      if (req.has_param("since")) since = std::stoull(req.get_param_value("since"));
      const bool stream = req.get_header_value("Accept").find("text/event-stream") != std::string::npos ||
                          req.get_param_value("stream") == "1";
      if (!stream) {
        long timeout = 0;
        if (req.has_param("timeout_ms")) timeout = std::stol(req.get_param_value("timeout_ms"));
        timeout = std::clamp(timeout, 0L, 60000L);
        res.set_content(sessions_.events_since(id, since, std::chrono::milliseconds(timeout)).dump(), kJson);
        return;
      }
      sessions_.state(id);  // SessionNotFound before the stream starts
      auto cursor = std::make_shared<std::uint64_t>(since);
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream", [this, id, cursor](size_t, httplib::DataSink& sink) {
            if (stopping_) return false;
            const json batch = sessions_.events_since(id, *cursor, std::chrono::milliseconds(500));
            for (const auto& e : batch) {
              *cursor = e.at("seq").get<std::uint64_t>();
              const std::string frame = "id: " + std::to_string(*cursor) + "\nevent: " +
                                        e.at("type").get<std::string>() + "\ndata: " + e.dump() + "\n\n";
              if (!sink.write(frame.data(), frame.size())) return false;
            }
            if (batch.empty()) {
              static const std::string keepalive = ": keepalive\n\n";
              if (!sink.write(keepalive.data(), keepalive.size())) return false;
            }
            return !stopping_;
          });
    });
  });
}

GuidanceServer::~GuidanceServer() { stop(); }

bool GuidanceServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

int GuidanceServer::bind_to_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool GuidanceServer::listen_after_bind() { return server_->listen_after_bind(); }

void GuidanceServer::stop() {
  stopping_ = true;
  server_->stop();
}

bool GuidanceServer::is_running() const { return server_->is_running(); }

}  // namespace calibguide
