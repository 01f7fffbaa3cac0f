#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "calibguide/pipeline.hpp"
#include "calibguide/planner.hpp"
#include "calibguide/serialization.hpp"

namespace calibguide {

enum class SessionMode { Guided, Freestyle };

std::string to_string(SessionMode mode);
SessionMode session_mode_from_string(const std::string& s);

struct SessionConfig {
  StereoRig rig;  // intrinsics plus the rig that simulated captures are rendered with
  BoardSpec board;
  SessionMode mode = SessionMode::Guided;
  std::uint64_t seed = 0;
  SearchConfig search;
  RandomPoseConstraints constraints;
  RobustKernel kernel;
  // Client stopping thresholds; 0 disables.
  double target_trace = 0.0;
  double target_rms_px = 0.0;
};

void to_json(json& j, const SessionConfig& c);
void from_json(const json& j, SessionConfig& c);

struct Capture {
  std::string source;  // "simulated" or "external"
  std::optional<Pose> pose;  // true board pose for simulated captures
  double sigma = 0.0;
  ViewPair view;
};

struct Suggestion {
  CandidatePose candidate;
  std::vector<Vec2> overlay;  // left-image corner pixels
  int view_count = 0;  // views the suggestion was computed from
};

struct SessionState {
  std::string id;
  SessionConfig config;
  std::vector<Capture> captures;
  std::optional<CalibrationResult> estimate;
  // Entry k is the trace with the first k+1 views at the latest estimate;
  // null before two views or when singular.
  std::vector<std::optional<double>> trace_history;
  std::optional<Suggestion> suggestion;
  std::uint64_t last_seq = 0;

  CalibrationDataset dataset() const;
  bool target_reached() const;
};

json state_to_json(const SessionState& state);

/// Session event {seq, type, data, state}; `state` is the session JSON after
/// the event.
struct SessionEvent {
  std::uint64_t seq = 0;
  std::string type;  // "created", "captured", "suggested"
  json data;
};

json event_to_json(const SessionEvent& e, const SessionState& after);

/// Folds one event into `state`. Captures recalibrate; suggestions are taken
/// from the event.
void apply_event(SessionState& state, const SessionEvent& event);

/// Rebuilds a session from its event sequence.
SessionState replay(const std::vector<SessionEvent>& events);

struct CaptureRequest {
  std::optional<Pose> pose;
  bool use_suggestion = false;
  bool random = false;
  double sigma = 0.5;
  // External corners; when set, no synthesis takes place.
  std::optional<std::vector<Vec2>> left_pixels;
  std::optional<std::vector<Vec2>> right_pixels;
};

CaptureRequest capture_request_from_json(const json& j);

/// Next optimal pose for a session document: either a state document as served
/// by SessionManager (with "config") or {rig, board, views, [estimate],
/// [search], [seed], [kernel]}. Without an estimate the views are calibrated
/// first. Returns the candidate plus its left-image overlay pixels.
json plan_next_pose(const json& session, const std::uint64_t* seed = nullptr);

/// Live sessions with optional persistence as JSONL event logs in `data_dir`.
/// Commands on one session are serialized; different sessions run in parallel.
class SessionManager {
 public:
  explicit SessionManager(std::string data_dir = {});

  std::string create_session(const SessionConfig& config);
  json capture(const std::string& id, const CaptureRequest& request);
  json suggest(const std::string& id);
  json state(const std::string& id);
  SessionState snapshot(const std::string& id);
  std::vector<SessionEvent> events(const std::string& id);

  /// Events with seq > since, as JSON. Waits up to `timeout` for one to arrive.
  json events_since(const std::string& id, std::uint64_t since,
                    std::chrono::milliseconds timeout = std::chrono::milliseconds(0));

 private:
  struct Entry {
    std::mutex mutex;
    std::condition_variable changed;
    SessionState state;
    std::vector<SessionEvent> events;
    std::vector<json> event_json;
  };

  std::shared_ptr<Entry> find(const std::string& id);
  void append(Entry& entry, SessionEvent event);

  std::string data_dir_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t created_ = 0;
};

}  // namespace calibguide
