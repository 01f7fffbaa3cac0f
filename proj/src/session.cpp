#include "calibguide/session.hpp"

#include <filesystem>
#include <fstream>
#include <random>

#include "calibguide/errors.hpp"
#include "calibguide/simharness.hpp"

namespace calibguide {

namespace fs = std::filesystem;

namespace {

// Per-session RNG streams.
constexpr std::uint64_t kCaptureNoise = 1000;
constexpr std::uint64_t kCapturePose = 2000;
constexpr std::uint64_t kSuggest = 3000;

std::optional<double> prefix_trace(const SessionState& state, size_t count) {
  if (count < 2 || !state.estimate) return std::nullopt;
  const CalibrationDataset data = state.dataset();
  const std::span<const ViewPair> prefix(data.views.data(), count);
  try {
    const CovarianceReport report = relative_covariance(
        assemble_info(prefix, data.rig(state.estimate->relative), state.config.search.jacobian));
    return trace_objective(report, state.config.search.weights);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularInformation) throw;
    return std::nullopt;
  }
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json suggestion_to_json(const Suggestion& s) {
  json j = s.candidate;
  j["overlay"] = pixels_to_json(s.overlay);
  j["view_count"] = s.view_count;
  return j;
}

Suggestion suggestion_from_json(const json& j) {
  Suggestion s;
  s.candidate.pose = j.at("pose").get<Pose>();
  s.candidate.visible = j.at("visible").get<bool>();
  s.candidate.trace = j.at("trace").is_null() ? 0.0 : j.at("trace").get<double>();
  s.candidate.iterations = j.value("iterations", 0);
  s.overlay = pixels_from_json(j.at("overlay"));
  s.view_count = j.value("view_count", 0);
  return s;
}

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id) {
    if (!std::isxdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

SessionEvent event_from_json(const json& j) {
  SessionEvent e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.type = j.at("type").get<std::string>();
  e.data = j.at("data");
  return e;
}

// A session document is either a service state document (with "config") or a flat
// {rig, board, views, [estimate], [search], [seed]} object.
struct SessionFile {
  StereoRig rig;
  CalibrationDataset dataset;
  SearchConfig search;
  RobustKernel kernel;
  std::optional<CalibrationResult> estimate;
};

SessionFile load_session(const json& doc) {
  SessionFile s;
  json views;
  if (doc.contains("config")) {
    const SessionConfig config = json_as<SessionConfig>(doc.at("config"));
    s.rig = config.rig;
    s.search = config.search;
    s.search.seed = mix_seed(config.seed, kSuggest + doc.at("views").size());
    s.kernel = config.kernel;
    views = doc.at("views");
  } else {
    s.rig = json_as<StereoRig>(doc.at("rig"));
    if (doc.contains("search")) s.search = json_as<SearchConfig>(doc.at("search"));
    if (doc.contains("seed")) s.search.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("kernel")) s.kernel = RobustKernel::parse(doc.at("kernel").get<std::string>());
    views = doc.at("views");
  }
  json data = {{"left", s.rig.left}, {"right", s.rig.right}, {"views", views}};
  data["board"] = doc.contains("config") ? doc.at("config").at("board") : doc.at("board");
  s.dataset = json_as<CalibrationDataset>(data);
  if (doc.contains("estimate") && !doc.at("estimate").is_null()) {
    s.estimate = json_as<CalibrationResult>(doc.at("estimate"));
    if (s.estimate->per_view_left_abs.size() != s.dataset.views.size()) {
      throw Error(ErrorCode::InvalidConfig, "estimate must carry one left pose per view");
    }
  }
  return s;
}

}  // namespace

std::string to_string(SessionMode mode) { return mode == SessionMode::Guided ? "guided" : "freestyle"; }

SessionMode session_mode_from_string(const std::string& s) {
  if (s == "guided") return SessionMode::Guided;
  if (s == "freestyle") return SessionMode::Freestyle;
  throw Error(ErrorCode::InvalidConfig, "mode must be guided or freestyle");
}

void to_json(json& j, const SessionConfig& c) {
  j = json{{"rig", c.rig},
           {"board", c.board},
           {"mode", to_string(c.mode)},
           {"seed", c.seed},
           {"search", c.search},
           {"constraints", c.constraints},
           {"kernel", c.kernel.to_string()},
           {"target_trace", c.target_trace},
           {"target_rms_px", c.target_rms_px}};
}

void from_json(const json& j, SessionConfig& c) {
  c = SessionConfig{};
  c.rig = j.at("rig").get<StereoRig>();
  c.board = j.at("board").get<BoardSpec>();
  if (j.contains("mode")) c.mode = session_mode_from_string(j.at("mode").get<std::string>());
  c.seed = j.value("seed", c.seed);
  if (j.contains("search")) c.search = j.at("search").get<SearchConfig>();
  if (j.contains("constraints")) c.constraints = j.at("constraints").get<RandomPoseConstraints>();
  if (j.contains("kernel")) c.kernel = RobustKernel::parse(j.at("kernel").get<std::string>());
  c.target_trace = j.value("target_trace", 0.0);
  c.target_rms_px = j.value("target_rms_px", 0.0);
}

CalibrationDataset SessionState::dataset() const {
  CalibrationDataset d;
  d.left = config.rig.left;
  d.right = config.rig.right;
  d.board = config.board;
  for (size_t i = 0; i < captures.size(); ++i) {
    ViewPair v = captures[i].view;
    if (estimate && i < estimate->per_view_left_abs.size()) v.left_abs = estimate->per_view_left_abs[i];
    d.views.push_back(std::move(v));
  }
  return d;
}

bool SessionState::target_reached() const {
  if (!estimate) return false;
  bool any = false;
  bool reached = true;
  if (config.target_trace > 0.0) {
    any = true;
    const auto& last = trace_history.empty() ? std::optional<double>{} : trace_history.back();
    reached = reached && last && *last <= config.target_trace;
  }
  if (config.target_rms_px > 0.0) {
    any = true;
    reached = reached && estimate->rms_reproj <= config.target_rms_px;
  }
  return any && reached;
}

json state_to_json(const SessionState& state) {
  json j;
  j["id"] = state.id;
  j["config"] = state.config;
  j["view_count"] = state.captures.size();

  json captures = json::array();
  json views = json::array();
  for (const auto& c : state.captures) {
    captures.push_back({{"source", c.source},
                        {"pose", c.pose ? json(*c.pose) : json(nullptr)},
                        {"sigma", c.sigma}});
    views.push_back({{"left_pixels", pixels_to_json(c.view.left_pixels)},
                     {"right_pixels", pixels_to_json(c.view.right_pixels)}});
  }
  j["captures"] = captures;
  j["views"] = views;

  json history = json::array();
  for (const auto& t : state.trace_history) history.push_back(optional_number(t));
  j["trace_history"] = history;

  j["estimate"] = state.estimate ? json(*state.estimate) : json(nullptr);
  if (state.estimate) {
    const CalibrationDataset data = state.dataset();
    const ReprojectionStats re = reprojection_error_stats(data, *state.estimate);
    j["stats"] = {{"reprojection_rms_px", re.rms},
                  {"reprojection_mean_px", re.mean},
                  {"triangulation_error_mm", triangulation_error_stats(data, *state.estimate)}};
    // Against the configured rig; meaningful when captures are simulated.
    j["errors"] = {{"rotation_error_deg", rotation_error(state.config.rig.relative, state.estimate->relative)},
                   {"translation_error_pct",
                    translation_error(state.config.rig.relative.tvec, state.estimate->relative.tvec)}};
  } else {
    j["stats"] = nullptr;
    j["errors"] = nullptr;
  }
  j["suggestion"] = state.suggestion ? suggestion_to_json(*state.suggestion) : json(nullptr);
  j["target_reached"] = state.target_reached();
  j["last_seq"] = state.last_seq;
  return j;
}

json event_to_json(const SessionEvent& e, const SessionState& after) {
  return json{{"seq", e.seq}, {"type", e.type}, {"data", e.data}, {"state", state_to_json(after)}};
}

void apply_event(SessionState& state, const SessionEvent& event) {
  if (event.type == "created") {
    state = SessionState{};
    state.id = event.data.at("id").get<std::string>();
    state.config = event.data.at("config").get<SessionConfig>();
  } else if (event.type == "captured") {
    Capture c;
    c.source = event.data.at("source").get<std::string>();
    if (event.data.contains("pose") && !event.data.at("pose").is_null()) {
      c.pose = event.data.at("pose").get<Pose>();
    }
    c.sigma = event.data.value("sigma", 0.0);
    c.view.board = state.config.board;
    c.view.left_pixels = pixels_from_json(event.data.at("left_pixels"));
    c.view.right_pixels = pixels_from_json(event.data.at("right_pixels"));
    c.view.validate();
    state.captures.push_back(std::move(c));
    state.suggestion.reset();

    if (state.captures.size() >= 2) {
      const CalibrationDataset data = state.dataset();
      state.estimate = recalibrate(data, state.estimate ? &*state.estimate : nullptr, state.config.kernel);
    }
    state.trace_history.clear();
    for (size_t k = 1; k <= state.captures.size(); ++k) state.trace_history.push_back(prefix_trace(state, k));
  } else if (event.type == "suggested") {
    state.suggestion = suggestion_from_json(event.data);
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown event type: " + event.type);
  }
  state.last_seq = event.seq;
}

SessionState replay(const std::vector<SessionEvent>& events) {
  SessionState state;
  for (const auto& e : events) apply_event(state, e);
  return state;
}

CaptureRequest capture_request_from_json(const json& j) {
  CaptureRequest r;
  if (j.contains("pose") && !j.at("pose").is_null()) r.pose = j.at("pose").get<Pose>();
  r.use_suggestion = j.value("use_suggestion", false);
  r.random = j.value("random", false);
  r.sigma = j.value("sigma", r.sigma);
  if (r.sigma < 0.0) throw Error(ErrorCode::InvalidConfig, "sigma must be >= 0");
  if (j.contains("left_pixels") || j.contains("right_pixels")) {
    r.left_pixels = pixels_from_json(j.at("left_pixels"));
    r.right_pixels = pixels_from_json(j.at("right_pixels"));
  }
  return r;
}

SessionManager::SessionManager(std::string data_dir) : data_dir_(std::move(data_dir)) {
  if (!data_dir_.empty()) fs::create_directories(data_dir_);
}

std::shared_ptr<SessionManager::Entry> SessionManager::find(const std::string& id) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
  if (!valid_id(id) || data_dir_.empty()) {
    throw Error(ErrorCode::SessionNotFound, "no session " + id);
  }
  const fs::path path = fs::path(data_dir_) / (id + ".jsonl");
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SessionNotFound, "no session " + id);
  auto entry = std::make_shared<Entry>();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    SessionEvent e = event_from_json(parse_json(line));
    apply_event(entry->state, e);
    entry->event_json.push_back(event_to_json(e, entry->state));
    entry->events.push_back(std::move(e));
  }
  sessions_.emplace(id, entry);
  return entry;
}

void SessionManager::append(Entry& entry, SessionEvent event) {
  SessionState next = entry.state;
  apply_event(next, event);
  if (!data_dir_.empty()) {
    std::ofstream out(fs::path(data_dir_) / (next.id + ".jsonl"), std::ios::app | std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write session log");
    out << json{{"seq", event.seq}, {"type", event.type}, {"data", event.data}}.dump() << '\n';
  }
  entry.state = std::move(next);
  entry.event_json.push_back(event_to_json(event, entry.state));
  entry.events.push_back(std::move(event));
  entry.changed.notify_all();
}

std::string SessionManager::create_session(const SessionConfig& config) {
  config.rig.left.validate();
  config.rig.right.validate();
  config.board.validate();
  config.search.validate();
  config.constraints.validate();

  std::string id;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    std::random_device device;
    const std::uint64_t entropy = (static_cast<std::uint64_t>(device()) << 32) ^ device();
    char buf[17];
    do {
      std::snprintf(buf, sizeof(buf), "%016llx",
                    static_cast<unsigned long long>(mix_seed(entropy, ++created_)));
      id = buf;
    } while (sessions_.count(id) ||
             (!data_dir_.empty() && fs::exists(fs::path(data_dir_) / (id + ".jsonl"))));
    sessions_.emplace(id, std::make_shared<Entry>());
  }
  auto entry = find(id);
  std::lock_guard<std::mutex> lock(entry->mutex);
  append(*entry, SessionEvent{1, "created", json{{"id", id}, {"config", config}}});
  return id;
}

json SessionManager::capture(const std::string& id, const CaptureRequest& request) {
  auto entry = find(id);
  std::lock_guard<std::mutex> lock(entry->mutex);
  const SessionState& state = entry->state;
  const auto index = static_cast<std::uint64_t>(state.captures.size());

  json data;
  if (request.left_pixels) {
    ViewPair view;
    view.board = state.config.board;
    view.left_pixels = *request.left_pixels;
    view.right_pixels = *request.right_pixels;
    view.validate();
    data = {{"source", "external"},
            {"pose", nullptr},
            {"sigma", 0.0},
            {"left_pixels", pixels_to_json(view.left_pixels)},
            {"right_pixels", pixels_to_json(view.right_pixels)}};
  } else {
    Pose pose;
    if (request.pose) {
      pose = *request.pose;
    } else if (request.random) {
      std::vector<Pose> history;
      for (const auto& c : state.captures) {
        if (c.pose) history.push_back(*c.pose);
      }
      Rng rng(mix_seed(state.config.seed, kCapturePose + index));
      pose = random_pose(state.config.constraints, state.config.rig, state.config.board, history, rng);
    } else if (request.use_suggestion || state.config.mode == SessionMode::Guided) {
      if (!state.suggestion) {
        throw Error(ErrorCode::InvalidConfig, "no suggestion to accept; request one or send a pose");
      }
      pose = state.suggestion->candidate.pose;
    } else {
      throw Error(ErrorCode::InvalidConfig, "capture needs a pose, random: true or corner lists");
    }
    Rng noise(mix_seed(state.config.seed, kCaptureNoise + index));
    const ViewPair view = synthesize_view(state.config.rig, state.config.board, pose, request.sigma, noise);
    data = {{"source", "simulated"},
            {"pose", pose},
            {"sigma", request.sigma},
            {"left_pixels", pixels_to_json(view.left_pixels)},
            {"right_pixels", pixels_to_json(view.right_pixels)}};
  }
  append(*entry, SessionEvent{state.last_seq + 1, "captured", std::move(data)});
  return state_to_json(entry->state);
}

json SessionManager::suggest(const std::string& id) {
  auto entry = find(id);
  std::lock_guard<std::mutex> lock(entry->mutex);
  const SessionState& state = entry->state;
  if (state.captures.size() < 2 || !state.estimate) {
    throw Error(ErrorCode::InsufficientViews, "suggestions need at least 2 captures");
  }
  const CalibrationDataset data = state.dataset();
  SearchConfig search = state.config.search;
  search.seed = mix_seed(state.config.seed, kSuggest + data.views.size());
  const CandidatePose candidate =
      next_optimal_pose(data.rig(state.estimate->relative), data.views, search, &state.config.rig);

  Suggestion s;
  s.candidate = candidate;
  s.view_count = static_cast<int>(data.views.size());
  for (const Vec3& corner : board_corners(state.config.board)) {
    s.overlay.push_back(project(state.config.rig.left, candidate.pose, corner));
  }
  json payload = suggestion_to_json(s);
  append(*entry, SessionEvent{state.last_seq + 1, "suggested", payload});
  const auto& current = entry->state.trace_history;
  payload["current_trace"] = current.empty() ? json(nullptr) : optional_number(current.back());
  return payload;
}

json SessionManager::state(const std::string& id) {
  auto entry = find(id);
  std::lock_guard<std::mutex> lock(entry->mutex);
  return state_to_json(entry->state);
}

SessionState SessionManager::snapshot(const std::string& id) {
  auto entry = find(id);
  std::lock_guard<std::mutex> lock(entry->mutex);
  return entry->state;
}

std::vector<SessionEvent> SessionManager::events(const std::string& id) {
  auto entry = find(id);
  std::lock_guard<std::mutex> lock(entry->mutex);
  return entry->events;
}

json SessionManager::events_since(const std::string& id, std::uint64_t since,
                                  std::chrono::milliseconds timeout) {
  auto entry = find(id);
  std::unique_lock<std::mutex> lock(entry->mutex);
  if (timeout.count() > 0) {
    entry->changed.wait_for(lock, timeout, [&] { return entry->state.last_seq > since; });
  }
  json out = json::array();
  for (size_t k = 0; k < entry->events.size(); ++k) {
    if (entry->events[k].seq > since) out.push_back(entry->event_json[k]);
  }
  return out;
}

json plan_next_pose(const json& session, const std::uint64_t* seed) {
  SessionFile s = load_session(session);
  if (seed) s.search.seed = *seed;
  const CalibrationResult estimate = s.estimate ? *s.estimate : calibrate(s.dataset, s.kernel);
  std::vector<ViewPair> views = s.dataset.views;
  for (size_t i = 0; i < views.size(); ++i) views[i].left_abs = estimate.per_view_left_abs[i];
  const CandidatePose c = next_optimal_pose(s.dataset.rig(estimate.relative), views, s.search, &s.rig);
  std::vector<Vec2> overlay;
  for (const Vec3& corner : board_corners(s.dataset.board)) overlay.push_back(project(s.rig.left, c.pose, corner));
  json j = c;
  j["overlay"] = pixels_to_json(overlay);
  return j;
}

}  // namespace calibguide
