#include "calibguide/serialization.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace calibguide {

namespace {

constexpr double kDeg = M_PI / 180.0;

template <int N>
json vec_to_json(const Eigen::Matrix<double, N, 1>& v) {
  json out = json::array();
  for (int k = 0; k < N; ++k) out.push_back(v(k));
  return out;
}

template <int N>
Eigen::Matrix<double, N, 1> vec_from_json(const json& j, const char* key) {
  if (!j.is_array() || j.size() != static_cast<size_t>(N)) {
    throw Error(ErrorCode::InvalidConfig,
                std::string(key) + " must be an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int k = 0; k < N; ++k) v(k) = j.at(static_cast<size_t>(k)).get<double>();
  return v;
}

json mat6_to_json(const Mat6& m) {
  json rows = json::array();
  for (int r = 0; r < 6; ++r) rows.push_back(vec_to_json<6>(m.row(r).transpose()));
  return rows;
}

Mat6 mat6_from_json(const json& j) {
  if (!j.is_array() || j.size() != 6) throw Error(ErrorCode::InvalidConfig, "sigma must be 6x6");
  Mat6 m;
  for (int r = 0; r < 6; ++r) m.row(r) = vec_from_json<6>(j.at(static_cast<size_t>(r)), "sigma row").transpose();
  return m;
}

CandidateMode mode_from_string(const std::string& s) {
  if (s == "random") return CandidateMode::Random;
  if (s == "grid") return CandidateMode::Grid;
  throw Error(ErrorCode::InvalidConfig, "unknown search mode: " + s);
}

}  // namespace

void to_json(json& j, const CameraModel& m) {
  j = json{{"fu", m.fu}, {"fv", m.fv}, {"u0", m.u0}, {"v0", m.v0},
           {"k1", m.k1}, {"k2", m.k2}, {"p1", m.p1}, {"p2", m.p2},
           {"width", m.width}, {"height", m.height}};
}

void from_json(const json& j, CameraModel& m) {
  m.fu = j.at("fu").get<double>();
  m.fv = j.at("fv").get<double>();
  m.u0 = j.at("u0").get<double>();
  m.v0 = j.at("v0").get<double>();
  m.k1 = j.value("k1", 0.0);
  m.k2 = j.value("k2", 0.0);
  m.p1 = j.value("p1", 0.0);
  m.p2 = j.value("p2", 0.0);
  m.width = j.at("width").get<int>();
  m.height = j.at("height").get<int>();
  m.validate();
}

void to_json(json& j, const Pose& p) {
  j = json{{"rvec", vec_to_json<3>(p.rvec)}, {"tvec", vec_to_json<3>(p.tvec)}};
}

void from_json(const json& j, Pose& p) {
  p.rvec = vec_from_json<3>(j.at("rvec"), "rvec");
  p.tvec = vec_from_json<3>(j.at("tvec"), "tvec");
}

void to_json(json& j, const BoardSpec& b) {
  j = json{{"rows", b.rows}, {"cols", b.cols}, {"spacing_mm", b.spacing}};
}

void from_json(const json& j, BoardSpec& b) {
  b.rows = j.at("rows").get<int>();
  b.cols = j.at("cols").get<int>();
  b.spacing = j.at("spacing_mm").get<double>();
  b.validate();
}

void to_json(json& j, const StereoRig& r) {
  j = json{{"left", r.left}, {"right", r.right}, {"relative", r.relative}};
}

void from_json(const json& j, StereoRig& r) {
  r.left = j.at("left").get<CameraModel>();
  r.right = j.at("right").get<CameraModel>();
  r.relative = j.at("relative").get<Pose>();
}

void to_json(json& j, const CovarianceReport& c) {
  j = json{{"sigma", mat6_to_json(c.sigma)}, {"trace", c.trace}, {"condition", c.condition}};
}

void from_json(const json& j, CovarianceReport& c) {
  c.sigma = mat6_from_json(j.at("sigma"));
  c.trace = j.at("trace").get<double>();
  c.condition = j.at("condition").get<double>();
}

void to_json(json& j, const CandidatePose& c) {
  j = json{{"pose", c.pose}, {"visible", c.visible}, {"iterations", c.iterations}};
  j["trace"] = c.visible ? json(c.trace) : json(nullptr);
}

json pixels_to_json(const std::vector<Vec2>& pixels) {
  json out = json::array();
  for (const auto& p : pixels) out.push_back(json::array({p.x(), p.y()}));
  return out;
}

std::vector<Vec2> pixels_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidConfig, "pixel list must be an array");
  std::vector<Vec2> out;
  out.reserve(j.size());
  for (const auto& p : j) out.push_back(vec_from_json<2>(p, "pixel"));
  return out;
}

void to_json(json& j, const CalibrationDataset& d) {
  json views = json::array();
  for (const auto& v : d.views) {
    views.push_back({{"left_pixels", pixels_to_json(v.left_pixels)},
                     {"right_pixels", pixels_to_json(v.right_pixels)}});
  }
  j = json{{"left", d.left}, {"right", d.right}, {"board", d.board}, {"views", views}};
}

void from_json(const json& j, CalibrationDataset& d) {
  d.left = j.at("left").get<CameraModel>();
  d.right = j.at("right").get<CameraModel>();
  d.board = j.at("board").get<BoardSpec>();
  d.views.clear();
  for (const auto& v : j.at("views")) {
    ViewPair view;
    view.board = d.board;
    view.left_pixels = pixels_from_json(v.at("left_pixels"));
    view.right_pixels = pixels_from_json(v.at("right_pixels"));
    if (v.contains("left_abs")) view.left_abs = v.at("left_abs").get<Pose>();
    d.views.push_back(std::move(view));
  }
  d.validate();
}

void to_json(json& j, const CalibrationResult& r) {
  j = json{{"relative", r.relative},
           {"per_view_left_abs", r.per_view_left_abs},
           {"rms_reproj_px", r.rms_reproj},
           {"iterations", r.iterations}};
  j["covariance"] = r.covariance ? json(*r.covariance) : json(nullptr);
}

void from_json(const json& j, CalibrationResult& r) {
  r.relative = j.at("relative").get<Pose>();
  r.per_view_left_abs = j.at("per_view_left_abs").get<std::vector<Pose>>();
  r.rms_reproj = j.value("rms_reproj_px", 0.0);
  r.iterations = j.value("iterations", 0);
  r.covariance.reset();
  if (j.contains("covariance") && !j.at("covariance").is_null()) {
    r.covariance = j.at("covariance").get<CovarianceReport>();
  }
}

void to_json(json& j, const SearchConfig& c) {
  j = json{{"max_iterations", c.max_iterations},
           {"rel_tol", c.rel_tol},
           {"rotation_range_deg", c.rotation_range / kDeg},
           {"depth_scale_min", c.depth_scale_min},
           {"depth_scale_max", c.depth_scale_max},
           {"seed", c.seed},
           {"mode", c.mode == CandidateMode::Grid ? "grid" : "random"},
           {"margin_px", c.margin_px},
           {"weights", vec_to_json<6>(c.weights)},
           {"full_chain", c.jacobian.full_chain}};
  if (!c.grid.empty()) j["grid"] = c.grid;
}

void from_json(const json& j, SearchConfig& c) {
  c = SearchConfig{};
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.rel_tol = j.value("rel_tol", c.rel_tol);
  if (j.contains("rotation_range_deg")) c.rotation_range = j.at("rotation_range_deg").get<double>() * kDeg;
  c.depth_scale_min = j.value("depth_scale_min", c.depth_scale_min);
  c.depth_scale_max = j.value("depth_scale_max", c.depth_scale_max);
  c.seed = j.value("seed", c.seed);
  if (j.contains("mode")) c.mode = mode_from_string(j.at("mode").get<std::string>());
  c.margin_px = j.value("margin_px", c.margin_px);
  if (j.contains("weights")) c.weights = vec_from_json<6>(j.at("weights"), "weights");
  c.jacobian.full_chain = j.value("full_chain", false);
  if (j.contains("grid")) c.grid = j.at("grid").get<std::vector<Pose>>();
  c.validate();
}

void to_json(json& j, const RandomPoseConstraints& c) {
  j = json{{"rotation_range_deg", c.rotation_range / kDeg},
           {"coverage_target", c.coverage_target},
           {"normal_alignment_min_angle_deg", c.normal_alignment_min_angle / kDeg},
           {"depth_min_mm", c.depth_min},
           {"depth_max_mm", c.depth_max},
           {"margin_px", c.margin_px},
           {"max_attempts", c.max_attempts}};
}

void from_json(const json& j, RandomPoseConstraints& c) {
  c = RandomPoseConstraints{};
  if (j.contains("rotation_range_deg")) c.rotation_range = j.at("rotation_range_deg").get<double>() * kDeg;
  c.coverage_target = j.value("coverage_target", c.coverage_target);
  if (j.contains("normal_alignment_min_angle_deg")) {
    c.normal_alignment_min_angle = j.at("normal_alignment_min_angle_deg").get<double>() * kDeg;
  }
  c.depth_min = j.value("depth_min_mm", c.depth_min);
  c.depth_max = j.value("depth_max_mm", c.depth_max);
  c.margin_px = j.value("margin_px", c.margin_px);
  c.max_attempts = j.value("max_attempts", c.max_attempts);
  c.validate();
}

void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"rig", c.rig},
           {"board", c.board},
           {"noise_sigmas", c.noise_sigmas},
           {"trials", c.trials},
           {"n_initial", c.n_initial},
           {"n_random_images", c.n_random_images},
           {"n_optimal_images", c.n_optimal_images},
           {"seed", c.seed},
           {"search", c.search},
           {"constraints", c.constraints},
           {"kernel", c.kernel.to_string()},
           {"report_counts", c.report_counts},
           {"threads", c.threads},
           {"deterministic_reduce", c.deterministic_reduce}};
}

// Missing keys fall back to the reference experiment.
void from_json(const json& j, ExperimentConfig& c) {
  c = reference_experiment();
  if (j.contains("rig")) c.rig = j.at("rig").get<StereoRig>();
  if (j.contains("board")) c.board = j.at("board").get<BoardSpec>();
  c.noise_sigmas = j.value("noise_sigmas", c.noise_sigmas);
  c.trials = j.value("trials", c.trials);
  c.n_initial = j.value("n_initial", c.n_initial);
  c.n_random_images = j.value("n_random_images", c.n_random_images);
  c.n_optimal_images = j.value("n_optimal_images", c.n_optimal_images);
  c.seed = j.value("seed", c.seed);
  if (j.contains("search")) c.search = j.at("search").get<SearchConfig>();
  if (j.contains("constraints")) c.constraints = j.at("constraints").get<RandomPoseConstraints>();
  if (j.contains("kernel")) c.kernel = RobustKernel::parse(j.at("kernel").get<std::string>());
  c.report_counts = j.value("report_counts", c.report_counts);
  c.threads = j.value("threads", c.threads);
  c.deterministic_reduce = j.value("deterministic_reduce", c.deterministic_reduce);
  c.validate();
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed JSON: ") + e.what());
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_json(buffer.str());
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path);
  out << text;
}

json error_json(const std::string& code, const std::string& message) {
  return json{{"code", code}, {"message", message}};
}

}  // namespace calibguide
