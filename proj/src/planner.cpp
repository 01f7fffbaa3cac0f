#include "calibguide/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "calibguide/errors.hpp"

namespace calibguide {

void SearchConfig::validate() const {
  if (max_iterations < 1) throw Error(ErrorCode::InvalidConfig, "max_iterations must be >= 1");
  if (!(rel_tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "rel_tol must be positive");
  if (!(depth_scale_min > 0.0) || !(depth_scale_max >= depth_scale_min)) {
    throw Error(ErrorCode::InvalidConfig, "invalid depth scale range");
  }
  if (!(rotation_range >= 0.0)) throw Error(ErrorCode::InvalidConfig, "rotation_range must be >= 0");
  if (mode == CandidateMode::Grid && grid.empty()) {
    throw Error(ErrorCode::InvalidConfig, "grid mode needs at least one candidate");
  }
}

void RandomPoseConstraints::validate() const {
  if (!(coverage_target > 0.0 && coverage_target <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "coverage_target must be in (0, 1]");
  }
  if (!(rotation_range >= 0.0)) throw Error(ErrorCode::InvalidConfig, "rotation_range must be >= 0");
  if (!(normal_alignment_min_angle >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "normal_alignment_min_angle must be >= 0");
  }
  if (max_attempts < 1) throw Error(ErrorCode::InvalidConfig, "max_attempts must be >= 1");
}

Mat3 rotation_from_euler_xyz(const Vec3& a) {
  return (Eigen::AngleAxisd(a.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(a.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(a.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

Vec3 euler_xyz_from_rotation(const Mat3& r) {
  const double y = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double x = std::atan2(r(2, 1), r(2, 2));
  const double z = std::atan2(r(1, 0), r(0, 0));
  return {x, y, z};
}

Pose pose_from_centre(const Mat3& rotation, const Vec3& centre, const BoardSpec& board) {
  return Pose::from_matrix(rotation, centre - rotation * board.center());
}

bool is_visible(const Pose& pose, const StereoRig& rig, const BoardSpec& board, double margin_px) {
  const Mat3 rl = pose.rotation();
  const Pose right = compose_right_extrinsics(rig.relative, pose);
  const Mat3 rr = right.rotation();
  for (const Vec3& corner : board_corners(board)) {
    const Vec3 ql = rl * corner + pose.tvec;
    const Vec3 qr = rr * corner + right.tvec;
    if (!(ql.z() > 0.0) || !(qr.z() > 0.0)) return false;
    if (!rig.left.contains(project_camera_point(rig.left, ql), margin_px)) return false;
    if (!rig.right.contains(project_camera_point(rig.right, qr), margin_px)) return false;
  }
  return true;
}

namespace {

double mean_view_depth(std::span<const ViewPair> views) {
  double sum = 0.0;
  for (const auto& v : views) sum += v.left_abs.apply(v.board.center()).z();
  return sum / static_cast<double>(views.size());
}

Vec3 backproject(const CameraModel& model, const Vec2& pixel, double depth) {
  const Vec2 x = model.undistort(model.to_normalized(pixel));
  return {x.x() * depth, x.y() * depth, depth};
}

Pose sample_search_pose(const StereoRig& rig, const BoardSpec& board, const SearchConfig& cfg,
                        double depth_ref, Rng& rng) {
  const double depth = rng.uniform(cfg.depth_scale_min, cfg.depth_scale_max) * depth_ref;
  const Vec2 pixel{rng.uniform(0.0, rig.left.width), rng.uniform(0.0, rig.left.height)};
  Vec3 angles;
  for (int k = 0; k < 3; ++k) angles[k] = rng.uniform(-cfg.rotation_range, cfg.rotation_range);
  return pose_from_centre(rotation_from_euler_xyz(angles), backproject(rig.left, pixel, depth), board);
}

// Trace for S_base + (view's Schur term); +inf when the augmented information
// is singular.
double trace_with_view(const Mat6& base, const BoardSpec& board, const Pose& pose,
                       const StereoRig& rig, const SearchConfig& cfg) {
  try {
    const ViewInfo info = view_info(board, pose, rig, cfg.jacobian);
    const Mat6 s = base + info.UtU - schur_reduction(info.UtV, info.VtV);
    return trace_objective(covariance_from_schur(s), cfg.weights);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SingularInformation) return std::numeric_limits<double>::infinity();
    throw;
  }
}

}  // namespace

double augmented_trace(const StereoRig& estimate, std::span<const ViewPair> views, const Pose& pose,
                       const SearchConfig& config) {
  if (views.empty()) throw Error(ErrorCode::InsufficientViews, "no views accumulated");
  const Mat6 base = schur_complement(assemble_info(views, estimate, config.jacobian));
  return trace_with_view(base, views.front().board, pose, estimate, config);
}

CandidatePose next_optimal_pose(const StereoRig& estimate, std::span<const ViewPair> views,
                                const SearchConfig& config, const StereoRig* feasibility) {
  config.validate();
  if (views.empty()) throw Error(ErrorCode::InsufficientViews, "next pose needs at least one view");
  const BoardSpec& board = views.front().board;
  const Mat6 base = schur_complement(assemble_info(views, estimate, config.jacobian));
  const double depth_ref = mean_view_depth(views);

  Rng rng(config.seed);
  CandidatePose best;
  best.trace = std::numeric_limits<double>::infinity();
  const int limit = config.mode == CandidateMode::Grid
                        ? std::min<int>(config.max_iterations, static_cast<int>(config.grid.size()))
                        : config.max_iterations;
  int iteration = 0;
  while (iteration < limit) {
    const Pose candidate = config.mode == CandidateMode::Grid
                               ? config.grid[static_cast<size_t>(iteration)]
                               : sample_search_pose(estimate, board, config, depth_ref, rng);
    ++iteration;
    if (!is_visible(candidate, feasibility ? *feasibility : estimate, board, config.margin_px)) continue;
    const double trace = trace_with_view(base, board, candidate, estimate, config);
    if (!std::isfinite(trace) || !(trace < best.trace)) continue;

    const double previous = best.trace;
    best.pose = candidate;
    best.trace = trace;
    best.visible = true;
    if (std::isfinite(previous) && (previous - trace) / previous <= config.rel_tol) break;
  }
  best.iterations = iteration;
  if (!best.visible) {
    throw Error(ErrorCode::NoFeasibleCandidate, "no visible candidate pose found");
  }
  return best;
}

std::vector<Pose> make_pose_grid(const StereoRig& rig, const BoardSpec& board,
                                 const std::vector<double>& depths,
                                 const std::vector<double>& pixel_offsets_u,
                                 const std::vector<double>& pixel_offsets_v, const Mat3& rotation) {
  std::vector<Pose> grid;
  grid.reserve(depths.size() * pixel_offsets_u.size() * pixel_offsets_v.size());
  for (double depth : depths) {
    for (double dv : pixel_offsets_v) {
      for (double du : pixel_offsets_u) {
        const Vec2 pixel{rig.left.u0 + du, rig.left.v0 + dv};
        grid.push_back(pose_from_centre(rotation, backproject(rig.left, pixel, depth), board));
      }
    }
  }
  return grid;
}

namespace {

// Cell grid over the left image. A cell belongs to the overlap region when its
// centre, back-projected to the convergence depth, lands inside the right image.
class CoverageGrid {
 public:
  CoverageGrid(const StereoRig& rig, int cells) : rig_(rig), cells_(cells) {
    const double depth = convergence_depth(rig);
    overlap_.assign(static_cast<size_t>(cells * cells), false);
    covered_.assign(overlap_.size(), false);
    for (int cy = 0; cy < cells; ++cy) {
      for (int cx = 0; cx < cells; ++cx) {
        const Vec3 q = backproject(rig.left, centre(cx, cy), depth);
        const Vec3 qr = rig.relative.apply(q);
        if (qr.z() > 0.0 && rig.right.contains(project_camera_point(rig.right, qr))) {
          overlap_[index(cx, cy)] = true;
          ++overlap_count_;
        }
      }
    }
  }

  /// Marks cells inside the board outline; returns how many were newly covered.
  int add(const Pose& pose, const BoardSpec& board, bool dry_run = false) {
    const double w = (board.rows - 1) * board.spacing;
    const double h = (board.cols - 1) * board.spacing;
    const Vec3 outline[4] = {{0, 0, 0}, {w, 0, 0}, {w, h, 0}, {0, h, 0}};
    Vec2 quad[4];
    for (int k = 0; k < 4; ++k) {
      const Vec3 q = pose.apply(outline[k]);
      if (!(q.z() > 0.0)) return 0;
      quad[k] = project_camera_point(rig_.left, q);
    }
    int fresh = 0;
    for (int cy = 0; cy < cells_; ++cy) {
      for (int cx = 0; cx < cells_; ++cx) {
        const size_t i = index(cx, cy);
        if (!overlap_[i] || covered_[i]) continue;
        if (!inside(quad, centre(cx, cy))) continue;
        ++fresh;
        if (!dry_run) covered_[i] = true;
      }
    }
    return fresh;
  }

  double fraction() const {
    if (overlap_count_ == 0) return 0.0;
    const auto covered = std::count(covered_.begin(), covered_.end(), true);
    return static_cast<double>(covered) / overlap_count_;
  }

 private:
  size_t index(int cx, int cy) const { return static_cast<size_t>(cy * cells_ + cx); }
  Vec2 centre(int cx, int cy) const {
    return {(cx + 0.5) * rig_.left.width / cells_, (cy + 0.5) * rig_.left.height / cells_};
  }
  // Convex quadrilateral test, either winding.
  static bool inside(const Vec2 (&quad)[4], const Vec2& p) {
    int sign = 0;
    for (int k = 0; k < 4; ++k) {
      const Vec2 a = quad[k];
      const Vec2 b = quad[(k + 1) % 4];
      const double cross = (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
      const int s = cross > 0.0 ? 1 : (cross < 0.0 ? -1 : 0);
      if (s == 0) continue;
      if (sign == 0) sign = s;
      else if (s != sign) return false;
    }
    return true;
  }

  const StereoRig& rig_;
  int cells_;
  std::vector<bool> overlap_;
  std::vector<bool> covered_;
  int overlap_count_ = 0;
};

double angle_to_axis(const Vec3& normal) {
  return std::acos(std::clamp(std::abs(normal.z()) / normal.norm(), 0.0, 1.0));
}

}  // namespace

double coverage_fraction(std::span<const Pose> history, const StereoRig& rig, const BoardSpec& board,
                         int cells) {
  CoverageGrid grid(rig, cells);
  for (const Pose& pose : history) grid.add(pose, board);
  return grid.fraction();
}

Pose random_pose(const RandomPoseConstraints& constraints, const StereoRig& rig,
                 const BoardSpec& board, std::span<const Pose> history, Rng& rng) {
  constraints.validate();
  double depth_min = constraints.depth_min;
  double depth_max = constraints.depth_max;
  if (!(depth_min > 0.0) || !(depth_max >= depth_min)) {
    const double conv = convergence_depth(rig);
    depth_min = 0.5 * conv;
    depth_max = 1.5 * conv;
  }

  CoverageGrid coverage(rig, 32);
  for (const Pose& pose : history) coverage.add(pose, board);
  const bool want_coverage = !history.empty() && coverage.fraction() < constraints.coverage_target;
  // Prefer poses that reach uncovered cells, but never at the cost of the
  // hard constraints: after this many valid draws the next valid one is taken.
  constexpr int kCoverageTries = 50;

  const Mat3 rrel = rig.relative.rotation();
  int valid_draws = 0;
  for (int attempt = 0; attempt < constraints.max_attempts; ++attempt) {
    const double depth = rng.uniform(depth_min, depth_max);
    const Vec2 pixel{rng.uniform(0.0, rig.left.width), rng.uniform(0.0, rig.left.height)};
    Vec3 angles;
    for (int k = 0; k < 3; ++k) {
      angles[k] = rng.uniform(-constraints.rotation_range, constraints.rotation_range);
    }
    const Mat3 rotation = rotation_from_euler_xyz(angles);
    const Pose pose = pose_from_centre(rotation, backproject(rig.left, pixel, depth), board);
    if (!is_visible(pose, rig, board, constraints.margin_px)) continue;

    const Vec3 normal_left = rotation * Vec3::UnitZ();
    if (angle_to_axis(normal_left) < constraints.normal_alignment_min_angle) continue;
    if (angle_to_axis(rrel * normal_left) < constraints.normal_alignment_min_angle) continue;

    ++valid_draws;
    if (want_coverage && valid_draws < kCoverageTries && coverage.add(pose, board, true) == 0) {
      continue;
    }
    return pose;
  }
  throw Error(ErrorCode::ConstraintUnsatisfiable,
              "no pose satisfied the random-pose constraints within the attempt cap");
}

}  // namespace calibguide
