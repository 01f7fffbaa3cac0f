#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "calibguide/covariance.hpp"
#include "calibguide/geometry.hpp"
#include "calibguide/jacobian.hpp"
#include "calibguide/random.hpp"

namespace calibguide {

enum class CandidateMode { Random, Grid };

/// Next-optimal-pose search settings.
struct SearchConfig {
  int max_iterations = 500;
  double rel_tol = 1e-6;
  // Random-mode sampling box: Euler angles within ±rotation_range per axis and
  // board-centre depth within [depth_scale_min, depth_scale_max] x mean view depth.
  double rotation_range = 45.0 * M_PI / 180.0;
  double depth_scale_min = 0.5;
  double depth_scale_max = 1.5;
  std::uint64_t seed = 0;
  CandidateMode mode = CandidateMode::Random;
  std::vector<Pose> grid;  // candidates in evaluation order for Grid mode
  double margin_px = 5.0;
  Vec6 weights = Vec6::Ones();
  JacobianOptions jacobian;

  void validate() const;
};

struct CandidatePose {
  Pose pose;  // board -> left camera
  double trace = 0.0;
  bool visible = false;
  int iterations = 0;  // candidates drawn before termination
};

/// Constrained random-pose baseline.
struct RandomPoseConstraints {
  double rotation_range = 30.0 * M_PI / 180.0;
  double coverage_target = 0.9;
  double normal_alignment_min_angle = 5.0 * M_PI / 180.0;
  // Board-centre depth range in mm; non-positive values select
  // [0.5, 1.5] x the rig's optical-axis convergence depth.
  double depth_min = 0.0;
  double depth_max = 0.0;
  double margin_px = 5.0;
  int max_attempts = 10000;

  void validate() const;
};

/// Euler XYZ rotation R = Rz(z)·Ry(y)·Rx(x).
Mat3 rotation_from_euler_xyz(const Vec3& angles);
/// Inverse of rotation_from_euler_xyz with y in [-π/2, π/2].
Vec3 euler_xyz_from_rotation(const Mat3& rotation);

/// Board pose whose board centre lands at `centre` (left camera frame).
Pose pose_from_centre(const Mat3& rotation, const Vec3& centre, const BoardSpec& board);

/// True iff every corner is in front of both cameras and projects at least
/// `margin_px` inside both image rectangles.
bool is_visible(const Pose& pose, const StereoRig& rig, const BoardSpec& board,
                double margin_px = 5.0);

/// Searches board poses minimizing the trace of the relative-extrinsics covariance
/// after adding a hypothetical exact view at the candidate. `estimate` is treated
/// as ground truth for the hypothetical view. Terminates after max_iterations
/// draws (or the end of the grid) or once an improvement of the best trace is
/// relatively smaller than rel_tol. Ties keep the first found.
/// Throws Error(InsufficientViews) with no views, Error(NoFeasibleCandidate) when
/// nothing visible was drawn. When `feasibility` is given, visibility is
/// checked against that rig instead of the estimate.
CandidatePose next_optimal_pose(const StereoRig& estimate, std::span<const ViewPair> views,
                                const SearchConfig& config, const StereoRig* feasibility = nullptr);

/// Trace objective of views + one hypothetical view at `pose`.
double augmented_trace(const StereoRig& estimate, std::span<const ViewPair> views,
                       const Pose& pose, const SearchConfig& config);

/// Product grid of candidate poses with a fixed rotation: the board centre sits on
/// the left-camera ray through pixel (u0 + du, v0 + dv) at each depth. Ordered
/// depth-major, then dv, then du.
std::vector<Pose> make_pose_grid(const StereoRig& rig, const BoardSpec& board,
                                 const std::vector<double>& depths,
                                 const std::vector<double>& pixel_offsets_u,
                                 const std::vector<double>& pixel_offsets_v,
                                 const Mat3& rotation = Mat3::Identity());

/// Random visible pose satisfying the rotation, normal-alignment and (best
/// effort) coverage constraints. Throws Error(ConstraintUnsatisfiable).
Pose random_pose(const RandomPoseConstraints& constraints, const StereoRig& rig,
                 const BoardSpec& board, std::span<const Pose> history, Rng& rng);

/// Fraction of overlap cells (cells x cells over the left image) whose centres
/// fall inside the projected outline of any board in `history`.
double coverage_fraction(std::span<const Pose> history, const StereoRig& rig,
                         const BoardSpec& board, int cells = 32);

}  // namespace calibguide
