#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "calibguide/covariance.hpp"
#include "calibguide/geometry.hpp"
#include "calibguide/jacobian.hpp"

namespace calibguide {

struct CalibrationDataset {
  CameraModel left;
  CameraModel right;
  BoardSpec board;
  std::vector<ViewPair> views;

  void validate() const;
  StereoRig rig(const Pose& relative) const { return {left, right, relative}; }
};

struct CalibrationResult {
  Pose relative;
  std::vector<Pose> per_view_left_abs;
  double rms_reproj = 0.0;  // px
  std::optional<CovarianceReport> covariance;
  int iterations = 0;
};

/// ρ applied to the squared per-corner residual norm.
struct RobustKernel {
  enum class Type { Quadratic, Huber };
  Type type = Type::Huber;
  double threshold = 1.0;  // px

  static RobustKernel quadratic() { return {Type::Quadratic, 0.0}; }
  static RobustKernel huber(double threshold) { return {Type::Huber, threshold}; }
  /// "huber:1.0", "huber", "quadratic", "identity" or "none".
  static RobustKernel parse(const std::string& spec);
  std::string to_string() const;

  double cost(double squared_norm) const;
  /// IRLS weight dρ/ds.
  double weight(double squared_norm) const;
};

/// Planar PnP for object points on the Z = 0 plane: homography DLT followed by
/// Levenberg-Marquardt on the monocular reprojection error.
/// Throws Error(InsufficientPoints) for fewer than 4 points and
/// Error(DegenerateConfiguration) for collinear or non-planar object points.
Pose solve_pnp(std::span<const Vec3> object_points, std::span<const Vec2> pixels,
               const CameraModel& model);
Pose solve_pnp(const BoardSpec& board, std::span<const Vec2> pixels, const CameraModel& model);

/// Relative extrinsics R = R_r·R_lᵀ, t = t_r − R·t_l.
Pose init_relative(const Pose& left_abs, const Pose& right_abs);

/// Per-view relative poses averaged: rotation as the normalized mean of
/// sign-aligned quaternions, translation as the arithmetic mean.
Pose relative_from_monocular(std::span<const std::pair<Pose, Pose>> views);

/// Left pose of one view under a known relative pose: both planar PnP branches
/// of each camera, mapped to the left frame, scored by the stereo reprojection
/// cost.
Pose initial_left_pose(const CameraModel& left, const CameraModel& right, const ViewPair& view,
                       const Pose& relative);

/// PnP on both cameras of every view, relative pose from monocular averaging,
/// left poses from the left PnP.
CalibrationResult initialize(const CalibrationDataset& dataset);

struct BundleAdjustOptions {
  int max_iterations = 100;
  double rel_cost_tol = 1e-10;
  double step_tol = 1e-12;  // rejected steps below this end the run as converged
  double lambda0 = 1e-3;
  double lambda_min = 1e-9;  // floor for the ÷10 decay
  int max_consecutive_failures = 10;
  bool compute_covariance = true;
};

/// Joint Levenberg-Marquardt refinement of the relative pose and every left pose
/// on the stacked stereo residuals, with the right pose tied to R·R_l, R·t_l + t.
/// Throws Error(DivergedOptimization).
CalibrationResult bundle_adjust(const CalibrationDataset& dataset, const CalibrationResult& init,
                                const RobustKernel& kernel = {},
                                const BundleAdjustOptions& options = {});

/// Σ ρ(‖r‖²) over both cameras and all views at `result`; infinite if a corner
/// falls behind a camera.
double robust_cost(const CalibrationDataset& dataset, const CalibrationResult& result,
                   const RobustKernel& kernel = {});

/// initialize() followed by bundle_adjust().
CalibrationResult calibrate(const CalibrationDataset& dataset, const RobustKernel& kernel = {},
                            const BundleAdjustOptions& options = {});

/// Re-runs bundle adjustment after views were appended: once warm-started from
/// `previous` (new views seeded by initial_left_pose) and once from a fresh
/// initialize(); the lower robust cost wins. Without `previous`, calibrate().
CalibrationResult recalibrate(const CalibrationDataset& dataset, const CalibrationResult* previous,
                              const RobustKernel& kernel = {},
                              const BundleAdjustOptions& options = {});

/// Geodesic angle between rotations in degrees, arccos((tr(R_ref R_calᵀ) − 1)/2).
double rotation_error(const Pose& ref, const Pose& cal);
/// 2‖t_ref − t_cal‖/(‖t_ref‖ + ‖t_cal‖) in percent. Throws Error(UndefinedError)
/// when both vectors are zero.
double translation_error(const Vec3& ref, const Vec3& cal);

struct ReprojectionStats {
  double rms = 0.0;   // px
  double mean = 0.0;  // px
};

/// Per-corner Euclidean reprojection distances over both cameras and all views.
ReprojectionStats reprojection_error_stats(const CalibrationDataset& dataset,
                                           const CalibrationResult& result);

/// Mean distance (mm) between triangulated corners, mapped to the board frame
/// through each view's left pose, and the true board corners.
double triangulation_error_stats(const CalibrationDataset& dataset, const CalibrationResult& result);

}  // namespace calibguide
