#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <vector>

namespace calibguide {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat26 = Eigen::Matrix<double, 2, 6>;

/// Pinhole camera with Brown radial-tangential distortion d = [k1, k2, p1, p2].
struct CameraModel {
  double fu = 0.0;
  double fv = 0.0;
  double u0 = 0.0;
  double v0 = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  int width = 0;
  int height = 0;

  /// Throws Error(InvalidConfig) when focal lengths or principal point are out of range.
  void validate() const;

  /// Distorted normalized coordinate of an undistorted normalized coordinate.
  Vec2 distort(const Vec2& x) const;
  /// ∂x_d/∂x, closed form.
  Mat2 distortion_jacobian(const Vec2& x) const;
  /// Inverse of distort() by fixed-point iteration (20 iterations or step < 1e-12).
  Vec2 undistort(const Vec2& xd) const;

  Vec2 to_pixel(const Vec2& xd) const { return {fu * xd.x() + u0, fv * xd.y() + v0}; }
  Vec2 to_normalized(const Vec2& pixel) const {
    return {(pixel.x() - u0) / fu, (pixel.y() - v0) / fv};
  }

  bool contains(const Vec2& pixel, double margin = 0.0) const {
    return pixel.x() >= margin && pixel.y() >= margin && pixel.x() <= width - margin &&
           pixel.y() <= height - margin;
  }
};

Mat3 skew(const Vec3& v);

/// Rodrigues map. The zero vector maps to identity.
Mat3 rotation_from_axis_angle(const Vec3& rvec);
/// Inverse Rodrigues map onto the canonical range ‖rvec‖ ≤ π.
Vec3 axis_angle_from_rotation(const Mat3& rotation);

/// Rigid transform X_cam = R(rvec)·X + tvec. Lengths in mm.
struct Pose {
  Vec3 rvec = Vec3::Zero();
  Vec3 tvec = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_matrix(const Mat3& rotation, const Vec3& translation);

  Mat3 rotation() const { return rotation_from_axis_angle(rvec); }
  Vec3 apply(const Vec3& point) const { return rotation() * point + tvec; }
  Pose inverse() const;
};

/// (a ∘ b)(X) = a(b(X)).
Pose compose(const Pose& a, const Pose& b);

/// Left SE(3) perturbation (R, t) ← (Exp(δφ)R, Exp(δφ)t + δρ) with delta = [δφ, δρ].
/// Under this update ∂Q/∂δφ = −[Q]× and ∂Q/∂δρ = I for Q = R·P + t.
Pose perturb(const Pose& pose, const Vec6& delta);

struct StereoRig {
  CameraModel left;
  CameraModel right;
  Pose relative;  // left camera frame -> right camera frame
};

/// Right absolute extrinsics from relative and left absolute: R_r = R·R_l, t_r = R·t_l + t.
Pose compose_right_extrinsics(const Pose& relative, const Pose& left_abs);

/// Planar chessboard; corners in the Z = 0 plane of the board (world) frame.
struct BoardSpec {
  int rows = 9;
  int cols = 6;
  double spacing = 5.0;

  void validate() const;
  int corner_count() const { return rows * cols; }
  Vec3 center() const {
    return {0.5 * (rows - 1) * spacing, 0.5 * (cols - 1) * spacing, 0.0};
  }
};

/// rows·cols corners at (i·spacing, j·spacing, 0), i in [0, rows), j in [0, cols);
/// i varies fastest.
std::vector<Vec3> board_corners(const BoardSpec& spec);

/// Pixel of a camera-frame point. Throws Error(BehindCamera) if Z <= 0.
Vec2 project_camera_point(const CameraModel& model, const Vec3& camera_point);
/// Pixel of a world point seen through `pose`. Throws Error(BehindCamera) if Z_c <= 0.
Vec2 project(const CameraModel& model, const Pose& pose, const Vec3& world_point);

/// Midpoint triangulation in the left camera frame. Throws Error(DegenerateRays).
Vec3 triangulate_left_frame(const StereoRig& rig, const Vec2& pixel_left, const Vec2& pixel_right);
/// Midpoint triangulation expressed in the world frame of `left_abs`.
Vec3 triangulate(const StereoRig& rig, const Pose& left_abs, const Vec2& pixel_left,
                 const Vec2& pixel_right);

/// Depth along the left optical axis closest to the right optical axis; used to
/// centre the working volume. Returns `fallback` for (near) parallel axes.
double convergence_depth(const StereoRig& rig, double fallback = 1000.0);

}  // namespace calibguide
