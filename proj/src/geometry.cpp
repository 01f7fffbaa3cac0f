#include "calibguide/geometry.hpp"

#include <cmath>
#include <string>

#include "calibguide/errors.hpp"

namespace calibguide {

void CameraModel::validate() const {
  if (!(fu > 0.0) || !(fv > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidConfig, "image size must be positive");
  }
  if (!(u0 > 0.0 && u0 < width) || !(v0 > 0.0 && v0 < height)) {
    throw Error(ErrorCode::InvalidConfig, "principal point must lie inside the image");
  }
  for (double d : {k1, k2, p1, p2}) {
    if (!std::isfinite(d)) throw Error(ErrorCode::InvalidConfig, "distortion must be finite");
  }
}

Vec2 CameraModel::distort(const Vec2& x) const {
  const double xx = x.x();
  const double yy = x.y();
  const double r2 = xx * xx + yy * yy;
  const double radial = 1.0 + k1 * r2 + k2 * r2 * r2;
  return {xx * radial + 2.0 * p1 * xx * yy + p2 * (r2 + 2.0 * xx * xx),
          yy * radial + p1 * (r2 + 2.0 * yy * yy) + 2.0 * p2 * xx * yy};
}

Mat2 CameraModel::distortion_jacobian(const Vec2& x) const {
  const double xx = x.x();
  const double yy = x.y();
  const double r2 = xx * xx + yy * yy;
  const double radial = 1.0 + k1 * r2 + k2 * r2 * r2;
  const double dradial = k1 + 2.0 * k2 * r2;
  const double cross = 2.0 * xx * yy * dradial + 2.0 * p1 * xx + 2.0 * p2 * yy;
  Mat2 j;
  j(0, 0) = radial + 2.0 * xx * xx * dradial + 2.0 * p1 * yy + 6.0 * p2 * xx;
  j(0, 1) = cross;
  j(1, 0) = cross;
  j(1, 1) = radial + 2.0 * yy * yy * dradial + 6.0 * p1 * yy + 2.0 * p2 * xx;
  return j;
}

Vec2 CameraModel::undistort(const Vec2& xd) const {
  Vec2 x = xd;
  for (int it = 0; it < 20; ++it) {
    const double r2 = x.squaredNorm();
    const double radial = 1.0 + k1 * r2 + k2 * r2 * r2;
    const Vec2 tangential{2.0 * p1 * x.x() * x.y() + p2 * (r2 + 2.0 * x.x() * x.x()),
                          p1 * (r2 + 2.0 * x.y() * x.y()) + 2.0 * p2 * x.x() * x.y()};
    const Vec2 next = (xd - tangential) / radial;
    const double step = (next - x).norm();
    x = next;
    if (step < 1e-12) break;
  }
  return x;
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Mat3 rotation_from_axis_angle(const Vec3& rvec) {
  const double theta = rvec.norm();
  if (theta < 1e-12) {
    const Mat3 k = skew(rvec);
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  return Eigen::AngleAxisd(theta, rvec / theta).toRotationMatrix();
}

Vec3 axis_angle_from_rotation(const Mat3& rotation) {
  const Eigen::AngleAxisd aa(rotation);
  double angle = aa.angle();
  Vec3 axis = aa.axis();
  if (angle > M_PI) {
    angle = 2.0 * M_PI - angle;
    axis = -axis;
  }
  return axis * angle;
}

Pose Pose::from_matrix(const Mat3& rotation, const Vec3& translation) {
  return {axis_angle_from_rotation(rotation), translation};
}

Pose Pose::inverse() const {
  const Mat3 rt = rotation().transpose();
  return from_matrix(rt, -rt * tvec);
}

Pose compose(const Pose& a, const Pose& b) {
  const Mat3 ra = a.rotation();
  return Pose::from_matrix(ra * b.rotation(), ra * b.tvec + a.tvec);
}

Pose perturb(const Pose& pose, const Vec6& delta) {
  const Mat3 dr = rotation_from_axis_angle(delta.head<3>());
  return Pose::from_matrix(dr * pose.rotation(), dr * pose.tvec + delta.tail<3>());
}

Pose compose_right_extrinsics(const Pose& relative, const Pose& left_abs) {
  return compose(relative, left_abs);
}

void BoardSpec::validate() const {
  if (rows < 2 || cols < 2) throw Error(ErrorCode::InvalidConfig, "board needs at least 2x2 corners");
  if (!(spacing > 0.0)) throw Error(ErrorCode::InvalidConfig, "board spacing must be positive");
}

std::vector<Vec3> board_corners(const BoardSpec& spec) {
  std::vector<Vec3> corners;
  corners.reserve(static_cast<size_t>(spec.corner_count()));
  for (int j = 0; j < spec.cols; ++j) {
    for (int i = 0; i < spec.rows; ++i) {
      corners.emplace_back(i * spec.spacing, j * spec.spacing, 0.0);
    }
  }
  return corners;
}

Vec2 project_camera_point(const CameraModel& model, const Vec3& camera_point) {
  if (!(camera_point.z() > 0.0)) {
    throw Error(ErrorCode::BehindCamera,
                "point behind camera (Z = " + std::to_string(camera_point.z()) + ")");
  }
  const Vec2 x{camera_point.x() / camera_point.z(), camera_point.y() / camera_point.z()};
  return model.to_pixel(model.distort(x));
}

Vec2 project(const CameraModel& model, const Pose& pose, const Vec3& world_point) {
  return project_camera_point(model, pose.apply(world_point));
}

Vec3 triangulate_left_frame(const StereoRig& rig, const Vec2& pixel_left, const Vec2& pixel_right) {
  const Vec2 xl = rig.left.undistort(rig.left.to_normalized(pixel_left));
  const Vec2 xr = rig.right.undistort(rig.right.to_normalized(pixel_right));
  const Mat3 rt = rig.relative.rotation().transpose();

  const Vec3 origin_l = Vec3::Zero();
  const Vec3 origin_r = -rt * rig.relative.tvec;
  const Vec3 dir_l = Vec3(xl.x(), xl.y(), 1.0).normalized();
  const Vec3 dir_r = (rt * Vec3(xr.x(), xr.y(), 1.0)).normalized();

  const double baseline = (origin_r - origin_l).norm();
  const double sin_angle = dir_l.cross(dir_r).norm();
  if (baseline < 1e-9 || sin_angle < 1e-6) {
    throw Error(ErrorCode::DegenerateRays, "viewing rays are (nearly) parallel or share a centre");
  }

  // Closest points origin_l + s·dir_l and origin_r + u·dir_r.
  const Vec3 w0 = origin_l - origin_r;
  const double b = dir_l.dot(dir_r);
  const double d = dir_l.dot(w0);
  const double e = dir_r.dot(w0);
  const double denom = 1.0 - b * b;
  const double s = (b * e - d) / denom;
  const double u = (e - b * d) / denom;
  return 0.5 * ((origin_l + s * dir_l) + (origin_r + u * dir_r));
}

Vec3 triangulate(const StereoRig& rig, const Pose& left_abs, const Vec2& pixel_left,
                 const Vec2& pixel_right) {
  const Vec3 q = triangulate_left_frame(rig, pixel_left, pixel_right);
  return left_abs.rotation().transpose() * (q - left_abs.tvec);
}

double convergence_depth(const StereoRig& rig, double fallback) {
  const Mat3 rt = rig.relative.rotation().transpose();
  const Vec3 dir_l = Vec3::UnitZ();
  const Vec3 origin_r = -rt * rig.relative.tvec;
  const Vec3 dir_r = rt * Vec3::UnitZ();
  const double b = dir_l.dot(dir_r);
  const double denom = 1.0 - b * b;
  if (denom < 1e-8) return fallback;
  const Vec3 w0 = -origin_r;
  const double s = (b * dir_r.dot(w0) - dir_l.dot(w0)) / denom;
  return s > 0.0 ? s : fallback;
}

}  // namespace calibguide
