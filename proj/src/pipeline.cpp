#include "calibguide/pipeline.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "calibguide/errors.hpp"

namespace calibguide {

void CalibrationDataset::validate() const {
  left.validate();
  right.validate();
  board.validate();
  for (const auto& view : views) {
    view.validate();
    if (view.board.rows != board.rows || view.board.cols != board.cols ||
        view.board.spacing != board.spacing) {
      throw Error(ErrorCode::InvalidConfig, "view board differs from dataset board");
    }
  }
}

// ---------------------------------------------------------------------------
// Robust kernel

RobustKernel RobustKernel::parse(const std::string& spec) {
  if (spec == "quadratic" || spec == "identity" || spec == "none" || spec == "l2") {
    return quadratic();
  }
  if (spec == "huber") return huber(1.0);
  const std::string prefix = "huber:";
  if (spec.rfind(prefix, 0) == 0) {
    try {
      size_t used = 0;
      const std::string value = spec.substr(prefix.size());
      const double threshold = std::stod(value, &used);
      if (used == value.size() && threshold > 0.0) return huber(threshold);
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorCode::InvalidConfig, "unknown robust kernel '" + spec + "'");
}

std::string RobustKernel::to_string() const {
  if (type == Type::Quadratic) return "quadratic";
  std::ostringstream out;
  out << "huber:" << threshold;
  return out.str();
}

double RobustKernel::cost(double s) const {
  if (type == Type::Quadratic || s <= threshold * threshold) return s;
  return 2.0 * threshold * std::sqrt(s) - threshold * threshold;
}

double RobustKernel::weight(double s) const {
  if (type == Type::Quadratic || s <= threshold * threshold) return 1.0;
  return threshold / std::sqrt(s);
}

// ---------------------------------------------------------------------------
// PnP

namespace {

// Similarity transform mapping points to zero mean and mean distance √2.
Mat3 hartley_normalization(std::span<const Vec2> points) {
  Vec2 mean = Vec2::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  double dist = 0.0;
  for (const auto& p : points) dist += (p - mean).norm();
  dist /= static_cast<double>(points.size());
  const double s = dist > 0.0 ? std::sqrt(2.0) / dist : 1.0;
  Mat3 t;
  t << s, 0.0, -s * mean.x(),
       0.0, s, -s * mean.y(),
       0.0, 0.0, 1.0;
  return t;
}

Mat3 homography_dlt(std::span<const Vec2> plane, std::span<const Vec2> image) {
  const Mat3 tp = hartley_normalization(plane);
  const Mat3 ti = hartley_normalization(image);
  const auto n = static_cast<Eigen::Index>(plane.size());
  Eigen::MatrixXd a(2 * n, 9);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Vec3 p = tp * plane[static_cast<size_t>(k)].homogeneous();
    const Vec3 q = ti * image[static_cast<size_t>(k)].homogeneous();
    a.row(2 * k) << 0, 0, 0, -p.x(), -p.y(), -1.0, q.y() * p.x(), q.y() * p.y(), q.y();
    a.row(2 * k + 1) << p.x(), p.y(), 1.0, 0, 0, 0, -q.x() * p.x(), -q.x() * p.y(), -q.x();
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return ti.inverse() * hn * tp;
}

Mat3 nearest_rotation(const Mat3& m) {
  const Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return r;
}

double monocular_cost(std::span<const Vec3> object, std::span<const Vec2> pixels,
                      const CameraModel& model, const Pose& pose) {
  double cost = 0.0;
  const Mat3 r = pose.rotation();
  for (size_t k = 0; k < object.size(); ++k) {
    const Vec3 q = r * object[k] + pose.tvec;
    if (!(q.z() > 0.0)) return std::numeric_limits<double>::infinity();
    cost += (pixels[k] - project_camera_point(model, q)).squaredNorm();
  }
  return cost;
}

Pose refine_monocular(std::span<const Vec3> object, std::span<const Vec2> pixels,
                      const CameraModel& model, Pose pose) {
  double cost = monocular_cost(object, pixels, model, pose);
  double lambda = 1e-3;
  for (int it = 0; it < 100 && cost > 0.0; ++it) {
    Mat6 h = Mat6::Zero();
    Vec6 g = Vec6::Zero();
    const Mat3 r = pose.rotation();
    for (size_t k = 0; k < object.size(); ++k) {
      const Vec3 q = r * object[k] + pose.tvec;
      const Mat23 jq = residual_point_jacobian(model, q);
      Mat26 j;
      j.leftCols<3>() = -jq * skew(q);
      j.rightCols<3>() = jq;
      const Vec2 res = pixels[k] - project_camera_point(model, q);
      h.noalias() += j.transpose() * j;
      g.noalias() += j.transpose() * res;
    }
    bool accepted = false;
    for (int tries = 0; tries < 10 && !accepted; ++tries) {
      Mat6 damped = h;
      damped.diagonal() += lambda * h.diagonal();
      const Vec6 delta = damped.ldlt().solve(-g);
      const Pose candidate = perturb(pose, delta);
      const double new_cost = monocular_cost(object, pixels, model, candidate);
      if (new_cost < cost) {
        const double change = (cost - new_cost) / cost;
        pose = candidate;
        cost = new_cost;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (change < 1e-14) return pose;
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) break;
  }
  return pose;
}

}  // namespace

Pose solve_pnp(std::span<const Vec3> object_points, std::span<const Vec2> pixels,
               const CameraModel& model) {
  if (object_points.size() != pixels.size()) {
    throw Error(ErrorCode::InvalidConfig, "object and image point counts differ");
  }
  if (object_points.size() < 4) {
    throw Error(ErrorCode::InsufficientPoints, "PnP needs at least 4 correspondences");
  }
  std::vector<Vec2> plane;
  std::vector<Vec2> normalized;
  plane.reserve(object_points.size());
  normalized.reserve(pixels.size());
  for (size_t k = 0; k < object_points.size(); ++k) {
    if (std::abs(object_points[k].z()) > 1e-9) {
      throw Error(ErrorCode::DegenerateConfiguration, "planar PnP needs object points on Z = 0");
    }
    plane.push_back(object_points[k].head<2>());
    normalized.push_back(model.undistort(model.to_normalized(pixels[k])));
  }

  // Collinearity: smallest singular value of the centred plane points.
  Vec2 mean = Vec2::Zero();
  for (const auto& p : plane) mean += p;
  mean /= static_cast<double>(plane.size());
  Mat2 scatter = Mat2::Zero();
  for (const auto& p : plane) scatter += (p - mean) * (p - mean).transpose();
  const Eigen::SelfAdjointEigenSolver<Mat2> eig(scatter);
  if (!(eig.eigenvalues()(0) > 1e-9 * std::max(1.0, eig.eigenvalues()(1)))) {
    throw Error(ErrorCode::DegenerateConfiguration, "object points are collinear");
  }

  const Mat3 h = homography_dlt(plane, normalized);
  double scale = 2.0 / (h.col(0).norm() + h.col(1).norm());
  Vec3 t = scale * h.col(2);
  if (t.z() < 0.0) {
    scale = -scale;
    t = -t;
  }
  const Vec3 r1 = scale * h.col(0);
  const Vec3 r2 = scale * h.col(1);
  Mat3 r;
  r << r1, r2, r1.cross(r2);
  const Pose initial = Pose::from_matrix(nearest_rotation(r), t);
  return refine_monocular(object_points, pixels, model, initial);
}

namespace {

// Planar targets have a second local minimum with the plane normal mirrored
// about the line of sight through the target centre.
Pose mirrored_pose(std::span<const Vec3> object, const Pose& pose) {
  Vec3 centre = Vec3::Zero();
  for (const auto& p : object) centre += p;
  centre /= static_cast<double>(object.size());
  const Mat3 r = pose.rotation();
  const Vec3 c = r * centre + pose.tvec;
  const Vec3 v = c.normalized();
  const Vec3 n = r.col(2);
  const Vec3 mirrored = 2.0 * n.dot(v) * v - n;
  const Mat3 q = Eigen::Quaterniond::FromTwoVectors(n, mirrored).toRotationMatrix();
  const Mat3 rm = q * r;
  return Pose::from_matrix(rm, c - rm * centre);
}

std::vector<Pose> pnp_candidates(std::span<const Vec3> object, std::span<const Vec2> pixels,
                                 const CameraModel& model) {
  const Pose primary = solve_pnp(object, pixels, model);
  const Pose alternate = refine_monocular(object, pixels, model, mirrored_pose(object, primary));
  std::vector<Pose> out{primary};
  const double c0 = monocular_cost(object, pixels, model, primary);
  const double c1 = monocular_cost(object, pixels, model, alternate);
  if (std::isfinite(c1) && rotation_error(primary, alternate) > 1e-3) {
    if (c1 < c0) out.insert(out.begin(), alternate);
    else out.push_back(alternate);
  }
  return out;
}

}  // namespace

Pose solve_pnp(const BoardSpec& board, std::span<const Vec2> pixels, const CameraModel& model) {
  const auto corners = board_corners(board);
  return solve_pnp(corners, pixels, model);
}

Pose init_relative(const Pose& left_abs, const Pose& right_abs) {
  const Mat3 r = right_abs.rotation() * left_abs.rotation().transpose();
  return Pose::from_matrix(r, right_abs.tvec - r * left_abs.tvec);
}

Pose relative_from_monocular(std::span<const std::pair<Pose, Pose>> views) {
  if (views.empty()) throw Error(ErrorCode::InsufficientViews, "no view pairs to average");
  Eigen::Vector4d sum = Eigen::Vector4d::Zero();
  Vec3 t_sum = Vec3::Zero();
  Eigen::Vector4d first;
  for (size_t i = 0; i < views.size(); ++i) {
    const Pose rel = init_relative(views[i].first, views[i].second);
    const Eigen::Quaterniond q(rel.rotation());
    Eigen::Vector4d c = q.coeffs();
    if (i == 0) first = c;
    if (c.dot(first) < 0.0) c = -c;
    sum += c;
    t_sum += rel.tvec;
  }
  Eigen::Quaterniond mean;
  mean.coeffs() = sum.normalized();
  return Pose::from_matrix(mean.toRotationMatrix(), t_sum / static_cast<double>(views.size()));
}

namespace {

double stereo_cost(std::span<const Vec3> corners, const CameraModel& left, const CameraModel& right,
                   const ViewPair& view, const Pose& relative, const Pose& left_abs) {
  return monocular_cost(corners, view.left_pixels, left, left_abs) +
         monocular_cost(corners, view.right_pixels, right, compose_right_extrinsics(relative, left_abs));
}

struct ViewBranches {
  std::vector<Pose> left;
  std::vector<Pose> right;
};

Pose best_left_pose(std::span<const Vec3> corners, const CameraModel& left, const CameraModel& right,
                    const ViewPair& view, const ViewBranches& branches, const Pose& relative,
                    double* cost) {
  const Pose inverse = relative.inverse();
  std::vector<Pose> options = branches.left;
  for (const auto& r : branches.right) options.push_back(compose(inverse, r));
  double best = std::numeric_limits<double>::infinity();
  Pose chosen = options.front();
  for (const auto& l : options) {
    const double c = stereo_cost(corners, left, right, view, relative, l);
    if (c < best) {
      best = c;
      chosen = l;
    }
  }
  if (cost) *cost = best;
  return chosen;
}

}  // namespace

Pose initial_left_pose(const CameraModel& left, const CameraModel& right, const ViewPair& view,
                       const Pose& relative) {
  view.validate();
  const auto corners = board_corners(view.board);
  const ViewBranches branches{pnp_candidates(corners, view.left_pixels, left),
                              pnp_candidates(corners, view.right_pixels, right)};
  return best_left_pose(corners, left, right, view, branches, relative, nullptr);
}

CalibrationResult initialize(const CalibrationDataset& dataset) {
  dataset.validate();
  if (dataset.views.empty()) throw Error(ErrorCode::InsufficientViews, "dataset has no views");
  const auto corners = board_corners(dataset.board);
  std::vector<ViewBranches> branches;
  std::vector<std::pair<Pose, Pose>> pairs;
  for (const auto& view : dataset.views) {
    branches.push_back({pnp_candidates(corners, view.left_pixels, dataset.left),
                        pnp_candidates(corners, view.right_pixels, dataset.right)});
    pairs.emplace_back(branches.back().left.front(), branches.back().right.front());
  }

  // Relative hypotheses: the monocular average, then every per-view pairing
  // of PnP branches. Each is scored by the stereo cost with the best left
  // pose per view.
  std::vector<Pose> hypotheses{relative_from_monocular(pairs)};
  for (const auto& b : branches) {
    for (const auto& l : b.left) {
      for (const auto& r : b.right) hypotheses.push_back(init_relative(l, r));
    }
  }

  CalibrationResult best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (const Pose& relative : hypotheses) {
    CalibrationResult candidate;
    candidate.relative = relative;
    double total = 0.0;
    for (size_t i = 0; i < dataset.views.size() && total < best_cost; ++i) {
      double c = 0.0;
      candidate.per_view_left_abs.push_back(best_left_pose(corners, dataset.left, dataset.right,
                                                           dataset.views[i], branches[i], relative, &c));
      total += c;
    }
    if (total < best_cost) {
      best_cost = total;
      best = std::move(candidate);
    }
  }
  if (!std::isfinite(best_cost)) {
    best.relative = hypotheses.front();
    best.per_view_left_abs.clear();
    for (const auto& p : pairs) best.per_view_left_abs.push_back(p.first);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Bundle adjustment

namespace {

struct Evaluation {
  double cost = 0.0;
  double squared_sum = 0.0;
  size_t corners = 0;
  bool finite = true;
};

Evaluation evaluate(const CalibrationDataset& dataset, const Pose& relative,
                    const std::vector<Pose>& lefts, const RobustKernel& kernel) {
  Evaluation e;
  const StereoRig rig = dataset.rig(relative);
  const Mat3 rrel = relative.rotation();
  const auto corners = board_corners(dataset.board);
  for (size_t i = 0; i < dataset.views.size(); ++i) {
    const Mat3 rl = lefts[i].rotation();
    const auto& view = dataset.views[i];
    for (size_t j = 0; j < corners.size(); ++j) {
      const Vec3 ql = rl * corners[j] + lefts[i].tvec;
      const Vec3 qr = rrel * ql + relative.tvec;
      if (!(ql.z() > 0.0) || !(qr.z() > 0.0)) {
        e.finite = false;
        e.cost = std::numeric_limits<double>::infinity();
        return e;
      }
      const double sl = (view.left_pixels[j] - project_camera_point(rig.left, ql)).squaredNorm();
      const double sr = (view.right_pixels[j] - project_camera_point(rig.right, qr)).squaredNorm();
      e.cost += kernel.cost(sl) + kernel.cost(sr);
      e.squared_sum += sl + sr;
      e.corners += 2;
    }
  }
  if (!std::isfinite(e.cost)) e.finite = false;
  return e;
}

// Rotation below tol rad and translation below tol relative to the pose's.
bool step_negligible(const Vec6& delta, const Pose& pose, double tol) {
  return delta.head<3>().norm() <= tol && delta.tail<3>().norm() <= tol * std::max(1.0, pose.tvec.norm());
}

}  // namespace

CalibrationResult bundle_adjust(const CalibrationDataset& dataset, const CalibrationResult& init,
                                const RobustKernel& kernel, const BundleAdjustOptions& options) {
  dataset.validate();
  const size_t m = dataset.views.size();
  if (m < 1) throw Error(ErrorCode::InsufficientViews, "bundle adjustment needs views");
  if (init.per_view_left_abs.size() != m) {
    throw Error(ErrorCode::InvalidConfig, "initial left poses do not match the view count");
  }

  Pose relative = init.relative;
  std::vector<Pose> lefts = init.per_view_left_abs;
  Evaluation current = evaluate(dataset, relative, lefts, kernel);
  if (!current.finite) {
    throw Error(ErrorCode::DivergedOptimization, "initial estimate puts the board behind a camera");
  }

  double lambda = options.lambda0;
  int iterations = 0;
  int failures = 0;
  std::vector<Mat6> hvv(m), hrv(m);
  std::vector<Vec6> gv(m);

  // Round-off level: RMS of 1e-10 px per coordinate pair.
  const double cost_floor = 1e-20 * static_cast<double>(current.corners);
  while (iterations < options.max_iterations && current.cost > cost_floor) {
    // Normal equations of the weighted Gauss-Newton model, block by block.
    Mat6 hrr = Mat6::Zero();
    Vec6 gr = Vec6::Zero();
    const StereoRig rig = dataset.rig(relative);
    for (size_t i = 0; i < m; ++i) {
      ViewPair view = dataset.views[i];
      view.left_abs = lefts[i];
      hvv[i].setZero();
      hrv[i].setZero();
      gv[i].setZero();
      for (const CornerTerms& t : corner_terms(view, rig)) {
        const double wl = kernel.weight(t.residual_left.squaredNorm());
        const double wr = kernel.weight(t.residual_right.squaredNorm());
        hrr.noalias() += wr * t.U.transpose() * t.U;
        gr.noalias() += wr * t.U.transpose() * t.residual_right;
        hrv[i].noalias() += wr * t.U.transpose() * t.W;
        hvv[i].noalias() += wl * t.V.transpose() * t.V + wr * t.W.transpose() * t.W;
        gv[i].noalias() += wl * t.V.transpose() * t.residual_left + wr * t.W.transpose() * t.residual_right;
      }
    }
    ++iterations;

    bool accepted = false;
    bool converged = false;
    while (!accepted) {
      // Damped system, relative-pose block reduced by the Schur complement.
      Mat6 s = hrr;
      s.diagonal() += lambda * hrr.diagonal();
      Vec6 b = -gr;
      std::vector<Eigen::LDLT<Mat6>> factors;
      factors.reserve(m);
      for (size_t i = 0; i < m; ++i) {
        Mat6 d = hvv[i];
        d.diagonal() += lambda * hvv[i].diagonal();
        factors.emplace_back(d);
        s -= hrv[i] * factors[i].solve(hrv[i].transpose());
        b += hrv[i] * factors[i].solve(gv[i]);
      }
      const Vec6 delta_rel = s.ldlt().solve(b);
      Pose new_relative = perturb(relative, delta_rel);
      std::vector<Pose> new_lefts(m);
      bool negligible = step_negligible(delta_rel, relative, options.step_tol);
      for (size_t i = 0; i < m; ++i) {
        const Vec6 delta_view = factors[i].solve(-gv[i] - hrv[i].transpose() * delta_rel);
        new_lefts[i] = perturb(lefts[i], delta_view);
        negligible = negligible && step_negligible(delta_view, lefts[i], options.step_tol);
      }

      const Evaluation next = evaluate(dataset, new_relative, new_lefts, kernel);
      const double change = next.finite ? (current.cost - next.cost) / current.cost : -1.0;
      if (next.finite && next.cost < current.cost) {
        relative = new_relative;
        lefts = std::move(new_lefts);
        current = next;
        lambda = std::max(lambda / 10.0, options.lambda_min);
        failures = 0;
        accepted = true;
        converged = change < options.rel_cost_tol || current.cost <= cost_floor;
      } else if (next.finite && (std::abs(change) < options.rel_cost_tol || negligible)) {
        // Round-off level change at the minimum.
        accepted = true;
        converged = true;
      } else {
        lambda *= 10.0;
        if (++failures >= options.max_consecutive_failures) {
          throw Error(ErrorCode::DivergedOptimization,
                      "cost increased for " + std::to_string(failures) + " consecutive damping steps");
        }
      }
    }
    if (converged) break;
  }

  CalibrationResult result;
  result.relative = relative;
  result.per_view_left_abs = lefts;
  result.iterations = iterations;
  result.rms_reproj = current.corners > 0
                          ? std::sqrt(current.squared_sum / static_cast<double>(current.corners))
                          : 0.0;
  if (options.compute_covariance) {
    std::vector<ViewPair> views = dataset.views;
    for (size_t i = 0; i < m; ++i) views[i].left_abs = lefts[i];
    try {
      result.covariance = relative_covariance(assemble_info(views, dataset.rig(relative)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularInformation) throw;
    }
  }
  return result;
}

double robust_cost(const CalibrationDataset& dataset, const CalibrationResult& result,
                   const RobustKernel& kernel) {
  dataset.validate();
  if (result.per_view_left_abs.size() != dataset.views.size()) {
    throw Error(ErrorCode::InvalidConfig, "result needs one left pose per view");
  }
  return evaluate(dataset, result.relative, result.per_view_left_abs, kernel).cost;
}

CalibrationResult calibrate(const CalibrationDataset& dataset, const RobustKernel& kernel,
                            const BundleAdjustOptions& options) {
  return bundle_adjust(dataset, initialize(dataset), kernel, options);
}

CalibrationResult recalibrate(const CalibrationDataset& dataset, const CalibrationResult* previous,
                              const RobustKernel& kernel, const BundleAdjustOptions& options) {
  if (!previous || previous->per_view_left_abs.empty()) return calibrate(dataset, kernel, options);
  CalibrationResult init = *previous;
  init.per_view_left_abs.resize(std::min(init.per_view_left_abs.size(), dataset.views.size()));
  for (size_t i = init.per_view_left_abs.size(); i < dataset.views.size(); ++i) {
    init.per_view_left_abs.push_back(
        initial_left_pose(dataset.left, dataset.right, dataset.views[i], init.relative));
  }
  CalibrationResult warm = bundle_adjust(dataset, init, kernel, options);
  CalibrationResult fresh = calibrate(dataset, kernel, options);
  return robust_cost(dataset, fresh, kernel) < robust_cost(dataset, warm, kernel) ? fresh : warm;
}

// ---------------------------------------------------------------------------
// Metrics

double rotation_error(const Pose& ref, const Pose& cal) {
  const Mat3 m = ref.rotation() * cal.rotation().transpose();
  // arccos((tr − 1)/2) evaluated as atan2(sin, cos) of the same angle; plain
  // arccos loses ~1e-8 rad of resolution next to zero.
  const double cos_angle = std::clamp((m.trace() - 1.0) / 2.0, -1.0, 1.0);
  const Vec3 axial{m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)};
  const double sin_angle = 0.5 * axial.norm();
  return std::atan2(sin_angle, cos_angle) * 180.0 / M_PI;
}

double translation_error(const Vec3& ref, const Vec3& cal) {
  const double denom = ref.norm() + cal.norm();
  if (!(denom > 0.0)) {
    throw Error(ErrorCode::UndefinedError, "translation error undefined for two zero vectors");
  }
  return 2.0 * (ref - cal).norm() / denom * 100.0;
}

ReprojectionStats reprojection_error_stats(const CalibrationDataset& dataset,
                                           const CalibrationResult& result) {
  const StereoRig rig = dataset.rig(result.relative);
  double sum = 0.0;
  double sum_sq = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < dataset.views.size(); ++i) {
    ViewPair view = dataset.views[i];
    view.left_abs = result.per_view_left_abs.at(i);
    const ResidualVector r = residuals(view, rig);
    for (size_t j = 0; j < r.left.size(); ++j) {
      for (const Vec2& e : {r.left[j], r.right[j]}) {
        sum += e.norm();
        sum_sq += e.squaredNorm();
        ++count;
      }
    }
  }
  if (count == 0) return {};
  return {std::sqrt(sum_sq / static_cast<double>(count)), sum / static_cast<double>(count)};
}

double triangulation_error_stats(const CalibrationDataset& dataset, const CalibrationResult& result) {
  const StereoRig rig = dataset.rig(result.relative);
  const auto corners = board_corners(dataset.board);
  double sum = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < dataset.views.size(); ++i) {
    const auto& view = dataset.views[i];
    const Pose& left = result.per_view_left_abs.at(i);
    for (size_t j = 0; j < corners.size(); ++j) {
      sum += (triangulate(rig, left, view.left_pixels[j], view.right_pixels[j]) - corners[j]).norm();
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace calibguide
