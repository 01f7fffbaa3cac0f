#include "calibguide/jacobian.hpp"

#include "calibguide/errors.hpp"

namespace calibguide {

void ViewPair::validate() const {
  board.validate();
  const auto n = static_cast<size_t>(board.corner_count());
  if (left_pixels.size() != n || right_pixels.size() != n) {
    throw Error(ErrorCode::InvalidConfig, "view pixel lists must have rows*cols entries");
  }
}

Eigen::VectorXd ResidualVector::stacked() const {
  const auto n = static_cast<Eigen::Index>(left.size());
  Eigen::VectorXd out(4 * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.segment<2>(2 * j) = left[static_cast<size_t>(j)];
    out.segment<2>(2 * n + 2 * j) = right[static_cast<size_t>(j)];
  }
  return out;
}

ResidualVector residuals(const ViewPair& view, const StereoRig& rig) {
  view.validate();
  const auto corners = board_corners(view.board);
  const Pose right_abs = compose_right_extrinsics(rig.relative, view.left_abs);
  ResidualVector r;
  r.left.reserve(corners.size());
  r.right.reserve(corners.size());
  for (size_t j = 0; j < corners.size(); ++j) {
    r.left.push_back(view.left_pixels[j] - project(rig.left, view.left_abs, corners[j]));
    r.right.push_back(view.right_pixels[j] - project(rig.right, right_abs, corners[j]));
  }
  return r;
}

Mat23 residual_point_jacobian(const CameraModel& model, const Vec3& q) {
  if (!(q.z() > 0.0)) throw Error(ErrorCode::BehindCamera, "point behind camera");
  const double inv_z = 1.0 / q.z();
  const Vec2 x{q.x() * inv_z, q.y() * inv_z};
  Mat23 dx_dq;
  dx_dq << inv_z, 0.0, -q.x() * inv_z * inv_z,
           0.0, inv_z, -q.y() * inv_z * inv_z;
  Mat2 dp_dxd = Mat2::Zero();
  dp_dxd(0, 0) = -model.fu;
  dp_dxd(1, 1) = -model.fv;
  return dp_dxd * model.distortion_jacobian(x) * dx_dq;
}

namespace {

// 2x6 pose block for ∂r/∂(δφ, δρ) given ∂r/∂Q at Q.
inline Mat26 pose_block(const Mat23& dr_dq, const Vec3& q) {
  Mat26 out;
  out.leftCols<3>() = -dr_dq * skew(q);
  out.rightCols<3>() = dr_dq;
  return out;
}

// Visits each corner with its 2x6 blocks: V (left residual / left pose),
// U (right residual / relative pose) and W (right residual / left pose).
template <typename Fn>
void for_each_corner(const BoardSpec& board, const Pose& left_abs, const StereoRig& rig, Fn&& fn) {
  const Mat3 rl = left_abs.rotation();
  const Mat3 rrel = rig.relative.rotation();
  const auto corners = board_corners(board);
  for (size_t j = 0; j < corners.size(); ++j) {
    const Vec3 ql = rl * corners[j] + left_abs.tvec;
    const Vec3 qr = rrel * ql + rig.relative.tvec;
    const Mat23 jl = residual_point_jacobian(rig.left, ql);
    const Mat23 jr = residual_point_jacobian(rig.right, qr);
    const Mat26 v = pose_block(jl, ql);
    const Mat26 u = pose_block(jr, qr);
    Mat26 w;
    w.leftCols<3>() = -jr * rrel * skew(ql);
    w.rightCols<3>() = jr * rrel;
    fn(j, v, u, w);
  }
}

}  // namespace

std::vector<CornerTerms> corner_terms(const ViewPair& view, const StereoRig& rig) {
  view.validate();
  const Mat3 rl = view.left_abs.rotation();
  const Mat3 rrel = rig.relative.rotation();
  const auto corners = board_corners(view.board);
  std::vector<CornerTerms> terms(corners.size());
  for (size_t j = 0; j < corners.size(); ++j) {
    const Vec3 ql = rl * corners[j] + view.left_abs.tvec;
    const Vec3 qr = rrel * ql + rig.relative.tvec;
    const Mat23 jl = residual_point_jacobian(rig.left, ql);
    const Mat23 jr = residual_point_jacobian(rig.right, qr);
    CornerTerms& t = terms[j];
    t.residual_left = view.left_pixels[j] - project_camera_point(rig.left, ql);
    t.residual_right = view.right_pixels[j] - project_camera_point(rig.right, qr);
    t.V = pose_block(jl, ql);
    t.U = pose_block(jr, qr);
    t.W.leftCols<3>() = -jr * rrel * skew(ql);
    t.W.rightCols<3>() = jr * rrel;
  }
  return terms;
}

Eigen::MatrixXd block_V(const ViewPair& view, const StereoRig& rig, const JacobianOptions& options) {
  view.validate();
  const Eigen::Index n = view.board.corner_count();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(options.full_chain ? 4 * n : 2 * n, 6);
  for_each_corner(view.board, view.left_abs, rig,
                  [&](size_t j, const Mat26& v, const Mat26&, const Mat26& w) {
                    const auto row = static_cast<Eigen::Index>(2 * j);
                    out.block<2, 6>(row, 0) = v;
                    if (options.full_chain) out.block<2, 6>(2 * n + row, 0) = w;
                  });
  return out;
}

Eigen::MatrixXd block_U(const ViewPair& view, const StereoRig& rig, const JacobianOptions& options) {
  view.validate();
  const Eigen::Index n = view.board.corner_count();
  const Eigen::Index offset = options.full_chain ? 2 * n : 0;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(options.full_chain ? 4 * n : 2 * n, 6);
  for_each_corner(view.board, view.left_abs, rig,
                  [&](size_t j, const Mat26&, const Mat26& u, const Mat26&) {
                    out.block<2, 6>(offset + static_cast<Eigen::Index>(2 * j), 0) = u;
                  });
  return out;
}

ViewInfo view_info(const BoardSpec& board, const Pose& left_abs, const StereoRig& rig,
                   const JacobianOptions& options) {
  ViewInfo info;
  for_each_corner(board, left_abs, rig, [&](size_t, const Mat26& v, const Mat26& u, const Mat26& w) {
    info.UtU.noalias() += u.transpose() * u;
    info.VtV.noalias() += v.transpose() * v;
    if (options.full_chain) {
      // U rows live next to W (right residuals); V rows meet zero U rows.
      info.VtV.noalias() += w.transpose() * w;
      info.UtV.noalias() += u.transpose() * w;
    } else {
      info.UtV.noalias() += u.transpose() * v;
    }
  });
  info.UtU = 0.5 * (info.UtU + info.UtU.transpose());
  info.VtV = 0.5 * (info.VtV + info.VtV.transpose());
  return info;
}

InfoBlocks assemble_info(std::span<const ViewPair> views, const StereoRig& rig,
                         const JacobianOptions& options) {
  InfoBlocks blocks;
  blocks.B_blocks.reserve(views.size());
  blocks.C_blocks.reserve(views.size());
  for (const auto& view : views) {
    view.validate();
    const ViewInfo info = view_info(view.board, view.left_abs, rig, options);
    blocks.A += info.UtU;
    blocks.B_blocks.push_back(info.VtV);
    blocks.C_blocks.push_back(info.UtV);
  }
  return blocks;
}

}  // namespace calibguide
