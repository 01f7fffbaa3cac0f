#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "calibguide/geometry.hpp"

namespace calibguide {

/// One synchronized stereo capture of the board. Index j of both pixel lists is
/// board corner j of board_corners(board).
struct ViewPair {
  BoardSpec board;
  std::vector<Vec2> left_pixels;
  std::vector<Vec2> right_pixels;
  Pose left_abs;  // board -> left camera (current estimate or ground truth)

  /// Throws Error(InvalidConfig) when the pixel lists do not match the board.
  void validate() const;
};

/// Observed minus projected, per corner. Stacked as all left then all right (4n).
struct ResidualVector {
  std::vector<Vec2> left;
  std::vector<Vec2> right;

  Eigen::VectorXd stacked() const;
};

struct JacobianOptions {
  // When set, V also carries the right-residual dependence on the left pose and
  // U is padded with the (zero) left-residual rows, both 4n x 6.
  bool full_chain = false;
};

ResidualVector residuals(const ViewPair& view, const StereoRig& rig);

/// ∂(observed − projected)/∂Q for a camera-frame point Q: −diag(fu, fv)·∂x_d/∂x·∂x/∂Q.
Mat23 residual_point_jacobian(const CameraModel& model, const Vec3& camera_point);

/// Left residuals w.r.t. the left absolute pose (rotation columns first), 2n x 6.
Eigen::MatrixXd block_V(const ViewPair& view, const StereoRig& rig,
                        const JacobianOptions& options = {});
/// Right residuals w.r.t. the relative pose (rotation columns first), 2n x 6.
Eigen::MatrixXd block_U(const ViewPair& view, const StereoRig& rig,
                        const JacobianOptions& options = {});

/// Residuals and 2x6 blocks of one corner: V = ∂r_l/∂left pose, U = ∂r_r/∂relative,
/// W = ∂r_r/∂left pose (rotation columns first).
struct CornerTerms {
  Vec2 residual_left;
  Vec2 residual_right;
  Mat26 V;
  Mat26 U;
  Mat26 W;
};

/// Residuals and blocks of every corner of a view in one pass.
std::vector<CornerTerms> corner_terms(const ViewPair& view, const StereoRig& rig);

/// Per-view products of the information matrix.
struct ViewInfo {
  Mat6 UtU = Mat6::Zero();
  Mat6 VtV = Mat6::Zero();
  Mat6 UtV = Mat6::Zero();
};

/// UᵀU, VᵀV and UᵀV for a view whose corners sit at `left_abs`. Observations are
/// not needed: the blocks depend on geometry only.
ViewInfo view_info(const BoardSpec& board, const Pose& left_abs, const StereoRig& rig,
                   const JacobianOptions& options = {});

/// Blocks of JᵀJ = [[A, C], [Cᵀ, B]] with B block diagonal. The dense J is never built.
struct InfoBlocks {
  Mat6 A = Mat6::Zero();
  std::vector<Mat6> B_blocks;
  std::vector<Mat6> C_blocks;
};

InfoBlocks assemble_info(std::span<const ViewPair> views, const StereoRig& rig,
                         const JacobianOptions& options = {});

}  // namespace calibguide
