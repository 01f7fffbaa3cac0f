#pragma once

#include <Eigen/Dense>
#include <vector>

#include "calibguide/geometry.hpp"
#include "calibguide/jacobian.hpp"
#include "calibguide/pipeline.hpp"
#include "calibguide/planner.hpp"
#include "calibguide/random.hpp"
#include "calibguide/simharness.hpp"

namespace calibguide::test {

inline StereoRig reference_rig() { return reference_experiment().rig; }
inline BoardSpec reference_board() { return reference_experiment().board; }

inline std::vector<Pose> random_poses(const StereoRig& rig, const BoardSpec& board, int count,
                                      std::uint64_t seed) {
  Rng rng(seed);
  RandomPoseConstraints constraints;
  std::vector<Pose> out;
  for (int k = 0; k < count; ++k) out.push_back(random_pose(constraints, rig, board, out, rng));
  return out;
}

inline ViewPair exact_view(const StereoRig& rig, const BoardSpec& board, const Pose& pose) {
  Rng rng(0);
  return synthesize_view(rig, board, pose, 0.0, rng);
}

inline std::vector<ViewPair> exact_views(const StereoRig& rig, const BoardSpec& board,
                                         const std::vector<Pose>& poses) {
  std::vector<ViewPair> views;
  for (const Pose& p : poses) views.push_back(exact_view(rig, board, p));
  return views;
}

inline CalibrationDataset make_dataset(const StereoRig& rig, const BoardSpec& board,
                                       const std::vector<Pose>& poses, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  CalibrationDataset d{rig.left, rig.right, board, {}};
  for (const Pose& p : poses) d.views.push_back(synthesize_view(rig, board, p, sigma, rng));
  return d;
}

inline double max_rel_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace calibguide::test
