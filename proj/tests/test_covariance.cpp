#include <gtest/gtest.h>

#include "calibguide/covariance.hpp"
#include "calibguide/errors.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace calibguide;

namespace {

// max |a - b| / |b| over the entries of b above 1e-12 of its largest entry.
double entrywise_rel_error(const Mat6& a, const Mat6& b) {
  const double floor = 1e-12 * b.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      worst = std::max(worst, std::abs(a(r, c) - b(r, c)) / std::max(std::abs(b(r, c)), floor));
    }
  }
  return worst;
}

Mat6 dense_oracle(const std::vector<ViewPair>& views, const StereoRig& rig, const JacobianOptions& options) {
  std::vector<Eigen::MatrixXd> U, V;
  for (const ViewPair& v : views) {
    U.push_back(block_U(v, rig, options));
    V.push_back(block_V(v, rig, options));
  }
  return oracle::dense_relative_covariance(oracle::dense_from_blocks(U, V));
}

}  // namespace

TEST(RelativeCovariance, DecoupledCaseIsInverseOfA) {
  InfoBlocks info;
  Eigen::Matrix<double, 6, 6> m = Eigen::Matrix<double, 6, 6>::Random();
  info.A = m * m.transpose() + Mat6::Identity();
  info.B_blocks.push_back(Mat6::Identity() * 3.0);
  info.C_blocks.push_back(Mat6::Zero());
  const CovarianceReport r = relative_covariance(info);
  EXPECT_LT(test::max_rel_error(r.sigma, info.A.inverse()), 1e-12);
  EXPECT_NEAR(r.trace, r.sigma.trace(), 1e-15 * r.trace);
}

TEST(RelativeCovariance, MatchesDenseInverseOnSmallInstances) {
  const StereoRig rig = test::reference_rig();
  const JacobianOptions options{true};
  for (const BoardSpec& board : {BoardSpec{2, 2, 30.0}, BoardSpec{3, 3, 15.0}}) {
    for (int views_count : {2, 3}) {
      for (std::uint64_t seed = 21; seed < 26; ++seed) {
        const auto views = test::exact_views(rig, board, test::random_poses(rig, board, views_count, seed));
        const CovarianceReport r = relative_covariance(assemble_info(views, rig, options));
        const Mat6 dense = dense_oracle(views, rig, options);
        EXPECT_LT(entrywise_rel_error(r.sigma, dense), 1e-8) << board.corner_count() << " corners, seed " << seed;
        EXPECT_NEAR(trace_objective(r), dense.trace(), 1e-8 * dense.trace());
      }
    }
  }
}

// Shared-row blocks make the joint problem ill-conditioned; agreement is bounded
// by round-off times the scaled condition number.
TEST(RelativeCovariance, SharedRowBlocksAgreeWithinConditioning) {
  const StereoRig rig = test::reference_rig();
  const BoardSpec board{3, 3, 15.0};
  for (int views_count : {2, 3}) {
    const auto views = test::exact_views(rig, board, test::random_poses(rig, board, views_count, 21));
    std::vector<Eigen::MatrixXd> U, V;
    for (const ViewPair& v : views) {
      U.push_back(block_U(v, rig));
      V.push_back(block_V(v, rig));
    }
    const Eigen::MatrixXd J = oracle::dense_from_blocks(U, V);
    const Eigen::MatrixXd info = J.transpose() * J;
    const Eigen::VectorXd d = info.diagonal().cwiseSqrt().cwiseInverse();
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(d.asDiagonal() * info * d.asDiagonal());
    const double kappa = svd.singularValues()(0) / svd.singularValues().tail(1)(0);
    const CovarianceReport r = relative_covariance(assemble_info(views, rig));
    EXPECT_LT(entrywise_rel_error(r.sigma, oracle::dense_relative_covariance(J)), 1e-15 * kappa);
  }
}

TEST(RelativeCovariance, SymmetricWithPositiveTrace) {
  const StereoRig rig = test::reference_rig();
  const BoardSpec board = test::reference_board();
  const auto views = test::exact_views(rig, board, test::random_poses(rig, board, 4, 22));
  const CovarianceReport r = relative_covariance(assemble_info(views, rig));
  EXPECT_LT((r.sigma - r.sigma.transpose()).cwiseAbs().maxCoeff(), 1e-12 * r.sigma.cwiseAbs().maxCoeff());
  EXPECT_GT(r.trace, 0.0);
  EXPECT_GT(r.condition, 1.0);
}

TEST(RelativeCovariance, HeadOnSingleViewFlagged) {
  StereoRig rig = test::reference_rig();
  rig.relative = Pose{Vec3::Zero(), Vec3(100, 0, 0)};
  for (CameraModel* m : {&rig.left, &rig.right}) m->k1 = m->k2 = 0.0;
  const BoardSpec board = test::reference_board();
  const Pose head_on = pose_from_centre(Mat3::Identity(), Vec3(50, 0, 1000), board);
  const std::vector<ViewPair> views{test::exact_view(rig, board, head_on)};
  try {
    const CovarianceReport r = relative_covariance(assemble_info(views, rig));
    EXPECT_GT(r.condition, kIllConditioned);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularInformation);
  }
}

TEST(RelativeCovariance, RankDeficientThrows) {
  InfoBlocks info;
  info.A = Mat6::Zero();
  info.A(0, 0) = 1.0;
  try {
    relative_covariance(info);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularInformation);
  }
}

TEST(TraceObjective, IdentityGivesSix) {
  CovarianceReport r;
  r.sigma = Mat6::Identity();
  EXPECT_DOUBLE_EQ(trace_objective(r), 6.0);
}

TEST(TraceObjective, WeightsMask) {
  CovarianceReport r;
  r.sigma = Mat6::Zero();
  r.sigma.diagonal() << 1, 2, 3, 40, 50, 60;
  Vec6 w;
  w << 1, 1, 1, 0, 0, 0;
  EXPECT_DOUBLE_EQ(trace_objective(r, w), 6.0);
}

TEST(RelativeCovariance, MonotoneUnderAugmentation) {
  const StereoRig rig = test::reference_rig();
  const BoardSpec board = test::reference_board();
  Rng rng(23);
  for (int k = 0; k < 100; ++k) {
    const int m = 2 + static_cast<int>(rng.uniform() * 5);
    auto views = test::exact_views(rig, board, test::random_poses(rig, board, m + 1, 1000 + k));
    const ViewPair extra = views.back();
    views.pop_back();
    const double before = relative_covariance(assemble_info(views, rig)).trace;
    views.push_back(extra);
    const double after = relative_covariance(assemble_info(views, rig)).trace;
    EXPECT_LE(after, before + 1e-9) << "augmentation " << k;
  }
}
