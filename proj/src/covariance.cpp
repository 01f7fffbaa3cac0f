#include "calibguide/covariance.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <sstream>

#include "calibguide/errors.hpp"

namespace calibguide {

namespace {

Mat6 symmetrized(const Mat6& m) { return 0.5 * (m + m.transpose()); }

// Condition number of D^-1/2 M D^-1/2 with D = diag(M). Rotation (rad) and
// translation (mm) blocks differ by orders of magnitude, so the raw ratio of
// eigenvalues measures the unit choice rather than rank deficiency.
double condition_number(const Mat6& symmetric, double* min_eig = nullptr) {
  const Vec6 diag = symmetric.diagonal();
  if ((diag.array() <= 0.0).any() || !diag.allFinite()) {
    if (min_eig) *min_eig = 0.0;
    return std::numeric_limits<double>::infinity();
  }
  const Vec6 scale = diag.cwiseSqrt().cwiseInverse();
  const Mat6 scaled = scale.asDiagonal() * symmetric * scale.asDiagonal();
  const Eigen::SelfAdjointEigenSolver<Mat6> eig(scaled, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(5);
  if (min_eig) *min_eig = lo;
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace

Mat6 schur_reduction(const Mat6& C, const Mat6& B) {
  const Mat6 bs = symmetrized(B);
  const double cond = condition_number(bs);
  if (!(cond < kSingularCondition)) {
    std::ostringstream msg;
    msg << "per-view information block is singular (condition " << cond << ")";
    throw Error(ErrorCode::SingularInformation, msg.str());
  }
  const Eigen::LLT<Mat6> llt(bs);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularInformation, "per-view information block is not positive definite");
  }
  const Mat6 solved = llt.solve(C.transpose());  // B⁻¹ Cᵀ
  return symmetrized(C * solved);
}

Mat6 schur_complement(const InfoBlocks& info) {
  Mat6 s = info.A;
  for (size_t i = 0; i < info.B_blocks.size(); ++i) {
    s -= schur_reduction(info.C_blocks[i], info.B_blocks[i]);
  }
  return symmetrized(s);
}

CovarianceReport covariance_from_schur(const Mat6& schur) {
  const Mat6 s = symmetrized(schur);
  double min_eig = 0.0;
  const double cond = condition_number(s, &min_eig);
  if (!(min_eig > 0.0) || !(cond < kSingularCondition)) {
    std::ostringstream msg;
    msg << "relative-extrinsics information is rank deficient (condition " << cond << ")";
    throw Error(ErrorCode::SingularInformation, msg.str());
  }
  const Eigen::LLT<Mat6> llt(s);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularInformation, "Schur complement is not positive definite");
  }
  CovarianceReport report;
  report.sigma = symmetrized(llt.solve(Mat6::Identity()));
  report.trace = report.sigma.trace();
  report.condition = cond;
  return report;
}

CovarianceReport relative_covariance(const InfoBlocks& info) {
  return covariance_from_schur(schur_complement(info));
}

double trace_objective(const CovarianceReport& report, const Vec6& weights) {
  return weights.dot(report.sigma.diagonal());
}

}  // namespace calibguide
