#pragma once

#include "calibguide/geometry.hpp"
#include "calibguide/jacobian.hpp"

namespace calibguide {

/// Covariance of the relative extrinsics [δφ (rad), δρ (mm)], up to the common
/// measurement-noise factor σ² which does not move the argmin of the trace.
struct CovarianceReport {
  Mat6 sigma = Mat6::Zero();
  double trace = 0.0;
  double condition = 0.0;  // of the Schur complement
};

inline constexpr double kSingularCondition = 1e12;
inline constexpr double kIllConditioned = 1e10;

/// C·B⁻¹·Cᵀ contribution of one view, via a Cholesky solve of B.
/// Throws Error(SingularInformation) when B is not safely invertible.
Mat6 schur_reduction(const Mat6& C, const Mat6& B);

/// A − Σ Cᵢ Bᵢ⁻¹ Cᵢᵀ (symmetrized).
Mat6 schur_complement(const InfoBlocks& info);

/// Σ = S⁻¹ for a Schur complement S. Throws Error(SingularInformation) when S is
/// not positive definite or its condition number exceeds kSingularCondition.
CovarianceReport covariance_from_schur(const Mat6& schur);

CovarianceReport relative_covariance(const InfoBlocks& info);

/// Σₖ wₖ Σₖₖ. All-ones weights give the plain trace.
double trace_objective(const CovarianceReport& report, const Vec6& weights = Vec6::Ones());

}  // namespace calibguide
