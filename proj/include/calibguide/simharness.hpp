#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "calibguide/pipeline.hpp"
#include "calibguide/planner.hpp"
#include "calibguide/random.hpp"

namespace calibguide {

struct ExperimentConfig {
  StereoRig rig;  // ground truth
  BoardSpec board;
  std::vector<double> noise_sigmas{0.5, 1.0, 2.0};
  int trials = 100;
  int n_initial = 2;
  int n_random_images = 28;
  int n_optimal_images = 18;
  std::uint64_t seed = 0;
  SearchConfig search;
  RandomPoseConstraints constraints;
  RobustKernel kernel = RobustKernel::quadratic();
  // Image counts at which the random branch is recalibrated; empty means all.
  std::vector<int> report_counts;
  int threads = 0;  // 0: hardware concurrency
  bool deterministic_reduce = false;  // forces a single worker

  void validate() const;
};

/// The rig of ExperimentConfig's defaults in the simulation study: 640x480,
/// f = 800, (u0, v0) = (320, 240), d = [0.01, 0.1, 0, 0],
/// R = [-0.003, -0.303, -0.017], t = [440.3, -6.2, 25.1] mm, 9x6 board at 5 mm.
ExperimentConfig reference_experiment();

/// Exact projections plus i.i.d. N(0, σ²) noise on every pixel coordinate.
/// Throws Error(NotVisible) unless every corner projects inside both images.
ViewPair synthesize_view(const StereoRig& rig, const BoardSpec& board, const Pose& pose,
                         double sigma, Rng& rng);

struct StepRecord {
  int images = 0;
  Pose relative;
  double rotation_error_deg = 0.0;
  double translation_error_pct = 0.0;
  double reprojection_rms_px = 0.0;
  double triangulation_error_mm = 0.0;
  double monocular_triangulation_error_mm = 0.0;  // optimal branch only
  double trace = 0.0;  // relative-covariance trace at the estimate; 0 if singular
};

struct TrialRecord {
  double sigma = 0.0;
  int trial = 0;
  std::vector<StepRecord> random;
  std::vector<StepRecord> optimal;
};

/// One paired trial: shared initial random views, then one view at a time under
/// each strategy with a recalibration after every addition.
TrialRecord run_trial(const ExperimentConfig& cfg, size_t sigma_index, int trial);

/// All (sigma, trial) pairs, ordered sigma-major. Trials may run on several
/// threads; the result does not depend on the thread count.
std::vector<TrialRecord> run_trials(const ExperimentConfig& cfg);

struct ConvergenceRow {
  std::string strategy;  // "random" or "optimal"
  double sigma = 0.0;
  int images = 0;
  int samples = 0;
  double rotation_mean = 0.0;
  double rotation_std = 0.0;
  double translation_mean = 0.0;
  double translation_std = 0.0;
  double reprojection_mean = 0.0;
  double triangulation_mean = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;

  const ConvergenceRow* find(const std::string& strategy, double sigma, int images) const;
  void write_csv(std::ostream& out) const;
};

ConvergenceReport summarize_convergence(const std::vector<TrialRecord>& trials);
ConvergenceReport run_convergence(const ExperimentConfig& cfg);

struct SchemeRow {
  std::string scheme;  // e.g. "2-random + 4-optimal"
  double sigma = 0.0;
  int samples = 0;
  Vec3 rotation_deg = Vec3::Zero();  // mean rotation vector in degrees
  Vec3 translation_mm = Vec3::Zero();
  double reprojection_px = 0.0;
  double triangulation_mm = 0.0;
};

struct SchemeTable {
  std::vector<SchemeRow> rows;

  const SchemeRow* find(const std::string& scheme, double sigma) const;
  void write_csv(std::ostream& out) const;
};

/// Rows "k-random" for every random image count in `random_counts` and
/// "n-random + k-optimal" for every optimal addition count in `optimal_counts`.
SchemeTable summarize_schemes(const std::vector<TrialRecord>& trials, int n_initial,
                              const std::vector<int>& random_counts,
                              const std::vector<int>& optimal_counts);
SchemeTable compare_strategies(const ExperimentConfig& cfg);

}  // namespace calibguide
