#include "calibguide/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <thread>

#include "calibguide/errors.hpp"

namespace calibguide {

void ExperimentConfig::validate() const {
  rig.left.validate();
  rig.right.validate();
  board.validate();
  search.validate();
  constraints.validate();
  if (trials < 1) throw Error(ErrorCode::InvalidConfig, "trials must be >= 1");
  if (noise_sigmas.empty()) throw Error(ErrorCode::InvalidConfig, "need at least one noise sigma");
  for (double s : noise_sigmas) {
    if (!(s > 0.0)) throw Error(ErrorCode::InvalidConfig, "noise sigmas must be positive");
  }
  if (n_initial < 2) throw Error(ErrorCode::InvalidConfig, "n_initial must be >= 2");
  if (n_random_images < 0 || n_optimal_images < 0) {
    throw Error(ErrorCode::InvalidConfig, "image counts must be non-negative");
  }
}

ExperimentConfig reference_experiment() {
  ExperimentConfig cfg;
  const CameraModel camera{800.0, 800.0, 320.0, 240.0, 0.01, 0.1, 0.0, 0.0, 640, 480};
  cfg.rig = {camera, camera, Pose{Vec3(-0.003, -0.303, -0.017), Vec3(440.3, -6.2, 25.1)}};
  cfg.board = {9, 6, 5.0};
  return cfg;
}

ViewPair synthesize_view(const StereoRig& rig, const BoardSpec& board, const Pose& pose,
                         double sigma, Rng& rng) {
  if (!is_visible(pose, rig, board, 0.0)) {
    throw Error(ErrorCode::NotVisible, "board is not fully visible in both cameras");
  }
  ViewPair view;
  view.board = board;
  view.left_abs = pose;
  const Pose right = compose_right_extrinsics(rig.relative, pose);
  for (const Vec3& corner : board_corners(board)) {
    Vec2 l = project(rig.left, pose, corner);
    Vec2 r = project(rig.right, right, corner);
    if (sigma > 0.0) {
      l += sigma * Vec2(rng.normal(), rng.normal());
      r += sigma * Vec2(rng.normal(), rng.normal());
    }
    view.left_pixels.push_back(l);
    view.right_pixels.push_back(r);
  }
  return view;
}

namespace {

// Stream ids inside one trial.
enum Stream : std::uint64_t {
  kPoses = 1,
  kNoise = 2,
  kOptimalNoise = 4,
  kSearch = 5,
};

// Triangulation error of the relative pose obtained by averaging per-view
// monocular PnP pairs, with the left PnP poses as board frames.
double monocular_error(const CalibrationDataset& data, const std::vector<std::pair<Pose, Pose>>& monocular) {
  CalibrationResult r;
  r.relative = relative_from_monocular(monocular);
  for (const auto& p : monocular) r.per_view_left_abs.push_back(p.first);
  return triangulation_error_stats(data, r);
}

CalibrationDataset empty_dataset(const ExperimentConfig& cfg) {
  CalibrationDataset d;
  d.left = cfg.rig.left;
  d.right = cfg.rig.right;
  d.board = cfg.board;
  return d;
}

CalibrationResult refit(const CalibrationDataset& data, const CalibrationResult* previous,
                                    const RobustKernel& kernel) {
  BundleAdjustOptions options;
  options.compute_covariance = false;
  return recalibrate(data, previous, kernel, options);
}

double covariance_trace(const CalibrationDataset& data, const CalibrationResult& result,
                        const JacobianOptions& jacobian) {
  std::vector<ViewPair> views = data.views;
  for (size_t i = 0; i < views.size(); ++i) views[i].left_abs = result.per_view_left_abs[i];
  try {
    return relative_covariance(assemble_info(views, data.rig(result.relative), jacobian)).trace;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularInformation) throw;
    return 0.0;
  }
}

StepRecord record_step(const ExperimentConfig& cfg, const CalibrationDataset& data,
                       const CalibrationResult& result) {
  StepRecord s;
  s.images = static_cast<int>(data.views.size());
  s.relative = result.relative;
  s.rotation_error_deg = rotation_error(cfg.rig.relative, result.relative);
  s.translation_error_pct = translation_error(cfg.rig.relative.tvec, result.relative.tvec);
  s.reprojection_rms_px = reprojection_error_stats(data, result).rms;
  s.triangulation_error_mm = triangulation_error_stats(data, result);
  s.trace = covariance_trace(data, result, cfg.search.jacobian);
  return s;
}

}  // namespace

TrialRecord run_trial(const ExperimentConfig& cfg, size_t sigma_index, int trial) {
  const double sigma = cfg.noise_sigmas.at(sigma_index);
  const std::uint64_t trial_seed =
      mix_seed(cfg.seed, static_cast<std::uint64_t>(sigma_index) * 1000003ULL +
                             static_cast<std::uint64_t>(trial));
  Rng pose_rng(mix_seed(trial_seed, kPoses));
  Rng noise_rng(mix_seed(trial_seed, kNoise));
  Rng optimal_noise_rng(mix_seed(trial_seed, kOptimalNoise));

  TrialRecord record;
  record.sigma = sigma;
  record.trial = trial;

  // Shared initial views.
  std::vector<Pose> history;
  CalibrationDataset shared = empty_dataset(cfg);
  for (int k = 0; k < cfg.n_initial; ++k) {
    const Pose pose = random_pose(cfg.constraints, cfg.rig, cfg.board, history, pose_rng);
    history.push_back(pose);
    shared.views.push_back(synthesize_view(cfg.rig, cfg.board, pose, sigma, noise_rng));
  }
  const CalibrationResult initial = refit(shared, nullptr, cfg.kernel);
  const StepRecord initial_step = record_step(cfg, shared, initial);

  const std::set<int> report(cfg.report_counts.begin(), cfg.report_counts.end());
  const auto reported = [&](int images) { return report.empty() || report.count(images) > 0; };

  // Random branch.
  {
    CalibrationDataset data = shared;
    std::vector<Pose> random_history = history;
    CalibrationResult current = initial;
    record.random.push_back(initial_step);
    for (int k = 0; k < cfg.n_random_images; ++k) {
      const Pose pose = random_pose(cfg.constraints, cfg.rig, cfg.board, random_history, pose_rng);
      random_history.push_back(pose);
      data.views.push_back(synthesize_view(cfg.rig, cfg.board, pose, sigma, noise_rng));
      const int images = static_cast<int>(data.views.size());
      if (!reported(images)) continue;
      current = refit(data, &current, cfg.kernel);
      record.random.push_back(record_step(cfg, data, current));
    }
  }

  // Optimal branch.
  {
    CalibrationDataset data = shared;
    CalibrationResult current = initial;
    StepRecord first = initial_step;
    std::vector<std::pair<Pose, Pose>> monocular;
    for (const auto& view : data.views) {
      monocular.emplace_back(solve_pnp(cfg.board, view.left_pixels, cfg.rig.left),
                             solve_pnp(cfg.board, view.right_pixels, cfg.rig.right));
    }
    first.monocular_triangulation_error_mm =
        monocular_error(data, monocular);
    record.optimal.push_back(first);

    for (int k = 0; k < cfg.n_optimal_images; ++k) {
      const StereoRig estimate = data.rig(current.relative);
      std::vector<ViewPair> views = data.views;
      for (size_t i = 0; i < views.size(); ++i) views[i].left_abs = current.per_view_left_abs[i];

      // The objective uses the estimate; the common field of view is that of the
      // physical rig.
      SearchConfig search = cfg.search;
      search.seed = mix_seed(mix_seed(trial_seed, kSearch), static_cast<std::uint64_t>(k));
      const Pose chosen = next_optimal_pose(estimate, views, search, &cfg.rig).pose;

      data.views.push_back(synthesize_view(cfg.rig, cfg.board, chosen, sigma, optimal_noise_rng));
      monocular.emplace_back(solve_pnp(cfg.board, data.views.back().left_pixels, cfg.rig.left),
                             solve_pnp(cfg.board, data.views.back().right_pixels, cfg.rig.right));
      current = refit(data, &current, cfg.kernel);
      StepRecord step = record_step(cfg, data, current);
      step.monocular_triangulation_error_mm =
          monocular_error(data, monocular);
      record.optimal.push_back(step);
    }
  }
  return record;
}

std::vector<TrialRecord> run_trials(const ExperimentConfig& cfg) {
  cfg.validate();
  const size_t jobs = cfg.noise_sigmas.size() * static_cast<size_t>(cfg.trials);
  std::vector<TrialRecord> records(jobs);
  std::vector<std::exception_ptr> errors(jobs);

  unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                     : std::max(1u, std::thread::hardware_concurrency());
  if (cfg.deterministic_reduce) workers = 1;
  workers = static_cast<unsigned>(std::min<size_t>(workers, jobs));

  // Static interleaved partition; each job writes only its own slot.
  const auto work = [&](unsigned worker) {
    for (size_t job = worker; job < jobs; job += workers) {
      const size_t sigma_index = job / static_cast<size_t>(cfg.trials);
      const int trial = static_cast<int>(job % static_cast<size_t>(cfg.trials));
      try {
        records[job] = run_trial(cfg, sigma_index, trial);
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return records;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

struct Accumulator {
  int n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  void add(double x) {
    ++n;
    sum += x;
    sum_sq += x * x;
  }
  double mean() const { return n ? sum / n : 0.0; }
  double stddev() const {
    if (n < 2) return 0.0;
    const double m = mean();
    return std::sqrt(std::max(0.0, (sum_sq - n * m * m) / (n - 1)));
  }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

}  // namespace

const ConvergenceRow* ConvergenceReport::find(const std::string& strategy, double sigma,
                                              int images) const {
  for (const auto& row : rows) {
    if (row.strategy == strategy && row.sigma == sigma && row.images == images) return &row;
  }
  return nullptr;
}

void ConvergenceReport::write_csv(std::ostream& out) const {
  out << "strategy,sigma_px,images,samples,rotation_error_mean_deg,rotation_error_std_deg,"
         "translation_error_mean_pct,translation_error_std_pct,reprojection_rms_mean_px,"
         "triangulation_error_mean_mm\n";
  for (const auto& r : rows) {
    out << r.strategy << ',' << fmt(r.sigma) << ',' << r.images << ',' << r.samples << ','
        << fmt(r.rotation_mean) << ',' << fmt(r.rotation_std) << ',' << fmt(r.translation_mean)
        << ',' << fmt(r.translation_std) << ',' << fmt(r.reprojection_mean) << ','
        << fmt(r.triangulation_mean) << '\n';
  }
}

ConvergenceReport summarize_convergence(const std::vector<TrialRecord>& trials) {
  struct Acc {
    Accumulator rot, trans, re, te;
  };
  // Keyed by (strategy, sigma, images); std::map keeps the output ordered.
  std::map<std::tuple<std::string, double, int>, Acc> acc;
  for (const auto& t : trials) {
    for (const auto& [name, steps] : {std::pair{std::string("optimal"), &t.optimal},
                                      std::pair{std::string("random"), &t.random}}) {
      for (const auto& s : *steps) {
        Acc& a = acc[{name, t.sigma, s.images}];
        a.rot.add(s.rotation_error_deg);
        a.trans.add(s.translation_error_pct);
        a.re.add(s.reprojection_rms_px);
        a.te.add(s.triangulation_error_mm);
      }
    }
  }
  ConvergenceReport report;
  for (const auto& [key, a] : acc) {
    ConvergenceRow row;
    row.strategy = std::get<0>(key);
    row.sigma = std::get<1>(key);
    row.images = std::get<2>(key);
    row.samples = a.rot.n;
    row.rotation_mean = a.rot.mean();
    row.rotation_std = a.rot.stddev();
    row.translation_mean = a.trans.mean();
    row.translation_std = a.trans.stddev();
    row.reprojection_mean = a.re.mean();
    row.triangulation_mean = a.te.mean();
    report.rows.push_back(row);
  }
  return report;
}

ConvergenceReport run_convergence(const ExperimentConfig& cfg) {
  return summarize_convergence(run_trials(cfg));
}

const SchemeRow* SchemeTable::find(const std::string& scheme, double sigma) const {
  for (const auto& row : rows) {
    if (row.scheme == scheme && row.sigma == sigma) return &row;
  }
  return nullptr;
}

void SchemeTable::write_csv(std::ostream& out) const {
  out << "scheme,sigma_px,samples,R_x_deg,R_y_deg,R_z_deg,t_x_mm,t_y_mm,t_z_mm,RE_px,TE_mm\n";
  for (const auto& r : rows) {
    out << r.scheme << ',' << fmt(r.sigma) << ',' << r.samples;
    for (int k = 0; k < 3; ++k) out << ',' << fmt(r.rotation_deg[k]);
    for (int k = 0; k < 3; ++k) out << ',' << fmt(r.translation_mm[k]);
    out << ',' << fmt(r.reprojection_px) << ',' << fmt(r.triangulation_mm) << '\n';
  }
}

SchemeTable summarize_schemes(const std::vector<TrialRecord>& trials, int n_initial,
                              const std::vector<int>& random_counts,
                              const std::vector<int>& optimal_counts) {
  std::vector<double> sigmas;
  for (const auto& t : trials) {
    if (std::find(sigmas.begin(), sigmas.end(), t.sigma) == sigmas.end()) sigmas.push_back(t.sigma);
  }
  SchemeTable table;
  const auto emit = [&](const std::string& name, double sigma, bool optimal, int images) {
    SchemeRow row;
    row.scheme = name;
    row.sigma = sigma;
    Accumulator re, te;
    for (const auto& t : trials) {
      if (t.sigma != sigma) continue;
      for (const auto& s : optimal ? t.optimal : t.random) {
        if (s.images != images) continue;
        row.rotation_deg += s.relative.rvec * 180.0 / M_PI;
        row.translation_mm += s.relative.tvec;
        re.add(s.reprojection_rms_px);
        te.add(s.triangulation_error_mm);
      }
    }
    row.samples = re.n;
    if (row.samples == 0) return;
    row.rotation_deg /= row.samples;
    row.translation_mm /= row.samples;
    row.reprojection_px = re.mean();
    row.triangulation_mm = te.mean();
    table.rows.push_back(row);
  };
  for (double sigma : sigmas) {
    for (int count : random_counts) {
      emit(std::to_string(count) + "-random", sigma, false, count);
    }
    for (int count : optimal_counts) {
      emit(std::to_string(n_initial) + "-random + " + std::to_string(count) + "-optimal", sigma, true,
           n_initial + count);
    }
  }
  return table;
}

SchemeTable compare_strategies(const ExperimentConfig& cfg) {
  ExperimentConfig run = cfg;
  std::vector<int> random_counts;
  for (int count : {run.n_initial, 10, 20}) {
    if (count <= run.n_initial + run.n_random_images &&
        std::find(random_counts.begin(), random_counts.end(), count) == random_counts.end()) {
      random_counts.push_back(count);
    }
  }
  std::vector<int> optimal_counts;
  for (int count : {2, 4, 6}) {
    if (count <= run.n_optimal_images) optimal_counts.push_back(count);
  }
  run.n_random_images = std::min(run.n_random_images, random_counts.back() - run.n_initial);
  run.n_optimal_images = optimal_counts.empty() ? 0 : optimal_counts.back();
  run.report_counts = random_counts;
  return summarize_schemes(run_trials(run), run.n_initial, random_counts, optimal_counts);
}

}  // namespace calibguide
