// calibguide command line: simulation study, calibration, next-pose planning
// and the guidance service.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "calibguide/errors.hpp"
#include "calibguide/serialization.hpp"
#include "calibguide/server.hpp"
#include "calibguide/session.hpp"
#include "calibguide/simharness.hpp"

using namespace calibguide;

namespace {

GuidanceServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

void write_output(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  write_text_file(path, text);
}

ExperimentConfig load_experiment(const std::string& path, const std::uint64_t* seed, bool deterministic,
                                 int threads) {
  ExperimentConfig cfg = json_as<ExperimentConfig>(read_json_file(path));
  if (seed) cfg.seed = *seed;
  if (deterministic) cfg.deterministic_reduce = true;
  if (threads > 0) cfg.threads = threads;
  cfg.validate();
  return cfg;
}

int run_simulate(const std::string& config, const std::string& out, const std::uint64_t* seed,
                 bool deterministic, int threads) {
  const ExperimentConfig cfg = load_experiment(config, seed, deterministic, threads);
  std::ostringstream csv;
  run_convergence(cfg).write_csv(csv);
  write_output(out, csv.str());
  return 0;
}

int run_compare(const std::string& config, const std::string& out, const std::uint64_t* seed,
                bool deterministic, int threads) {
  const ExperimentConfig cfg = load_experiment(config, seed, deterministic, threads);
  std::ostringstream csv;
  compare_strategies(cfg).write_csv(csv);
  write_output(out, csv.str());
  return 0;
}

int run_calibrate(const std::string& dataset_path, const std::string& out, const std::string& kernel_spec) {
  const CalibrationDataset dataset = json_as<CalibrationDataset>(read_json_file(dataset_path));
  const RobustKernel kernel = RobustKernel::parse(kernel_spec);
  const CalibrationResult result = calibrate(dataset, kernel);
  json j = result;
  const ReprojectionStats re = reprojection_error_stats(dataset, result);
  j["kernel"] = kernel.to_string();
  j["reprojection_mean_px"] = re.mean;
  j["triangulation_error_mm"] = triangulation_error_stats(dataset, result);
  write_output(out, j.dump(2) + "\n");
  return 0;
}

int run_next_pose(const std::string& session_path, const std::string& out, const std::uint64_t* seed) {
  write_output(out, plan_next_pose(read_json_file(session_path), seed).dump(2) + "\n");
  return 0;
}

int run_serve(std::string host, int port, std::string data_dir) {
  if (port <= 0) {
    const char* env = std::getenv("CALIBGUIDE_PORT");
    port = env ? std::atoi(env) : 8080;
  }
  if (data_dir.empty()) {
    const char* env = std::getenv("CALIBGUIDE_DATA_DIR");
    data_dir = env ? env : "calibguide-data";
  }
  SessionManager sessions(data_dir);
  GuidanceServer server(sessions);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "calibguide: serving on " << host << ":" << port << ", sessions in " << data_dir << "\n";
  const bool ok = server.listen(host, port);
  g_server = nullptr;
  if (!ok && !server.is_running()) {
    std::cerr << error_json("BIND_FAILED", "cannot listen on " + host + ":" + std::to_string(port)).dump()
              << "\n";
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stereo calibration next-optimal-pose toolkit"};
  app.require_subcommand(1);

  std::string config, out, dataset, session, kernel = "huber:1.0", host = "0.0.0.0", data_dir;
  std::uint64_t seed = 0;
  bool deterministic = false;
  int threads = 0, port = 0;

  auto* simulate = app.add_subcommand("simulate", "Convergence study of random vs optimal poses (CSV)");
  simulate->add_option("--config", config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", out, "Output CSV ('-' for stdout)")->required();
  auto* sim_seed = simulate->add_option("--seed", seed, "Override the config seed");
  simulate->add_flag("--deterministic-reduce", deterministic, "Single worker");
  simulate->add_option("--threads", threads, "Worker threads (0: config / hardware)");

  auto* compare = app.add_subcommand("compare", "Scheme table: k-random vs 2-random + k-optimal (CSV)");
  compare->add_option("--config", config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  compare->add_option("--out", out, "Output CSV ('-' for stdout)")->required();
  auto* cmp_seed = compare->add_option("--seed", seed, "Override the config seed");
  compare->add_flag("--deterministic-reduce", deterministic, "Single worker");
  compare->add_option("--threads", threads, "Worker threads");

  auto* calib = app.add_subcommand("calibrate", "Stereo calibration of a corner dataset (JSON)");
  calib->add_option("--dataset", dataset, "Dataset JSON")->required()->check(CLI::ExistingFile);
  calib->add_option("--out", out, "Result JSON ('-' for stdout)")->required();
  calib->add_option("--kernel", kernel, "huber:<px> or quadratic")->capture_default_str();

  auto* next = app.add_subcommand("next-pose", "Next optimal board pose for a session (JSON)");
  next->add_option("--session", session, "Session JSON")->required()->check(CLI::ExistingFile);
  next->add_option("--out", out, "Pose JSON ('-' for stdout)")->required();
  auto* next_seed = next->add_option("--seed", seed, "Override the search seed");

  auto* serve = app.add_subcommand("serve", "Guidance service (REST + event stream)");
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Port (default $CALIBGUIDE_PORT or 8080)");
  serve->add_option("--data-dir", data_dir, "Session logs (default $CALIBGUIDE_DATA_DIR)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << error_json("INVALID_ARGUMENTS", e.what()).dump() << "\n";
    return 2;
  }

  try {
    if (*simulate) return run_simulate(config, out, *sim_seed ? &seed : nullptr, deterministic, threads);
    if (*compare) return run_compare(config, out, *cmp_seed ? &seed : nullptr, deterministic, threads);
    if (*calib) return run_calibrate(dataset, out, kernel);
    if (*next) return run_next_pose(session, out, *next_seed ? &seed : nullptr);
    if (*serve) return run_serve(host, port, data_dir);
  } catch (const Error& e) {
    std::cerr << error_json(e.code_str(), e.what()).dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << error_json("INTERNAL", e.what()).dump() << "\n";
    return 1;
  }
  return 0;
}
