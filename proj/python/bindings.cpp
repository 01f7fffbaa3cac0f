#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "calibguide/covariance.hpp"
#include "calibguide/errors.hpp"
#include "calibguide/geometry.hpp"
#include "calibguide/jacobian.hpp"
#include "calibguide/pipeline.hpp"
#include "calibguide/planner.hpp"
#include "calibguide/serialization.hpp"
#include "calibguide/session.hpp"
#include "calibguide/simharness.hpp"

namespace py = pybind11;
using namespace calibguide;

namespace {

Eigen::MatrixXd to_matrix(const std::vector<Vec2>& pixels) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(pixels.size()), 2);
  for (size_t k = 0; k < pixels.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = pixels[k].transpose();
  return m;
}

std::vector<Vec2> from_matrix(const Eigen::MatrixXd& m) {
  if (m.cols() != 2) throw Error(ErrorCode::InvalidConfig, "pixel arrays must be N x 2");
  std::vector<Vec2> out;
  for (Eigen::Index k = 0; k < m.rows(); ++k) out.emplace_back(m(k, 0), m(k, 1));
  return out;
}

std::vector<ViewPair> make_views(const BoardSpec& board, const std::vector<Pose>& left_poses,
                                 const StereoRig& rig) {
  std::vector<ViewPair> views;
  for (const auto& p : left_poses) {
    ViewPair v;
    v.board = board;
    v.left_abs = p;
    const Pose right = compose_right_extrinsics(rig.relative, p);
    for (const Vec3& c : board_corners(board)) {
      v.left_pixels.push_back(project(rig.left, p, c));
      v.right_pixels.push_back(project(rig.right, right, c));
    }
    views.push_back(std::move(v));
  }
  return views;
}

}  // namespace

PYBIND11_MODULE(_calibguide, m) {
  m.doc() = "Stereo calibration core: geometry, covariance, planner, pipeline, simulation";

  static py::exception<Error> error_type(m, "CalibError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = py::handle(error_type.ptr())(e.what());
      err.attr("code") = e.code_str();
      PyErr_SetObject(error_type.ptr(), err.ptr());
    }
  });

  py::class_<CameraModel>(m, "CameraModel")
      .def(py::init([](double fu, double fv, double u0, double v0, double k1, double k2, double p1,
                       double p2, int width, int height) {
             CameraModel c{fu, fv, u0, v0, k1, k2, p1, p2, width, height};
             c.validate();
             return c;
           }),
           py::arg("fu"), py::arg("fv"), py::arg("u0"), py::arg("v0"), py::arg("k1") = 0.0,
           py::arg("k2") = 0.0, py::arg("p1") = 0.0, py::arg("p2") = 0.0, py::arg("width") = 640,
           py::arg("height") = 480)
      .def_readwrite("fu", &CameraModel::fu)
      .def_readwrite("fv", &CameraModel::fv)
      .def_readwrite("u0", &CameraModel::u0)
      .def_readwrite("v0", &CameraModel::v0)
      .def_readwrite("k1", &CameraModel::k1)
      .def_readwrite("k2", &CameraModel::k2)
      .def_readwrite("p1", &CameraModel::p1)
      .def_readwrite("p2", &CameraModel::p2)
      .def_readwrite("width", &CameraModel::width)
      .def_readwrite("height", &CameraModel::height)
      .def("distort", &CameraModel::distort)
      .def("undistort", &CameraModel::undistort)
      .def("contains", &CameraModel::contains, py::arg("pixel"), py::arg("margin") = 0.0);

  py::class_<Pose>(m, "Pose")
      .def(py::init([](const Vec3& rvec, const Vec3& tvec) { return Pose{rvec, tvec}; }),
           py::arg("rvec") = Vec3::Zero(), py::arg("tvec") = Vec3::Zero())
      .def_readwrite("rvec", &Pose::rvec)
      .def_readwrite("tvec", &Pose::tvec)
      .def("rotation", &Pose::rotation)
      .def("apply", &Pose::apply)
      .def("inverse", &Pose::inverse)
      .def_static("from_matrix", &Pose::from_matrix)
      .def("__repr__", [](const Pose& p) {
        return "Pose(rvec=[" + std::to_string(p.rvec.x()) + ", " + std::to_string(p.rvec.y()) + ", " +
               std::to_string(p.rvec.z()) + "], tvec=[" + std::to_string(p.tvec.x()) + ", " +
               std::to_string(p.tvec.y()) + ", " + std::to_string(p.tvec.z()) + "])";
      });

  py::class_<BoardSpec>(m, "BoardSpec")
      .def(py::init([](int rows, int cols, double spacing) {
             BoardSpec b{rows, cols, spacing};
             b.validate();
             return b;
           }),
           py::arg("rows") = 9, py::arg("cols") = 6, py::arg("spacing") = 5.0)
      .def_readwrite("rows", &BoardSpec::rows)
      .def_readwrite("cols", &BoardSpec::cols)
      .def_readwrite("spacing", &BoardSpec::spacing)
      .def("corner_count", &BoardSpec::corner_count);

  py::class_<StereoRig>(m, "StereoRig")
      .def(py::init([](const CameraModel& l, const CameraModel& r, const Pose& rel) {
             return StereoRig{l, r, rel};
           }),
           py::arg("left"), py::arg("right"), py::arg("relative"))
      .def_readwrite("left", &StereoRig::left)
      .def_readwrite("right", &StereoRig::right)
      .def_readwrite("relative", &StereoRig::relative);

  m.def("compose", &compose);
  m.def("board_corners", [](const BoardSpec& b) {
    const auto corners = board_corners(b);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(corners.size()), 3);
    for (size_t k = 0; k < corners.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = corners[k].transpose();
    return out;
  });
  m.def("project", &project,
        py::arg("camera"), py::arg("pose"), py::arg("point"));
  m.def("triangulate", &triangulate_left_frame, py::arg("rig"), py::arg("left_pixel"), py::arg("right_pixel"),
        "Midpoint triangulation in the left camera frame");
  m.def("rotation_error", &rotation_error, "Rotation error in degrees");
  m.def("translation_error", &translation_error, "Translation error in percent");
  m.def("is_visible", &is_visible, py::arg("pose"), py::arg("rig"), py::arg("board"), py::arg("margin_px") = 5.0);

  m.def("solve_pnp",
        [](const BoardSpec& board, const Eigen::MatrixXd& pixels, const CameraModel& camera) {
          const auto px = from_matrix(pixels);
          return solve_pnp(board, px, camera);
        },
        py::arg("board"), py::arg("pixels"), py::arg("camera"));

  m.def("relative_covariance",
        [](const StereoRig& rig, const BoardSpec& board, const std::vector<Pose>& left_poses, bool full_chain) {
          const auto views = make_views(board, left_poses, rig);
          const CovarianceReport r = relative_covariance(assemble_info(views, rig, JacobianOptions{full_chain}));
          return py::make_tuple(Mat6(r.sigma), r.trace, r.condition);
        },
        py::arg("rig"), py::arg("board"), py::arg("left_poses"), py::arg("full_chain") = false,
        "(sigma 6x6, trace, condition) of the relative extrinsics for exact views at left_poses");

  m.def("next_optimal_pose",
        [](const StereoRig& rig, const BoardSpec& board, const std::vector<Pose>& left_poses,
           std::uint64_t seed, int max_iterations) {
          const auto views = make_views(board, left_poses, rig);
          SearchConfig cfg;
          cfg.seed = seed;
          cfg.max_iterations = max_iterations;
          const CandidatePose c = next_optimal_pose(rig, views, cfg);
          return py::make_tuple(c.pose, c.trace, c.iterations);
        },
        py::arg("rig"), py::arg("board"), py::arg("left_poses"), py::arg("seed") = 0,
        py::arg("max_iterations") = 500, "(pose, trace, iterations) of the next optimal pose");

  m.def("synthesize_view",
        [](const StereoRig& rig, const BoardSpec& board, const Pose& pose, double sigma, std::uint64_t seed) {
          Rng rng(seed);
          const ViewPair v = synthesize_view(rig, board, pose, sigma, rng);
          return py::make_tuple(to_matrix(v.left_pixels), to_matrix(v.right_pixels));
        },
        py::arg("rig"), py::arg("board"), py::arg("pose"), py::arg("sigma") = 0.0, py::arg("seed") = 0);

  // JSON-document operations, mirroring the CLI.
  m.def("_calibrate_json", [](const std::string& dataset, const std::string& kernel) {
    const CalibrationDataset d = json_as<CalibrationDataset>(parse_json(dataset));
    const CalibrationResult r = calibrate(d, RobustKernel::parse(kernel));
    json j = r;
    j["triangulation_error_mm"] = triangulation_error_stats(d, r);
    return j.dump();
  });
  m.def("_next_pose_json", [](const std::string& session, std::optional<std::uint64_t> seed) {
    return plan_next_pose(parse_json(session), seed ? &*seed : nullptr).dump();
  });
  m.def("_simulate_csv", [](const std::string& config) {
    const ExperimentConfig cfg = json_as<ExperimentConfig>(parse_json(config));
    std::ostringstream out;
    run_convergence(cfg).write_csv(out);
    return out.str();
  });
  m.def("_compare_csv", [](const std::string& config) {
    const ExperimentConfig cfg = json_as<ExperimentConfig>(parse_json(config));
    std::ostringstream out;
    compare_strategies(cfg).write_csv(out);
    return out.str();
  });
  m.def("_reference_experiment_json", [] { return json(reference_experiment()).dump(); });
}
