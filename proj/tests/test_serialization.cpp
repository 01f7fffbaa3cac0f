#include <gtest/gtest.h>

#include <functional>

#include "calibguide/errors.hpp"
#include "calibguide/serialization.hpp"
#include "support.hpp"

using namespace calibguide;

namespace {

template <typename T>
T round_trip(const T& value) {
  return json_as<T>(parse_json(json(value).dump()));
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::UndefinedError;
}

}  // namespace

TEST(Serialization, CameraModelKeys) {
  const json j = test::reference_rig().left;
  for (const char* key : {"fu", "fv", "u0", "v0", "k1", "k2", "p1", "p2", "width", "height"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  const CameraModel m = round_trip(test::reference_rig().left);
  EXPECT_EQ(m.fu, 800.0);
  EXPECT_EQ(m.k2, 0.1);
  EXPECT_EQ(m.height, 480);
}

TEST(Serialization, CameraModelRejectsBadFocalLength) {
  json j = test::reference_rig().left;
  j["fu"] = -1;
  EXPECT_EQ(code_of([&] { json_as<CameraModel>(j); }), ErrorCode::InvalidConfig);
  j = test::reference_rig().left;
  j.erase("fv");
  EXPECT_EQ(code_of([&] { json_as<CameraModel>(j); }), ErrorCode::InvalidConfig);
}

TEST(Serialization, PoseAndBoard) {
  const Pose p{Vec3(0.1, -0.2, 0.3), Vec3(1.5, 2.5, 1000.25)};
  const Pose q = round_trip(p);
  EXPECT_EQ(q.rvec, p.rvec);
  EXPECT_EQ(q.tvec, p.tvec);
  const json b = test::reference_board();
  EXPECT_EQ(b.at("spacing_mm"), 5.0);
  EXPECT_EQ(b.at("rows"), 9);
  EXPECT_EQ(round_trip(test::reference_board()).cols, 6);
  EXPECT_EQ(code_of([] { json_as<Pose>(parse_json(R"({"rvec":[1,2],"tvec":[0,0,1]})")); }), ErrorCode::InvalidConfig);
}

TEST(Serialization, CovarianceReport) {
  const StereoRig rig = test::reference_rig();
  const BoardSpec board = test::reference_board();
  const auto views = test::exact_views(rig, board, test::random_poses(rig, board, 3, 150));
  const CovarianceReport r = relative_covariance(assemble_info(views, rig));
  const json j = r;
  EXPECT_EQ(j.at("sigma").size(), 6u);
  const CovarianceReport back = round_trip(r);
  EXPECT_EQ(back.sigma, r.sigma);
  EXPECT_EQ(back.trace, r.trace);
  EXPECT_EQ(back.condition, r.condition);
}

TEST(Serialization, DatasetAndResult) {
  const StereoRig rig = test::reference_rig();
  const BoardSpec board = test::reference_board();
  const CalibrationDataset d = test::make_dataset(rig, board, test::random_poses(rig, board, 3, 151), 0.5, 152);
  const CalibrationDataset back = round_trip(d);
  ASSERT_EQ(back.views.size(), 3u);
  EXPECT_EQ(back.views[1].left_pixels, d.views[1].left_pixels);
  EXPECT_EQ(back.views[2].right_pixels, d.views[2].right_pixels);

  const CalibrationResult r = calibrate(d);
  const CalibrationResult rb = round_trip(r);
  EXPECT_EQ(rb.relative.tvec, r.relative.tvec);
  EXPECT_EQ(rb.per_view_left_abs.size(), 3u);
  EXPECT_EQ(rb.rms_reproj, r.rms_reproj);
  ASSERT_TRUE(rb.covariance.has_value());
  EXPECT_EQ(rb.covariance->trace, r.covariance->trace);
}

TEST(Serialization, DatasetRejectsMismatchedPixels) {
  const StereoRig rig = test::reference_rig();
  const BoardSpec board = test::reference_board();
  json j = test::make_dataset(rig, board, test::random_poses(rig, board, 2, 153), 0.0, 0);
  j["views"][0]["left_pixels"].erase(0);
  EXPECT_EQ(code_of([&] { json_as<CalibrationDataset>(j); }), ErrorCode::InvalidConfig);
}

TEST(Serialization, SearchConfigAndConstraints) {
  SearchConfig s;
  s.max_iterations = 77;
  s.rotation_range = 20 * M_PI / 180;
  s.mode = CandidateMode::Grid;
  s.grid = {Pose{Vec3::Zero(), Vec3(0, 0, 900)}};
  s.jacobian.full_chain = true;
  const json j = s;
  EXPECT_NEAR(j.at("rotation_range_deg").get<double>(), 20.0, 1e-12);
  const SearchConfig back = json_as<SearchConfig>(j);
  EXPECT_EQ(back.max_iterations, 77);
  EXPECT_EQ(back.mode, CandidateMode::Grid);
  EXPECT_EQ(back.grid.size(), 1u);
  EXPECT_TRUE(back.jacobian.full_chain);
  EXPECT_NEAR(back.rotation_range, s.rotation_range, 1e-15);

  RandomPoseConstraints c;
  c.coverage_target = 0.5;
  const RandomPoseConstraints cb = round_trip(c);
  EXPECT_EQ(cb.coverage_target, 0.5);
  EXPECT_NEAR(cb.rotation_range, c.rotation_range, 1e-15);
}

TEST(Serialization, ExperimentConfigDefaults) {
  const ExperimentConfig cfg = json_as<ExperimentConfig>(parse_json(R"({"trials": 5, "seed": 3})"));
  const ExperimentConfig ref = reference_experiment();
  EXPECT_EQ(cfg.trials, 5);
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.rig.relative.tvec, ref.rig.relative.tvec);
  EXPECT_EQ(cfg.noise_sigmas, ref.noise_sigmas);
  const ExperimentConfig back = round_trip(ref);
  EXPECT_EQ(back.n_optimal_images, ref.n_optimal_images);
  EXPECT_EQ(back.kernel.type, ref.kernel.type);
}

TEST(Serialization, ParseErrors) {
  EXPECT_EQ(code_of([] { parse_json("{not json"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { json_as<ExperimentConfig>(parse_json(R"({"trials": "many"})")); }), ErrorCode::InvalidConfig);
  const json e = error_json("NOT_VISIBLE", "board outside the image");
  EXPECT_EQ(e.at("code"), "NOT_VISIBLE");
  EXPECT_EQ(e.at("message"), "board outside the image");
}

TEST(Serialization, ErrorCodeStrings) {
  EXPECT_STREQ(code_string(ErrorCode::NotVisible), "NOT_VISIBLE");
  EXPECT_STREQ(code_string(ErrorCode::InsufficientViews), "INSUFFICIENT_VIEWS");
  EXPECT_STREQ(code_string(ErrorCode::SessionNotFound), "SESSION_NOT_FOUND");
}
