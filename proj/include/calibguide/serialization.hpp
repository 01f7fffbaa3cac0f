#pragma once

#include <string>

#include "json.hpp"

#include "calibguide/covariance.hpp"
#include "calibguide/errors.hpp"
#include "calibguide/geometry.hpp"
#include "calibguide/pipeline.hpp"
#include "calibguide/planner.hpp"
#include "calibguide/simharness.hpp"

namespace calibguide {

using json = nlohmann::json;

// Angles in configs are degrees; everything else is mm / px.

void to_json(json& j, const CameraModel& m);
void from_json(const json& j, CameraModel& m);
void to_json(json& j, const Pose& p);
void from_json(const json& j, Pose& p);
void to_json(json& j, const BoardSpec& b);
void from_json(const json& j, BoardSpec& b);
void to_json(json& j, const StereoRig& r);
void from_json(const json& j, StereoRig& r);
void to_json(json& j, const CovarianceReport& c);
void from_json(const json& j, CovarianceReport& c);
void to_json(json& j, const CandidatePose& c);
void to_json(json& j, const CalibrationDataset& d);
void from_json(const json& j, CalibrationDataset& d);
void to_json(json& j, const CalibrationResult& r);
void from_json(const json& j, CalibrationResult& r);
void to_json(json& j, const SearchConfig& c);
void from_json(const json& j, SearchConfig& c);
void to_json(json& j, const RandomPoseConstraints& c);
void from_json(const json& j, RandomPoseConstraints& c);
void to_json(json& j, const ExperimentConfig& c);
void from_json(const json& j, ExperimentConfig& c);

json pixels_to_json(const std::vector<Vec2>& pixels);
std::vector<Vec2> pixels_from_json(const json& j);

/// Throws Error(InvalidConfig) on malformed text.
json parse_json(const std::string& text);

/// Conversion with json type errors mapped to Error(InvalidConfig).
template <typename T>
T json_as(const json& j) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
}

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// Error body {"code": ..., "message": ...}.
json error_json(const std::string& code, const std::string& message);

}  // namespace calibguide
