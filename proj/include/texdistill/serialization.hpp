#pragma once

#include <initializer_list>
#include <string>

#include "json.hpp"
#include "texdistill/camera.hpp"
#include "texdistill/guidance.hpp"
#include "texdistill/optimizer.hpp"
#include "texdistill/pipeline.hpp"
#include "texdistill/schedule.hpp"
#include "texdistill/texture_field.hpp"

// JSON conversions for configuration types. Parsing starts from the
// defaults, overrides the keys present, and rejects unknown keys.
namespace texdistill {

// Throws std::invalid_argument naming `where` if `j` is not an object or
// holds a key outside `allowed`.
void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where);

void to_json(nlohmann::json& j, const HashGridConfig& c);
void from_json(const nlohmann::json& j, HashGridConfig& c);
void to_json(nlohmann::json& j, const AdamParams& c);
void from_json(const nlohmann::json& j, AdamParams& c);
void to_json(nlohmann::json& j, const GuidanceWeights& c);
void from_json(const nlohmann::json& j, GuidanceWeights& c);
void to_json(nlohmann::json& j, const TimestepPolicy& c);
void from_json(const nlohmann::json& j, TimestepPolicy& c);
void to_json(nlohmann::json& j, const Range& c);
void from_json(const nlohmann::json& j, Range& c);
void to_json(nlohmann::json& j, const CameraPolicy& c);
void from_json(const nlohmann::json& j, CameraPolicy& c);
void to_json(nlohmann::json& j, const ScheduleConfig& c);
void from_json(const nlohmann::json& j, ScheduleConfig& c);
void to_json(nlohmann::json& j, const DistillConfig& c);
void from_json(const nlohmann::json& j, DistillConfig& c);

nlohmann::json report_to_json(const StepReport& r);

}  // namespace texdistill
