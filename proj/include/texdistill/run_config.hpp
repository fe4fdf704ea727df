#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "texdistill/embedding_prep.hpp"
#include "texdistill/mesh.hpp"
#include "texdistill/pipeline.hpp"
#include "texdistill/schedule.hpp"
#include "texdistill/texture_field.hpp"

namespace texdistill {

inline constexpr int kRunConfigSchemaVersion = 1;

struct StyleOptions {
  std::vector<std::string> layers{"style-extended"};  // preset names or catalog layers/prefixes
  std::string decomposition = "odcr";                 // odcr | naive
  double naive_strength = 1.0;

  InjectionLayerSet layer_set() const;
  bool operator==(const StyleOptions&) const = default;
};

struct BakeOptions {
  int resolution = 1024;
  int padding_iterations = 8;
  std::string atlas_command;  // empty: built-in per-triangle packing
  bool operator==(const BakeOptions&) const = default;
};

struct EvalOptions {
  bool enabled = false;
  int views = 4;
  int view_size = 128;
  std::string extractor = "synthetic-conv";
  nlohmann::json extractor_options = nlohmann::json::object();
  bool operator==(const EvalOptions&) const = default;
};

// Everything a generate run needs. Relative paths resolve against the
// directory of the config file. Mesh paths may also be "builtin:cube",
// "builtin:cube-nouv", "builtin:sphere" or "builtin:quad".
struct RunConfig {
  int schema_version = kRunConfigSchemaVersion;
  std::string mesh;
  std::string reference_image;  // optional unless lambda_style != 0
  PromptPair prompts;
  std::string backend = "analytic";
  nlohmann::json backend_options = nlohmann::json::object();
  ScheduleConfig schedule;
  HashGridConfig field;
  DistillConfig distill;
  StyleOptions style;
  std::string embedding_provider = "mock";
  nlohmann::json embedding_options = nlohmann::json::object();
  BakeOptions bake;
  EvalOptions eval;
  std::string output_dir = "output";
  std::uint64_t seed = 0;

  std::filesystem::path base_dir;  // not serialized

  std::filesystem::path resolve(const std::string& p) const;
  // Throws std::invalid_argument describing the first problem found. Checks
  // that input files exist; never touches the output directory.
  void validate() const;

  bool operator==(const RunConfig& o) const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

// Parses and validates; base_dir is the file's directory.
RunConfig load_run_config(const std::filesystem::path& path);

// Loads a mesh path or builtin: name (normalized either way).
Mesh load_mesh_spec(const std::string& spec, const std::filesystem::path& base_dir);

}  // namespace texdistill
