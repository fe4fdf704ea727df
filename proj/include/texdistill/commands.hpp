#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "texdistill/run_config.hpp"

namespace texdistill {

struct GenerateOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  std::vector<double> sweep_cfg;    // with sweep_style: one run per (cfg, style) pair
  std::vector<double> sweep_style;  // under <output_dir>/sweep/cfg_<a>_style_<b>
  bool force = false;               // discard a previous run with a different config
};

struct BakeCommandOptions {
  std::filesystem::path checkpoint;
  std::string mesh;
  int resolution = 1024;
  int padding_iterations = 8;
  std::string atlas_command;
  std::optional<std::filesystem::path> output_dir;  // default: the checkpoint's directory
};

struct EvalCommandOptions {
  std::filesystem::path result;
  std::filesystem::path reference;
  std::string prompt;
  std::string extractor = "synthetic-conv";
  std::string provider = "mock";
  int views = 4;
  int view_size = 128;
  bool sweep = false;  // evaluate every run under <result>/sweep and write sweep_metrics.csv
};

// Each returns the process exit code (0 success, 1 failure) and writes a
// diagnostic to `err` on failure.
int cmd_generate(const GenerateOptions& options, std::ostream& out, std::ostream& err);
int cmd_bake(const BakeCommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalCommandOptions& options, std::ostream& out, std::ostream& err);

// Applies the generate overrides to a loaded config (and re-validates).
RunConfig apply_overrides(RunConfig config, const GenerateOptions& options);

// Runs all stages into config.resolve(config.output_dir). Throws on failure
// after recording it in the manifest.
void run_generate(const RunConfig& config, bool force, std::ostream& out);

std::string sweep_run_name(double lambda_cfg, double lambda_style);

}  // namespace texdistill
