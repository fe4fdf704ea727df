#include <iostream>

#include "CLI11.hpp"
#include "texdistill/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Style-guided texture distillation"};
  app.require_subcommand(1);

  texdistill::GenerateOptions gen;
  std::uint64_t seed = 0;
  std::string backend;
  auto* generate = app.add_subcommand("generate", "Run conditioning, distillation, baking and export");
  generate->add_option("--config", gen.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  auto* seed_opt = generate->add_option("--seed", seed, "Override the config seed");
  auto* backend_opt = generate->add_option("--backend", backend, "Override the backend name");
  generate->add_option("--sweep-cfg", gen.sweep_cfg, "lambda_cfg values for a guidance sweep")->delimiter(',');
  generate->add_option("--sweep-style", gen.sweep_style, "lambda_style values for a guidance sweep")->delimiter(',');
  generate->add_flag("--force", gen.force, "Replace a previous run with a different config");

  texdistill::BakeCommandOptions bk;
  std::string bake_out;
  auto* bake = app.add_subcommand("bake", "Bake a checkpoint into a UV texture");
  bake->add_option("--checkpoint", bk.checkpoint, "Checkpoint file")->required();
  bake->add_option("--mesh", bk.mesh, "Mesh file or builtin:<name>")->required();
  bake->add_option("--resolution", bk.resolution, "Texture resolution")->capture_default_str();
  bake->add_option("--padding", bk.padding_iterations, "Edge padding iterations")->capture_default_str();
  bake->add_option("--atlas-command", bk.atlas_command, "External UV atlas generator");
  auto* bake_out_opt = bake->add_option("--out", bake_out, "Output directory");

  texdistill::EvalCommandOptions ev;
  auto* eval = app.add_subcommand("eval", "Score a result against a reference image and prompt");
  eval->add_option("--result", ev.result, "Result directory")->required();
  eval->add_option("--reference", ev.reference, "Reference image (PNG/JPEG)")->required();
  eval->add_option("--prompt", ev.prompt, "Prompt")->required();
  eval->add_option("--extractor", ev.extractor, "Feature extractor")->capture_default_str();
  eval->add_option("--provider", ev.provider, "Embedding provider")->capture_default_str();
  eval->add_option("--views", ev.views, "Number of views")->capture_default_str();
  eval->add_option("--view-size", ev.view_size, "View resolution")->capture_default_str();
  eval->add_flag("--sweep", ev.sweep, "Evaluate every run under <result>/sweep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*generate) {
    if (*seed_opt) gen.seed = seed;
    if (*backend_opt) gen.backend = backend;
    return texdistill::cmd_generate(gen, std::cout, std::cerr);
  }
  if (*bake) {
    if (*bake_out_opt) bk.output_dir = bake_out;
    return texdistill::cmd_bake(bk, std::cout, std::cerr);
  }
  return texdistill::cmd_eval(ev, std::cout, std::cerr);
}
