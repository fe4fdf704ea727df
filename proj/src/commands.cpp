#include "texdistill/commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "texdistill/baking.hpp"
#include "texdistill/checkpoint.hpp"
#include "texdistill/embedding_prep.hpp"
#include "texdistill/eval.hpp"
#include "texdistill/image_io.hpp"
#include "texdistill/manifest.hpp"

namespace texdistill {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json conditioning_record(const RunConfig& config, const PreparedConditioning& prep) {
  json j{{"y", config.prompts.y}, {"y_ref", config.prompts.y_ref}};
  if (prep.bundle.style) {
    const auto& layers = prep.bundle.style->layers.layers();
    j["layers"] = std::vector<std::string>(layers.begin(), layers.end());
    j["f_g"] = prep.embeddings.f_g;
    j["f_c"] = prep.embeddings.f_c;
    j["f_s"] = prep.embeddings.f_s;
    j["decomposition"] = config.style.decomposition;
  }
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

AtlasHook atlas_for(const std::string& command, int resolution) {
  return command.empty() ? triangle_packing_atlas(resolution) : subprocess_atlas(command);
}

std::string format_lambda(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Runs `body` as `stage`, recording failure in the manifest.
template <typename F>
void stage(Manifest& manifest, const std::string& name, std::ostream& out, F&& body) {
  out << "[" << name << "]\n" << std::flush;
  manifest.begin_stage(name);
  try {
    body();
  } catch (const std::exception& e) {
    manifest.fail(name, e.what());
    throw;
  }
  manifest.complete_stage(name);
}

}  // namespace

std::string sweep_run_name(double lambda_cfg, double lambda_style) {
  return "cfg_" + format_lambda(lambda_cfg) + "_style_" + format_lambda(lambda_style);
}

RunConfig apply_overrides(RunConfig config, const GenerateOptions& options) {
  if (options.seed) {
    config.seed = *options.seed;
    config.distill.seed = *options.seed;
  }
  if (options.backend && *options.backend != config.backend) {
    config.backend = *options.backend;
    config.backend_options = json::object();
  }
  config.validate();
  return config;
}

void run_generate(const RunConfig& config, bool force, std::ostream& out) {
  config.validate();
  json config_json = config;
  const fs::path out_dir = config.resolve(config.output_dir);

  // Everything that can fail on bad input happens before the directory is touched.
  const NoiseSchedule schedule = config.schedule.build();
  const auto backend = create_backend(config.backend, config.backend_options, schedule);
  const Mesh mesh = load_mesh_spec(config.mesh, config.base_dir);
  std::optional<Rgb8Image> reference;
  if (!config.reference_image.empty()) reference = read_image(config.resolve(config.reference_image));
  const auto provider = make_provider(config.embedding_provider, config.embedding_options);
  const auto extractor = make_extractor(config.eval.extractor, config.eval.extractor_options);
  if (config.eval.enabled && !reference) throw std::invalid_argument("eval.enabled requires reference_image");

  bool resume = false;
  if (Manifest::exists(out_dir)) {
    const Manifest previous = Manifest::load(out_dir);
    resume = previous.config() == config_json;
    if (!resume && !force)
      throw std::invalid_argument("output directory " + out_dir.string() +
                                  " holds a run with a different config (use --force to replace it)");
  }

  fs::create_directories(out_dir);
  DirectoryLock lock(out_dir);
  const fs::path checkpoint = out_dir / "checkpoint.bin";
  const fs::path reports = out_dir / "reports.jsonl";
  if (!resume) {
    fs::remove(checkpoint);
    fs::remove(reports);
  }
  Manifest manifest(out_dir, config_json);
  manifest.save();

  PreparedConditioning prep;
  stage(manifest, "prepare", out, [&] {
    if (reference) {
      const std::optional<double> naive =
          config.style.decomposition == "naive" ? std::optional<double>(config.style.naive_strength) : std::nullopt;
      prep = prepare_conditioning(*reference, config.prompts, *provider, config.style.layer_set(), naive);
    } else {
      config.prompts.validate();
      prep.bundle.text = config.prompts.y;
      prep.bundle.negative_text = config.prompts.y_ref;
    }
    const fs::path cond_path = out_dir / "conditioning.json";
    write_text(cond_path, conditioning_record(config, prep).dump(2) + "\n");
    manifest.add_artifact("prepare", cond_path);
  });

  DistillConfig dc = config.distill;
  dc.seed = config.seed;
  dc.checkpoint_path = checkpoint.string();
  dc.report_path = reports.string();

  std::optional<DistillState> state;
  stage(manifest, "distill", out, [&] {
    if (resume && fs::is_regular_file(checkpoint)) {
      DistillState loaded = load_checkpoint(checkpoint.string());
      if (loaded.field.config() == config.field && loaded.next_iteration <= dc.iterations) {
        out << "resuming from iteration " << loaded.next_iteration << "\n";
        state.emplace(std::move(loaded));
      }
    }
    if (!state) {
      fs::remove(reports);
      state.emplace(TextureField(config.field, config.seed), dc.adam);
    }
    if (state->next_iteration < dc.iterations) {
      const int every = std::max(1, dc.iterations / 10);
      distill(mesh, *state, *backend, prep.bundle, dc, schedule, [&](const StepReport& r, const DistillState&) {
        if ((r.iteration + 1) % every == 0 || r.iteration + 1 == dc.iterations)
          out << "  iter " << (r.iteration + 1) << "/" << dc.iterations << " t=" << r.t
              << " |delta|=" << r.delta_norm << " |grad|=" << r.gradient_norm << "\n"
              << std::flush;
      });
    } else if (!fs::is_regular_file(checkpoint)) {
      save_checkpoint(checkpoint.string(), *state);
    }
    manifest.add_artifact("distill", checkpoint);
    if (fs::is_regular_file(reports)) manifest.add_artifact("distill", reports);
  });

  Mesh uv_mesh;
  TextureImage texture;
  stage(manifest, "bake", out, [&] {
    uv_mesh = ensure_uv(mesh, atlas_for(config.bake.atlas_command, config.bake.resolution));
    const BakeResult baked = bake(state->field, uv_mesh, config.bake.resolution);
    texture = edge_pad(baked.texture, baked.mask, config.bake.padding_iterations);
    out << "  covered texels: " << baked.mask.count() << "/"
        << static_cast<std::size_t>(config.bake.resolution) * config.bake.resolution << "\n";
  });

  stage(manifest, "export", out, [&] {
    for (const fs::path& p : export_textured_mesh(uv_mesh, texture, out_dir, "mesh")) manifest.add_artifact("export", p);
  });

  if (config.eval.enabled) {
    stage(manifest, "eval", out, [&] {
      MetricRecord rec =
          evaluate_result(uv_mesh, texture, *reference, config.prompts.y,
                          default_eval_cameras(config.eval.view_size, config.eval.views), *extractor, *provider);
      rec.run = out_dir.filename().string();
      const fs::path metrics = out_dir / "metrics.jsonl";
      fs::remove(metrics);
      append_jsonl(metrics, rec);
      manifest.add_artifact("eval", metrics);
      out << "  gram_distance " << rec.gram_distance << "\n  clip_score " << rec.clip_score << "\n";
    });
  }
  manifest.finish();
  out << "done: " << out_dir.string() << "\n";
}

int cmd_generate(const GenerateOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig config = apply_overrides(load_run_config(options.config), options);
    if (options.sweep_cfg.empty() && options.sweep_style.empty()) {
      run_generate(config, options.force, out);
      return 0;
    }
    const std::vector<double> cfgs =
        options.sweep_cfg.empty() ? std::vector<double>{config.distill.weights.lambda_cfg} : options.sweep_cfg;
    const std::vector<double> styles =
        options.sweep_style.empty() ? std::vector<double>{config.distill.weights.lambda_style} : options.sweep_style;
    std::vector<RunConfig> runs;
    for (double c : cfgs) {
      for (double s : styles) {
        RunConfig run = config;
        run.distill.weights = {c, s};
        run.output_dir = (fs::path(config.output_dir) / "sweep" / sweep_run_name(c, s)).string();
        run.validate();
        runs.push_back(std::move(run));
      }
    }
    for (const RunConfig& run : runs) {
      out << "== " << run.output_dir << "\n";
      run_generate(run, options.force, out);
    }
    return 0;
  } catch (const std::exception& e) {
    err << "generate failed: " << e.what() << "\n";
    return 1;
  }
}

int cmd_bake(const BakeCommandOptions& options, std::ostream& out, std::ostream& err) {
  try {
    if (options.resolution < 1) throw std::invalid_argument("--resolution must be >= 1");
    if (options.padding_iterations < 0) throw std::invalid_argument("--padding must be >= 0");
    if (!fs::is_regular_file(options.checkpoint))
      throw std::runtime_error("checkpoint not found: " + options.checkpoint.string());
    const DistillState state = load_checkpoint(options.checkpoint.string());
    const Mesh mesh = ensure_uv(load_mesh_spec(options.mesh, fs::current_path()),
                                atlas_for(options.atlas_command, options.resolution));
    const BakeResult baked = bake(state.field, mesh, options.resolution);
    const TextureImage texture = edge_pad(baked.texture, baked.mask, options.padding_iterations);
    const fs::path dir = options.output_dir.value_or(fs::absolute(options.checkpoint).parent_path());
    for (const fs::path& p : export_textured_mesh(mesh, texture, dir, "mesh")) out << p.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "bake failed: " << e.what() << "\n";
    return 1;
  }
}

namespace {

MetricRecord evaluate_dir(const fs::path& dir, const Rgb8Image& reference, const EvalCommandOptions& options,
                          const FeatureExtractor& extractor, const EmbeddingProvider& provider) {
  const fs::path obj = dir / "mesh.obj";
  const fs::path png = dir / "mesh.png";
  if (!fs::is_regular_file(obj)) throw std::runtime_error("missing artifact " + obj.string());
  if (!fs::is_regular_file(png)) throw std::runtime_error("missing artifact " + png.string());
  const Mesh mesh = load_mesh(obj);
  const TextureImage texture = read_texture_png(png);
  MetricRecord rec = evaluate_result(mesh, texture, reference, options.prompt,
                                     default_eval_cameras(options.view_size, options.views), extractor, provider);
  rec.run = dir.filename().string();
  append_jsonl(dir / "metrics.jsonl", rec);
  return rec;
}

}  // namespace

int cmd_eval(const EvalCommandOptions& options, std::ostream& out, std::ostream& err) {
  try {
    if (options.prompt.empty()) throw std::invalid_argument("--prompt must not be empty");
    if (!fs::is_directory(options.result)) throw std::runtime_error("result directory not found: " + options.result.string());
    const Rgb8Image reference = read_image(options.reference);
    const auto extractor = make_extractor(options.extractor);
    const auto provider = make_provider(options.provider);
    out << std::setprecision(10);
    if (!options.sweep) {
      const MetricRecord rec = evaluate_dir(options.result, reference, options, *extractor, *provider);
      out << "gram_distance " << rec.gram_distance << "\nclip_score " << rec.clip_score << "\n";
      return 0;
    }
    const fs::path sweep_dir = options.result / "sweep";
    if (!fs::is_directory(sweep_dir)) throw std::runtime_error("no sweep runs under " + sweep_dir.string());
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(sweep_dir))
      if (entry.is_directory()) dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());
    std::vector<MetricRecord> records;
    for (const fs::path& d : dirs) {
      records.push_back(evaluate_dir(d, reference, options, *extractor, *provider));
      out << records.back().run << " gram_distance " << records.back().gram_distance << " clip_score "
          << records.back().clip_score << "\n";
    }
    write_csv(options.result / "sweep_metrics.csv", records);
    return 0;
  } catch (const std::exception& e) {
    err << "eval failed: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace texdistill
