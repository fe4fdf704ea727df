#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "texdistill/commands.hpp"
#include "texdistill/eval.hpp"
#include "texdistill/guidance.hpp"
#include "texdistill/schedule.hpp"

namespace py = pybind11;
using namespace texdistill;

namespace {

// (exit code, stdout text, stderr text)
template <class Options, class Fn>
py::tuple run_command(const Options& options, Fn fn) {
  std::ostringstream out, err;
  int rc = 0;
  {
    py::gil_scoped_release release;
    rc = fn(options, out, err);
  }
  return py::make_tuple(rc, out.str(), err.str());
}

FeatureMap feature_map_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 3) throw std::invalid_argument("feature map must have shape (C, H, W)");
  FeatureMap m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
  std::copy(a.data(), a.data() + a.size(), m.data.begin());
  return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "texdistill core bindings";

  py::class_<NoiseSchedule>(m, "NoiseSchedule")
      .def(py::init([](int steps, double beta_start, double beta_end, const std::string& kind) {
             return NoiseSchedule::make(steps, beta_start, beta_end, beta_kind_from_string(kind));
           }),
           py::arg("steps") = 1000, py::arg("beta_start") = 0.00085, py::arg("beta_end") = 0.012,
           py::arg("kind") = "scaled-linear")
      .def_property_readonly("steps", &NoiseSchedule::steps)
      .def("alpha_bar", &NoiseSchedule::alpha_bar)
      .def("omega", &NoiseSchedule::omega)
      .def("gamma", &NoiseSchedule::gamma);

  m.def("odcr", &odcr, py::arg("f_g"), py::arg("f_c"));
  m.def("naive_subtraction", &naive_subtraction, py::arg("f_g"), py::arg("f_c"), py::arg("strength"));
  m.def("clip_score", &clip_score, py::arg("text_embedding"), py::arg("image_embedding"));
  m.def(
      "gram_matrix", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
        return gram_matrix(feature_map_from(a));
      },
      py::arg("features"));

  m.def(
      "generate",
      [](const std::filesystem::path& config, std::optional<std::uint64_t> seed, std::optional<std::string> backend,
         std::vector<double> sweep_cfg, std::vector<double> sweep_style, bool force) {
        GenerateOptions o;
        o.config = config;
        o.seed = seed;
        o.backend = std::move(backend);
        o.sweep_cfg = std::move(sweep_cfg);
        o.sweep_style = std::move(sweep_style);
        o.force = force;
        return run_command(o, cmd_generate);
      },
      py::arg("config"), py::arg("seed") = py::none(), py::arg("backend") = py::none(),
      py::arg("sweep_cfg") = std::vector<double>{}, py::arg("sweep_style") = std::vector<double>{},
      py::arg("force") = false);

  m.def(
      "bake",
      [](const std::filesystem::path& checkpoint, const std::string& mesh, int resolution, int padding_iterations,
         const std::string& atlas_command, std::optional<std::filesystem::path> output_dir) {
        BakeCommandOptions o;
        o.checkpoint = checkpoint;
        o.mesh = mesh;
        o.resolution = resolution;
        o.padding_iterations = padding_iterations;
        o.atlas_command = atlas_command;
        o.output_dir = std::move(output_dir);
        return run_command(o, cmd_bake);
      },
      py::arg("checkpoint"), py::arg("mesh"), py::arg("resolution") = 1024, py::arg("padding_iterations") = 8,
      py::arg("atlas_command") = "", py::arg("output_dir") = py::none());

  m.def(
      "evaluate",
      [](const std::filesystem::path& result, const std::filesystem::path& reference, const std::string& prompt,
         const std::string& extractor, const std::string& provider, int views, int view_size, bool sweep) {
        EvalCommandOptions o;
        o.result = result;
        o.reference = reference;
        o.prompt = prompt;
        o.extractor = extractor;
        o.provider = provider;
        o.views = views;
        o.view_size = view_size;
        o.sweep = sweep;
        return run_command(o, cmd_eval);
      },
      py::arg("result"), py::arg("reference"), py::arg("prompt"), py::arg("extractor") = "synthetic-conv",
      py::arg("provider") = "mock", py::arg("views") = 4, py::arg("view_size") = 128, py::arg("sweep") = false);
}
