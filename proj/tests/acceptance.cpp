// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "support.hpp"
#include "texdistill/baking.hpp"
#include "texdistill/commands.hpp"
#include "texdistill/ddim.hpp"
#include "texdistill/eval.hpp"
#include "texdistill/guidance.hpp"
#include "texdistill/pipeline.hpp"
#include "texdistill/run_config.hpp"
#include "texdistill/serialization.hpp"

using namespace texdistill;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

int failures = 0;

void criterion(int id, const std::string& name, double budget_s, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << "[exception: " << e.what() << "] ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.require(secs < budget_s, "runtime budget");
  if (!o.pass) ++failures;
  std::printf("%s #%d %s: %s(%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.str().c_str(), secs);
  std::fflush(stdout);
}

// Scalar model of the scaled-linear schedule and the Gaussian oracle.
struct ScalarModel {
  std::vector<double> abar;

  explicit ScalarModel(int T = 1000, double b0 = 0.00085, double b1 = 0.012) {
    abar.assign(T + 1, 1.0);
    for (int i = 0; i < T; ++i) {
      const double s = std::sqrt(b0) + (std::sqrt(b1) - std::sqrt(b0)) * i / (T - 1);
      abar[i + 1] = abar[i] * (1.0 - s * s);
    }
  }

  double eps(double x, int t, double mu, double sigma) const {
    const double a = abar[t];
    return std::sqrt(1.0 - a) * (x - std::sqrt(a) * mu) / (1.0 - a + a * sigma * sigma);
  }

  double ddim(double x, int t, int s, double e) const {
    const double x0 = (x - std::sqrt(1.0 - abar[t]) * e) / std::sqrt(abar[t]);
    return std::sqrt(abar[s]) * x0 + std::sqrt(1.0 - abar[s]) * e;
  }
};

struct Gaussian {
  double mu;
  double sigma;
};

// Per-channel toy setup: uncond/negative share the base distribution.
struct ToyChannel {
  Gaussian uncond, text, styled;
  double lambda_cfg, lambda_style;
};

double toy_delta(const ScalarModel& m, const ToyChannel& ch, double c, int t, bool ism, int step) {
  double xt = 0.0, eps_prev = 0.0;
  if (ism) {
    double x = c, prev_x = c;
    int prev_t = 0, cur_t = 0;
    while (cur_t < t) {
      const int next = std::min(cur_t + step, t);
      prev_x = x;
      prev_t = cur_t;
      x = m.ddim(x, cur_t, next, m.eps(x, cur_t, ch.uncond.mu, ch.uncond.sigma));
      cur_t = next;
    }
    xt = x;
    eps_prev = m.eps(prev_x, prev_t, ch.uncond.mu, ch.uncond.sigma);
  } else {
    xt = std::sqrt(m.abar[t]) * c;  // expectation over the injected noise
  }
  const double eu = m.eps(xt, t, ch.uncond.mu, ch.uncond.sigma);
  const double ey = m.eps(xt, t, ch.text.mu, ch.text.sigma);
  const double es = m.eps(xt, t, ch.styled.mu, ch.styled.sigma);
  return (eu - eps_prev) + ch.lambda_cfg * (ey - eu) + ch.lambda_style * (es - eu);
}

// Zero of the omega-weighted expected delta over uniformly drawn t. The delta
// is affine in the pixel value c, so x* = -sum(w b) / sum(w a).
double predicted_fixed_point(const ScalarModel& m, const ToyChannel& ch, bool ism, int step, int min_t, int max_t) {
  double sa = 0.0, sb = 0.0;
  for (int t = min_t; t <= max_t; ++t) {
    const double w = 1.0 - m.abar[t];
    const double b = toy_delta(m, ch, 0.0, t, ism, step);
    const double a = toy_delta(m, ch, 1.0, t, ism, step) - b;
    sa += w * a;
    sb += w * b;
  }
  return -sb / sa;
}

std::array<double, 3> mean_covered_color(const Mesh& mesh, const TextureField& field) {
  std::array<double, 3> sum{0, 0, 0};
  std::size_t n = 0;
  for (int k = 0; k < 8; ++k) {
    const Camera cam = orbit_camera(45.0 * k + 10.0, k % 2 ? 30.0 : -5.0, 2.0, 45.0, 64, 64);
    const RenderedView v = render_color(mesh, field, cam);
    for (std::size_t i = 0; i < v.mask.size(); ++i) {
      if (!v.mask[i]) continue;
      for (int c = 0; c < 3; ++c) sum[c] += v.color.data[i * 3 + c];
      ++n;
    }
  }
  for (double& s : sum) s /= static_cast<double>(n);
  return sum;
}

double max_abs(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void odcr_suite(Outcome& o) {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> dim(8, 768);
  std::normal_distribution<double> n;
  double worst_orth = 0.0, worst_rec = 0.0, worst_idem = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const int d = dim(gen);
    Embedding g(d), c(d);
    for (int i = 0; i < d; ++i) {
      g[i] = n(gen);
      c[i] = n(gen);
    }
    const Embedding s = odcr(g, c);
    double sc = 0.0, ss = 0.0, cc = 0.0, gc = 0.0;
    for (int i = 0; i < d; ++i) {
      sc += s[i] * c[i];
      ss += s[i] * s[i];
      cc += c[i] * c[i];
      gc += g[i] * c[i];
    }
    worst_orth = std::max(worst_orth, std::abs(sc) / (std::sqrt(ss) * std::sqrt(cc) + 1e-12));
    Embedding rec(d);
    for (int i = 0; i < d; ++i) rec[i] = s[i] + gc / cc * c[i];
    worst_rec = std::max(worst_rec, max_abs(rec, g));
    worst_idem = std::max(worst_idem, max_abs(odcr(s, c), s));
  }
  o.detail << "cos " << worst_orth << ", reconstruction " << worst_rec << ", idempotence " << worst_idem << " ";
  o.require(worst_orth < 1e-6, "orthogonality");
  o.require(worst_rec < 1e-10, "reconstruction");
  o.require(worst_idem < 1e-10, "idempotence");
}

void diffusion_algebra(Outcome& o) {
  const NoiseSchedule s = ScheduleConfig{}.build();
  Rng rng = make_rng(2, 0);
  double pg = 0.0;
  for (int k = 0; k < 200; ++k) {
    const int t = 1 + static_cast<int>(uniform01(rng) * 999);
    const Image x0 = gaussian_image(rng, 4, 4, 3), eps = gaussian_image(rng, 4, 4, 3);
    pg = std::max(pg, max_abs_diff(pseudo_gt(add_noise(x0, t, eps, s), t, eps, s), x0));
  }

  double sds = 0.0;
  const auto oracle = make_analytic_oracle(solid_image(1, 1, std::vector<double>{0.4, 0.5, 0.6}), 0.7, s);
  ConditioningBundle cond;
  cond.text = "x";
  for (int k = 0; k < 1000; ++k) {
    const int t = 1 + static_cast<int>(uniform01(rng) * 999);
    const Image x0 = gaussian_image(rng, 3, 3, 3), eps = gaussian_image(rng, 3, 3, 3);
    const SdsTerms st = sds_terms(x0, t, eps, cond, *oracle, s);
    sds = std::max(sds, max_abs_diff(st.weighted, st.pseudo_gt_form));
  }

  double rt = 0.0;
  const auto smooth = make_analytic_oracle(solid_image(1, 1, std::vector<double>{0.3, 0.5, 0.7}), 0.3, s);
  const ConditioningBundle none;
  for (int step : {1, 5, 25}) {
    const Image x0 = gaussian_image(rng, 8, 8, 3);
    const Trajectory tr = ddim_invert_trajectory(x0, 500, step, none, *smooth, s, 50);
    rt = std::max(rt, max_abs_diff(ddim_denoise(tr.head(), tr.timesteps, none, *smooth, s), x0));
  }
  o.detail << "pseudo-GT " << pg << ", SDS forms " << sds << ", DDIM round trip " << rt << " ";
  o.require(pg < 1e-12, "pseudo-GT");
  o.require(sds < 1e-10, "SDS forms");
  o.require(rt < 1e-4, "DDIM round trip");
}

void gradient_check(Outcome& o) {
  const TextureField base = testing::lively_field(11, HashGridConfig{});
  TextureField field = base;
  const Mesh cube = primitives::cube(false);
  const Camera cam = orbit_camera(35, 20, 2.0, 45, 48, 48);
  const RenderedView view = render_color(cube, field, cam);
  Rng rng = make_rng(3, 0);
  const Image w = gaussian_image(rng, view.color.height, view.color.width, 3);
  const ParameterGradient g = render_view_gradient(view, w, field);
  auto loss = [&](const TextureField& f) {
    const RenderedView v = render_color(cube, f, cam);
    double acc = 0.0;
    for (std::size_t i = 0; i < v.color.size(); ++i) acc += w.data[i] * v.color.data[i];
    return acc;
  };
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (std::abs(g.values[i]) > 1e-5) idx.push_back(i);
  std::mt19937_64 gen(4);
  std::shuffle(idx.begin(), idx.end(), gen);
  const std::size_t n = std::min<std::size_t>(idx.size(), 60);
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = idx[k];
    const double h = 1e-6, orig = field.parameters()[i];
    field.parameters()[i] = orig + h;
    const double lp = loss(field);
    field.parameters()[i] = orig - h;
    const double lm = loss(field);
    field.parameters()[i] = orig;
    worst = std::max(worst, testing::rel_error(g.values[i], (lp - lm) / (2 * h)));
  }
  o.detail << n << " parameters, worst relative error " << worst << " ";
  o.require(n >= 50, "parameter count");
  o.require(worst < 1e-3, "finite differences");
}

void toy_convergence(Outcome& o) {
  const NoiseSchedule s = ScheduleConfig{}.build();
  const ScalarModel m;
  const std::array<double, 3> target{0.8, 0.2, 0.2};
  const std::array<double, 3> shift{-0.3, 0.3, 0.2};
  const double mu_u = 0.5, sigma_u = 10.0, sigma_y = 0.1;

  auto oracle = make_analytic_oracle(solid_image(1, 1, std::vector<double>{mu_u, mu_u, mu_u}), sigma_u, s);
  oracle->register_prompt("red", solid_image(1, 1, std::vector<double>(target.begin(), target.end())), sigma_y);
  Eigen::MatrixXd map = Eigen::MatrixXd::Zero(3, 4);
  for (int c = 0; c < 3; ++c) map(c, 0) = shift[c];
  oracle->set_style_map(map);

  ConditioningBundle cond;
  cond.text = "red";
  cond.negative_text = "plain";
  const Mesh cube = primitives::cube(false);

  struct Run {
    std::string name;
    Objective objective;
    double lambda_style;
  };
  std::map<std::string, std::array<double, 3>> got, want;
  for (const Run& r : {Run{"ism", Objective::kIsm, 0.0}, Run{"sds", Objective::kSds, 0.0},
                       Run{"ism+style", Objective::kIsm, 1.0}}) {
    DistillConfig c;
    c.iterations = 2000;
    c.weights = {1.0, r.lambda_style};
    c.objective = r.objective;
    c.inversion_step = 25;
    c.seed = 5;
    ConditioningBundle rc = cond;
    if (r.lambda_style != 0.0) rc.style = StyleCondition{{1.0, 0.0, 0.0, 0.0}, InjectionLayerSet::preset("style-minimal")};
    DistillState st(TextureField(HashGridConfig{}, 5), c.adam);
    distill(cube, st, *oracle, rc, c, s);
    got[r.name] = mean_covered_color(cube, st.field);
    for (int ch = 0; ch < 3; ++ch) {
      const ToyChannel tc{{mu_u, sigma_u},
                          {target[ch], sigma_y},
                          {target[ch] + (r.lambda_style != 0.0 ? shift[ch] : 0.0), sigma_y},
                          1.0,
                          r.lambda_style};
      want[r.name][ch] = predicted_fixed_point(m, tc, r.objective == Objective::kIsm, 25, c.timestep.min_t,
                                               c.timestep.max_t);
    }
  }
  auto fmt = [](const std::array<double, 3>& v) {
    std::ostringstream os;
    os.precision(3);
    os << "(" << v[0] << "," << v[1] << "," << v[2] << ")";
    return os.str();
  };
  for (const char* name : {"ism", "sds"}) {
    double err = 0.0, err_pred = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
      err = std::max(err, std::abs(got[name][ch] - target[ch]));
      err_pred = std::max(err_pred, std::abs(got[name][ch] - want[name][ch]));
    }
    o.detail << name << " " << fmt(got[name]) << " err " << err << "; ";
    o.require(err < 0.05, std::string(name) + " reaches the target");
    o.require(err_pred < 0.05, std::string(name) + " matches the predicted fixed point");
  }
  double shift_err = 0.0;
  std::array<double, 3> measured{}, predicted{};
  for (int ch = 0; ch < 3; ++ch) {
    measured[ch] = got["ism+style"][ch] - got["ism"][ch];
    predicted[ch] = want["ism+style"][ch] - want["ism"][ch];
    shift_err = std::max(shift_err, std::abs(measured[ch] - predicted[ch]));
  }
  o.detail << "style shift " << fmt(measured) << " predicted " << fmt(predicted) << " ";
  o.require(shift_err < 0.05, "style shift");
}

void guidance_composition(Outcome& o) {
  const NoiseSchedule s = ScheduleConfig{}.build();
  const ScalarModel m;
  const std::array<double, 3> mu_u{0.5, 0.4, 0.3}, mu_y{0.9, 0.1, 0.2}, mu_n{0.2, 0.6, 0.6}, shift{0.1, -0.2, 0.3};
  auto oracle = make_analytic_oracle(solid_image(1, 1, std::vector<double>(mu_u.begin(), mu_u.end())), 0.8, s);
  oracle->register_prompt("y", solid_image(1, 1, std::vector<double>(mu_y.begin(), mu_y.end())), 0.3);
  oracle->register_prompt("n", solid_image(1, 1, std::vector<double>(mu_n.begin(), mu_n.end())), 0.5);
  Eigen::MatrixXd map = Eigen::MatrixXd::Zero(3, 2);
  for (int c = 0; c < 3; ++c) map(c, 1) = shift[c];
  oracle->set_style_map(map);
  ConditioningBundle cond;
  cond.text = "y";
  cond.negative_text = "n";
  cond.style = StyleCondition{{0.0, 1.0}, InjectionLayerSet::preset("style-minimal")};
  CallCountingBackend counted(*oracle);

  Rng rng = make_rng(6, 0);
  double worst = 0.0, slope = 0.0;
  bool calls_ok = true;
  for (int k = 0; k < 50; ++k) {
    const int t = 2 + static_cast<int>(uniform01(rng) * 997);
    const int tp = static_cast<int>(uniform01(rng) * (t - 1));
    const GuidanceWeights w{uniform(rng, -10, 10), uniform(rng, -10, 10)};
    const Image xt = gaussian_image(rng, 3, 4, 3), xp = gaussian_image(rng, 3, 4, 3);
    counted.reset();
    const DeltaTerms d = full_delta(xt, xp, t, tp, cond, counted, s, w);
    calls_ok = calls_ok && counted.calls() == 5;
    for (std::size_t i = 0; i < xt.size(); ++i) {
      const int c = static_cast<int>(i % 3);
      const double eu = m.eps(xt.data[i], t, mu_u[c], 0.8);
      const double ep = m.eps(xp.data[i], tp, mu_u[c], 0.8);
      const double ey = m.eps(xt.data[i], t, mu_y[c], 0.3);
      const double en = m.eps(xt.data[i], t, mu_n[c], 0.5);
      const double es = m.eps(xt.data[i], t, mu_y[c] + shift[c], 0.3);
      const double ref = (eu - ep) + w.lambda_cfg * (ey - en) + w.lambda_style * (es - eu);
      worst = std::max(worst, std::abs(d.total.data[i] - ref));
    }
    // Second differences in each weight vanish for an affine map.
    for (int which = 0; which < 2; ++which) {
      auto at = [&](double v) {
        GuidanceWeights ww = w;
        (which == 0 ? ww.lambda_cfg : ww.lambda_style) = v;
        return full_delta(xt, xp, t, tp, cond, *oracle, s, ww).total;
      };
      const Image d2 = at(2.0) - 2.0 * at(1.0) + at(0.0);
      slope = std::max(slope, l2_norm(d2));
    }
  }
  const nlohmann::json j = DistillConfig{};
  const DistillConfig back = j.get<DistillConfig>();
  const bool defaults = j.at("weights").at("lambda_cfg") == 7.5 && j.at("weights").at("lambda_style") == 7.5 &&
                        back.weights == GuidanceWeights{7.5, 7.5};
  o.detail << "recompute " << worst << ", second difference " << slope << ", defaults " << (defaults ? "7.5/7.5" : "?")
           << " ";
  o.require(worst < 1e-10, "recompute");
  o.require(calls_ok, "five backend calls");
  o.require(slope < 1e-10, "affine slopes");
  o.require(defaults, "default weights round trip");
}

void baking(Outcome& o) {
  const Mesh cube = primitives::cube(true);
  const TextureField field = testing::lively_field(21, HashGridConfig{});
  const BakeResult b = bake(field, cube, 1024);
  const TextureImage padded = edge_pad(b.texture, b.mask, kDefaultPadIterations);
  double worst = 0.0;
  for (double az : {30.0, 120.0, 210.0, 300.0}) {
    const Camera cam = orbit_camera(az, 25, 2.0, 45, 128, 128);
    const RenderedView live = render_color(cube, field, cam);
    const RenderedView baked = render_textured(cube, padded, cam);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < live.mask.size(); ++i) {
      if (!live.mask[i]) continue;
      for (int c = 0; c < 3; ++c) sum += std::abs(live.color.data[i * 3 + c] - baked.color.data[i * 3 + c]);
      n += 3;
    }
    worst = std::max(worst, sum / n);
  }

  std::size_t changed = 0;
  for (int y = 0; y < 1024; ++y)
    for (int x = 0; x < 1024; ++x)
      if (b.mask.at(x, y))
        for (int c = 0; c < 3; ++c) changed += padded.texel(x, y)[c] != b.texture.texel(x, y)[c];

  // Seam test: unbaked texels are black, so any black covered pixel is a seam.
  const BakeResult flat = bake(testing::constant_field(Rgb(0.6, 0.3, 0.2)), cube, 64);
  const TextureImage flat_padded = edge_pad(flat.texture, flat.mask, kDefaultPadIterations);
  std::size_t black = 0, covered = 0;
  for (double az : {0.0, 45.0, 90.0, 135.0}) {
    const RenderedView v = render_textured(cube, flat_padded, orbit_camera(az, az / 3, 2.0, 45, 96, 96), Rgb(0, 0, 0));
    for (std::size_t i = 0; i < v.mask.size(); ++i) {
      if (!v.mask[i]) continue;
      ++covered;
      black += v.color.data[i * 3] == 0.0 && v.color.data[i * 3 + 1] == 0.0 && v.color.data[i * 3 + 2] == 0.0;
    }
  }
  o.detail << "round trip " << worst * 255.0 << "/255, seam pixels " << black << "/" << covered
           << ", changed covered texels " << changed << " ";
  o.require(worst < 2.0 / 255.0, "round trip");
  o.require(covered > 0 && black == 0, "seam test");
  o.require(changed == 0, "covered texels unchanged");
}

void metrics(Outcome& o) {
  Rng rng = make_rng(8, 0);
  double brute = 0.0, min_eig = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int C = 2 + k % 7, H = 3 + k % 5, W = 2 + k % 4;
    FeatureMap f(C, H, W);
    for (double& v : f.data) v = standard_normal(rng);
    const Eigen::MatrixXd g = gram_matrix(f);
    for (int a = 0; a < C; ++a)
      for (int b = 0; b < C; ++b) {
        double acc = 0.0;
        for (int y = 0; y < H; ++y)
          for (int x = 0; x < W; ++x) acc += f.at(a, y, x) * f.at(b, y, x);
        brute = std::max(brute, std::abs(g(a, b) - acc / (C * H * W)));
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }

  const SyntheticConvExtractor conv(1);
  Image img(32, 32, 3);
  for (double& v : img.data) v = uniform01(rng);
  const double self = gram_distance(img, {img}, conv);

  bool bounds = true;
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> a(16), b(16);
    for (int i = 0; i < 16; ++i) {
      a[i] = standard_normal(rng);
      b[i] = standard_normal(rng);
    }
    const double sc = clip_score(a, b);
    bounds = bounds && sc >= 0.0 && sc <= 2.5;
  }
  const bool analytic = clip_score({1, 2, 3}, {2, 4, 6}) == 2.5 && clip_score({1, 0}, {0, 3}) == 0.0 &&
                        clip_score({1, 2}, {-1, -2}) == 0.0;
  o.detail << "brute force " << brute << ", D(I,I) " << self << ", min eigenvalue " << min_eig << " ";
  o.require(brute < 1e-10, "brute force");
  o.require(self == 0.0, "self distance");
  o.require(bounds, "clip bounds");
  o.require(analytic, "clip analytic cases");
  o.require(min_eig >= -1e-10, "PSD");
}

void determinism(Outcome& o) {
  const RunConfig base = load_run_config(fs::path(TEXDISTILL_SOURCE_DIR) / "configs" / "toy.json");
  std::vector<std::string> png, ckpt;
  for (int k = 0; k < 2; ++k) {
    RunConfig rc = base;
    const fs::path dir = testing::temp_dir("acceptance-determinism-" + std::to_string(k));
    rc.output_dir = dir.string();
    std::ostringstream log;
    run_generate(rc, true, log);
    png.push_back(testing::read_file(dir / "mesh.png"));
    ckpt.push_back(testing::read_file(dir / "checkpoint.bin"));
  }
  o.detail << "png " << png[0].size() << " bytes, checkpoint " << ckpt[0].size() << " bytes ";
  o.require(!png[0].empty() && png[0] == png[1], "identical png");
  o.require(!ckpt[0].empty() && ckpt[0] == ckpt[1], "identical checkpoint");
}

}  // namespace

int main() {
  criterion(1, "ODCR suite", 5.0, odcr_suite);
  criterion(2, "diffusion algebra", 30.0, diffusion_algebra);
  criterion(3, "gradient correctness", 120.0, gradient_check);
  criterion(4, "toy distillation convergence", 600.0, toy_convergence);
  criterion(5, "guidance composition", 60.0, guidance_composition);
  criterion(6, "baking", 180.0, baking);
  criterion(7, "metrics", 60.0, metrics);
  criterion(8, "generate determinism", 120.0, determinism);
  return failures;
}
