#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <unordered_set>

#include "support.hpp"
#include "texdistill/optimizer.hpp"
#include "texdistill/rng.hpp"
#include "texdistill/texture_field.hpp"

using namespace texdistill;

namespace {

std::vector<Vec3> random_points(std::uint64_t seed, std::size_t n, double lo = -0.5, double hi = 0.5) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Vec3> pts(n);
  for (Vec3& p : pts) p = Vec3(u(gen), u(gen), u(gen));
  return pts;
}

double weighted_sum(const TextureField& f, const std::vector<Vec3>& pts, const std::vector<Rgb>& w) {
  const std::vector<Rgb> c = f.query(pts);
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += c[i].dot(w[i]);
  return s;
}

}  // namespace

TEST_CASE("config validation") {
  HashGridConfig c;
  CHECK_NOTHROW(c.validate());
  c.levels = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = HashGridConfig{};
  c.features_per_level = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = HashGridConfig{};
  c.growth_factor = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_THROWS_AS(TextureField(c, 1), std::invalid_argument);
}

TEST_CASE("init is deterministic in the seed") {
  const TextureField a(testing::small_grid(), 9), b(testing::small_grid(), 9), c(testing::small_grid(), 10);
  CHECK(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
  CHECK_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), c.parameters().begin()));
}

TEST_CASE("init ranges") {
  const TextureField f(HashGridConfig{}, 3);
  const auto p = f.parameters();
  for (std::size_t i = 0; i < f.mlp_offset(); ++i) REQUIRE(std::abs(p[i]) <= 1e-4);
  const double bound0 = 1.0 / std::sqrt(16.0);  // first dense layer fan-in = L*F = 16
  for (std::size_t i = f.mlp_offset(); i < f.mlp_offset() + 16 * 32; ++i) REQUIRE(std::abs(p[i]) <= bound0);
}

TEST_CASE("fresh field is near mid-gray") {
  const TextureField f(HashGridConfig{}, 1);
  for (const Rgb& c : f.query(random_points(5, 1000)))
    for (int k = 0; k < 3; ++k) REQUIRE(std::abs(c[k] - 0.5) <= 0.05);
}

TEST_CASE("parameter count closed form") {
  HashGridConfig c;
  c.levels = 1;
  c.features_per_level = 2;
  c.table_size_log2 = 4;
  c.mlp_hidden = {8};
  // table 16*2, dense 2->8 with bias, dense 8->3 with bias
  const std::size_t expect = 16 * 2 + (2 * 8 + 8) + (8 * 3 + 3);
  CHECK(TextureField::parameter_count_for(c) == expect);
  CHECK(TextureField(c, 0).parameter_count() == expect);
  CHECK_THROWS_AS(TextureField(c, std::vector<double>(expect - 1)), std::invalid_argument);
}

TEST_CASE("query semantics") {
  const TextureField f = testing::lively_field(2);
  CHECK(f.query(std::vector<Vec3>{}).empty());
  const Vec3 out(0.9, -3.0, 0.2);
  CHECK(f.query(out) == f.query(Vec3(0.5, -0.5, 0.2)));
  const std::vector<Vec3> same{Vec3(0.1, 0.2, 0.3), Vec3(0.1, 0.2, 0.3)};
  const auto c = f.query(same);
  CHECK(c[0] == c[1]);
}

TEST_CASE("output always strictly inside (0,1)") {
  TextureField f = testing::lively_field(3);
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n(0.0, 0.3);
  for (int trial = 0; trial < 5; ++trial) {
    for (double& p : f.parameters()) p = n(gen);
    for (const Rgb& c : f.query(random_points(trial, 200, -2, 2)))
      for (int k = 0; k < 3; ++k) REQUIRE((c[k] > 0.0 && c[k] < 1.0));
  }
}

TEST_CASE("interpolation at a grid corner equals that corner's feature") {
  const TextureField f = testing::lively_field(4);
  const HashGridConfig& cfg = f.config();
  for (int i = 0; i <= 4; ++i) {
    const Vec3 p(i / 4.0 - 0.5, 1 / 4.0 - 0.5, 3 / 4.0 - 0.5);
    const std::vector<double> enc = f.encode(std::span<const Vec3>(&p, 1));
    for (int l = 0; l < cfg.levels; ++l) {
      const int scale = cfg.level_resolution(l) / 4;
      const std::uint32_t s = f.slot(l, {i * scale, 1 * scale, 3 * scale});
      for (int k = 0; k < cfg.features_per_level; ++k)
        CHECK(enc[l * cfg.features_per_level + k] == f.parameters()[f.feature_index(l, s, k)]);
    }
  }
}

TEST_CASE("backward") {
  TextureField f = testing::lively_field(6);
  const std::vector<Vec3> pts = random_points(8, 40);
  std::vector<Rgb> w(pts.size());
  std::mt19937_64 gen(12);
  std::normal_distribution<double> n;
  for (Rgb& x : w) x = Rgb(n(gen), n(gen), n(gen));

  SUBCASE("zero upstream") { CHECK(f.backward(pts, std::vector<Rgb>(pts.size(), Rgb::Zero())).is_zero()); }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(f.backward(pts, std::vector<Rgb>(3, Rgb::Ones())), std::invalid_argument);
    ParameterGradient wrong(5);
    CHECK_THROWS_AS(f.accumulate_gradient(pts, w, wrong), std::invalid_argument);
  }
  SUBCASE("batch gradient is the sum of per-point gradients") {
    const ParameterGradient g = f.backward(pts, w);
    ParameterGradient sum = f.zero_gradient();
    for (std::size_t i = 0; i < pts.size(); ++i)
      sum += f.backward(std::span<const Vec3>(&pts[i], 1), std::span<const Rgb>(&w[i], 1));
    for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(g.values[i] == doctest::Approx(sum.values[i]).epsilon(1e-12));
  }
  SUBCASE("central differences over 50 random parameters") {
    const ParameterGradient g = f.backward(pts, w);
    std::vector<std::size_t> grid_idx, mlp_idx;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::abs(g.values[i]) < 1e-6) continue;
      (i < f.mlp_offset() ? grid_idx : mlp_idx).push_back(i);
    }
    std::shuffle(grid_idx.begin(), grid_idx.end(), gen);
    std::shuffle(mlp_idx.begin(), mlp_idx.end(), gen);
    REQUIRE(grid_idx.size() >= 25);
    REQUIRE(mlp_idx.size() >= 25);
    std::vector<std::size_t> chosen(grid_idx.begin(), grid_idx.begin() + 25);
    chosen.insert(chosen.end(), mlp_idx.begin(), mlp_idx.begin() + 25);
    for (std::size_t i : chosen) {
      const double h = 1e-6, orig = f.parameters()[i];
      f.parameters()[i] = orig + h;
      const double lp = weighted_sum(f, pts, w);
      f.parameters()[i] = orig - h;
      const double lm = weighted_sum(f, pts, w);
      f.parameters()[i] = orig;
      CHECK(testing::rel_error(g.values[i], (lp - lm) / (2 * h)) < 1e-3);
    }
  }
}

TEST_CASE("gradient accumulation and arithmetic") {
  ParameterGradient a(3), b(3);
  a.values = {1, 2, 3};
  b.values = {1, 1, 1};
  a += b;
  a *= 2.0;
  CHECK(a.values == std::vector<double>{4, 6, 8});
  CHECK(a.norm() == doctest::Approx(std::sqrt(16.0 + 36 + 64)));
  CHECK(a.all_finite());
  ParameterGradient c(2);
  CHECK_THROWS_AS(a += c, std::invalid_argument);
}

TEST_CASE("dense indexing is row-major and collision-free") {
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) CHECK(dense_index({i, j, k}, 4) == static_cast<std::uint32_t>(16 * i + 4 * j + k));
  const TextureField f = testing::lively_field(1);
  CHECK(f.config().level_is_dense(0));
  CHECK(f.config().level_is_dense(1));
  CHECK_FALSE(f.config().level_is_dense(2));
  std::set<std::uint32_t> seen;
  const int n = f.config().level_resolution(1) + 1;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) seen.insert(f.slot(1, {i, j, k}));
  CHECK(seen.size() == static_cast<std::size_t>(n * n * n));
}

TEST_CASE("hash collision rate matches the birthday estimate") {
  const std::uint32_t m = 1u << 14;
  const std::size_t n = 100000;
  std::mt19937_64 gen(77);
  std::uniform_int_distribution<int> coord(0, 1 << 20);
  std::set<std::array<int, 3>> cells;
  while (cells.size() < n) cells.insert({coord(gen), coord(gen), coord(gen)});
  std::unordered_set<std::uint32_t> slots;
  for (const auto& c : cells) {
    CHECK(spatial_hash(c, m) == spatial_hash(c, m));
    slots.insert(spatial_hash(c, m));
  }
  const double collisions = static_cast<double>(n - slots.size());
  const double expected = n - m * (1.0 - std::pow(1.0 - 1.0 / m, static_cast<double>(n)));
  CHECK(std::abs(collisions - expected) <= 0.2 * expected);
}

TEST_CASE("perturbing a dense-level feature is local") {
  TextureField f = testing::lively_field(5);
  const std::array<int, 3> v{2, 2, 2};  // level 0, resolution 4: the vertex at the origin
  const std::vector<Vec3> pts = random_points(3, 2000);
  const std::vector<Rgb> before = f.query(pts);
  f.parameters()[f.feature_index(0, f.slot(0, v), 0)] += 0.5;
  const std::vector<Rgb> after = f.query(pts);
  int touched = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool in_stencil = true;
    for (int d = 0; d < 3; ++d) in_stencil &= std::abs((pts[i][d] + 0.5) * 4.0 - v[d]) < 1.0;
    if (!in_stencil) REQUIRE(before[i] == after[i]);
    else touched += before[i] != after[i];
  }
  CHECK(touched > 0);
}

TEST_CASE("adam matches a scalar reference and skip_step only does bookkeeping") {
  AdamParams p;
  Adam adam(2, p);
  std::vector<double> x{1.0, -2.0};
  double m = 0, v = 0, ref = 1.0;
  const double grads[] = {0.3, -1.2, 2.0, 0.0, 0.7};
  for (int t = 1; t <= 5; ++t) {
    const double g = grads[t - 1];
    adam.step(x, std::vector<double>{g, 0.0});
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    ref -= 0.005 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    CHECK(x[0] == doctest::Approx(ref).epsilon(1e-14));
    CHECK(x[1] == -2.0);
  }
  const std::vector<double> held = x;
  const double m0 = adam.first_moment()[0];
  adam.skip_step();
  CHECK(x == held);
  CHECK(adam.steps() == 6);
  CHECK(adam.first_moment()[0] == doctest::Approx(0.9 * m0));
  CHECK_THROWS_AS(adam.step(x, std::vector<double>{1.0}), std::invalid_argument);
  AdamParams bad;
  bad.learning_rate = 0;
  CHECK_THROWS_AS(Adam(1, bad), std::invalid_argument);
}
