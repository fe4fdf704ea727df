#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <thread>

#include <Eigen/Eigenvalues>

#include "support.hpp"
#include "texdistill/baking.hpp"
#include "texdistill/eval.hpp"
#include "texdistill/rng.hpp"

// After Eigen: resolv.h (pulled in by httplib) defines a `_res` macro.
#include "httplib.h"

using namespace texdistill;

namespace {

FeatureMap random_map(std::uint64_t seed, int c, int h, int w) {
  Rng rng = make_rng(seed, 3);
  FeatureMap m(c, h, w);
  for (double& v : m.data) v = standard_normal(rng);
  return m;
}

Image random_rgb(std::uint64_t seed, int h, int w) {
  Rng rng = make_rng(seed, 4);
  Image img(h, w, 3);
  for (double& v : img.data) v = uniform01(rng);
  return img;
}

}  // namespace

TEST_CASE("gram matrix closed forms") {
  FeatureMap constant(1, 3, 5, 0.7);
  const Eigen::MatrixXd g = gram_matrix(constant);
  REQUIRE(g.rows() == 1);
  CHECK(g(0, 0) == doctest::Approx(0.49));

  FeatureMap twins = random_map(1, 2, 4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) twins.at(1, y, x) = twins.at(0, y, x);
  const Eigen::MatrixXd t = gram_matrix(twins);
  CHECK(t(0, 0) == doctest::Approx(t(0, 1)));
  CHECK(t(1, 0) == doctest::Approx(t(1, 1)));
  CHECK(t(0, 1) == t(1, 0));

  const FeatureMap m = random_map(2, 3, 4, 4);
  const Eigen::MatrixXd gm = gram_matrix(m);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double acc = 0.0;
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) acc += m.at(a, y, x) * m.at(b, y, x);
      CHECK(std::abs(gm(a, b) - acc / (3 * 16)) < 1e-10);
    }
  CHECK_THROWS_AS(gram_matrix(FeatureMap(2, 0, 3)), std::invalid_argument);
}

TEST_CASE("gram matrices are symmetric PSD and scale quadratically") {
  for (int k = 0; k < 20; ++k) {
    const FeatureMap m = random_map(100 + k, 2 + k % 6, 3 + k % 4, 5);
    const Eigen::MatrixXd g = gram_matrix(m);
    CHECK((g - g.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * g.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    FeatureMap scaled = m;
    for (double& v : scaled.data) v *= -3.0;
    CHECK((gram_matrix(scaled) - 9.0 * g).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("gram distance") {
  const IdentityExtractor id;
  const SyntheticConvExtractor conv(1);
  const Image a = random_rgb(1, 16, 16), b = random_rgb(2, 16, 16);
  CHECK(gram_distance(a, {a}, conv) == 0.0);
  CHECK(gram_distance(a, {b}, conv) == doctest::Approx(gram_distance(b, {a}, conv)));
  CHECK(gram_distance(a, {b, a}, conv) == doctest::Approx(0.5 * gram_distance(a, {b}, conv)));

  // Hand computation on 2x2 images with the identity extractor: all-red
  // gives G = diag(4/12, 0, 0), all-green gives diag(0, 4/12, 0).
  const Image red = solid_image(2, 2, std::vector<double>{1, 0, 0});
  const Image green = solid_image(2, 2, std::vector<double>{0, 1, 0});
  CHECK(gram_distance(red, {green}, id) == doctest::Approx(2.0 / 9.0));
  // Mixed image: pixels (1,0,0),(1,0,0),(0,1,0),(1,1,0)
  Image mix(2, 2, 3);
  mix.at(0, 0, 0) = mix.at(0, 1, 0) = mix.at(1, 1, 0) = 1.0;
  mix.at(1, 0, 1) = mix.at(1, 1, 1) = 1.0;
  // G_mix = [[3, 1, 0], [1, 2, 0], [0, 0, 0]] / 12
  const double expect = (std::pow(3.0 / 12 - 4.0 / 12, 2) + 2 * std::pow(1.0 / 12, 2) + std::pow(2.0 / 12, 2));
  CHECK(gram_distance(red, {mix}, id) == doctest::Approx(expect));

  CHECK_THROWS_AS(gram_distance(a, {}, id), std::invalid_argument);
  struct Broken : FeatureExtractor {
    mutable int calls = 0;
    std::vector<FeatureMap> activations(const Image&) const override {
      return std::vector<FeatureMap>(1 + (calls++ % 2), FeatureMap(1, 1, 1, 1.0));
    }
    std::vector<std::string> layers() const override { return {"a"}; }
    std::string name() const override { return "broken"; }
  } broken;
  CHECK_THROWS_AS(gram_distance(a, {b}, broken), std::invalid_argument);
}

TEST_CASE("synthetic extractor shapes and determinism") {
  const SyntheticConvExtractor e(5);
  CHECK(e.layers() == std::vector<std::string>{"conv1", "conv2", "conv3"});
  const Image img = random_rgb(3, 20, 12);
  const auto maps = e.activations(img);
  REQUIRE(maps.size() == 3);
  CHECK(maps[0].channels == 8);
  CHECK((maps[0].height == 20 && maps[0].width == 12));
  CHECK((maps[1].channels == 16 && maps[1].height == 10 && maps[1].width == 6));
  CHECK((maps[2].channels == 32 && maps[2].height == 5 && maps[2].width == 3));
  for (const auto& m : maps)
    for (double v : m.data) REQUIRE(v >= 0.0);
  CHECK(SyntheticConvExtractor(5).activations(img)[2].data == maps[2].data);
  CHECK(SyntheticConvExtractor(6).activations(img)[2].data != maps[2].data);
  CHECK(make_extractor("identity")->name() == "identity");
  CHECK(make_extractor("synthetic-conv", {{"seed", 5}})->activations(img)[0].data == maps[0].data);
  CHECK_THROWS(make_extractor("vgg19"));
}

TEST_CASE("clip score") {
  CHECK(clip_score({1, 2, 3}, {1, 2, 3}) == doctest::Approx(2.5));
  CHECK(clip_score({1, 0}, {0, 5}) == 0.0);
  CHECK(clip_score({1, 2}, {-1, -2}) == 0.0);
  CHECK(clip_score({1, 1}, {1, 0}) == doctest::Approx(2.5 / std::sqrt(2.0)));
  CHECK_THROWS_AS(clip_score({0, 0}, {1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(clip_score({1}, {1, 0}), std::invalid_argument);
  std::mt19937_64 gen(2);
  std::normal_distribution<double> n;
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> a(8), b(8);
    for (int i = 0; i < 8; ++i) {
      a[i] = n(gen);
      b[i] = n(gen);
    }
    const double s = clip_score(a, b);
    REQUIRE((s >= 0.0 && s <= 2.5));
  }
}

TEST_CASE("mock embedding provider") {
  const MockEmbeddingProvider p(32);
  const auto t1 = p.embed_text("a red cube");
  CHECK(t1.size() == 32);
  double n2 = 0.0;
  for (double v : t1) n2 += v * v;
  CHECK(n2 == doctest::Approx(1.0));
  CHECK(p.embed_text("a red cube") == t1);
  CHECK(p.embed_text("a blue cube") != t1);
  CHECK(MockEmbeddingProvider(32, 1).embed_text("a red cube") != t1);
  Rgb8Image img{2, 1, {1, 2, 3, 4, 5, 6}};
  Rgb8Image other = img;
  other.pixels[5] = 7;
  CHECK(p.embed_image(img) == p.embed_image(img));
  CHECK(p.embed_image(img) != p.embed_image(other));
  Rgb8Image transposed{1, 2, img.pixels};
  CHECK(p.embed_image(img) != p.embed_image(transposed));
  CHECK(make_provider("mock", {{"dimension", 16}})->dimension() == 16);
  CHECK_THROWS(make_provider("clip"));
  CHECK_THROWS(MockEmbeddingProvider(0));
}

TEST_CASE("http embedding provider") {
  httplib::Server server;
  server.Post("/embed_text", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const double len = static_cast<double>(body.at("text").get<std::string>().size());
    res.set_content(nlohmann::json{{"embedding", {len, 1.0, 0.0}}}.dump(), "application/json");
  });
  server.Post("/embed_image", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const double w = body.at("width").get<double>();
    const auto dim = body.at("pixels").size() == 3 ? 3 : 2;
    std::vector<double> e(dim, w);
    res.set_content(nlohmann::json{{"embedding", e}}.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const auto p = make_provider("http", {{"endpoint", "http://127.0.0.1:" + std::to_string(port)}, {"dimension", 3}});
  CHECK(p->embed_text("abcd") == std::vector<double>{4, 1, 0});
  CHECK(p->embed_image(Rgb8Image{1, 1, {9, 9, 9}}) == std::vector<double>{1, 1, 1});
  CHECK_THROWS_AS(p->embed_image(Rgb8Image{1, 2, {9, 9, 9, 9, 9, 9}}), std::runtime_error);
  server.stop();
  th.join();
}

TEST_CASE("evaluate_result") {
  const Mesh cube = primitives::cube(true);
  const BakeResult b = bake(testing::lively_field(4), cube, 128);
  const TextureImage tex = edge_pad(b.texture, b.mask, 8);
  const Rgb8Image ref = to_rgb8(random_rgb(9, 32, 32));
  const SyntheticConvExtractor ext(2);
  const MockEmbeddingProvider prov;
  const auto cams = default_eval_cameras(48, 4);
  REQUIRE(cams.size() == 4);
  CHECK(cams[0].position.norm() == doctest::Approx(2.0));
  CHECK(cams[0].width == 48);
  const MetricRecord r1 = evaluate_result(cube, tex, ref, "a cube", cams, ext, prov);
  const MetricRecord r2 = evaluate_result(cube, tex, ref, "a cube", cams, ext, prov);
  CHECK(r1.views.size() == 4);
  CHECK(r1.to_json() == r2.to_json());
  double g = 0.0, c = 0.0;
  for (const ViewMetric& v : r1.views) {
    g += v.gram_distance;
    c += v.clip_score;
  }
  CHECK(r1.gram_distance == doctest::Approx(g / 4));
  CHECK(r1.clip_score == doctest::Approx(c / 4));
  CHECK((r1.clip_score >= 0.0 && r1.clip_score <= 2.5));
  const auto j = r1.to_json();
  CHECK(j.at("schema_version") == kMetricSchemaVersion);
  CHECK(j.at("views").size() == 4);
  CHECK_THROWS_AS(evaluate_result(cube, TextureImage(), ref, "x", cams, ext, prov), std::invalid_argument);

  const auto dir = testing::temp_dir("eval-out");
  append_jsonl(dir / "m.jsonl", r1);
  append_jsonl(dir / "m.jsonl", r2);
  const std::string text = testing::read_file(dir / "m.jsonl");
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  MetricRecord quoted = r1;
  quoted.prompt = "say \"hi\", ok";
  write_csv(dir / "m.csv", {quoted, r2});
  const std::string csv = testing::read_file(dir / "m.csv");
  CHECK(csv.rfind("schema_version,run,prompt,", 0) == 0);
  CHECK(csv.find("\"say \"\"hi\"\", ok\"") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("self-similarity: a flat texture viewed face-on matches its reference") {
  const int R = 64;
  const Rgb8Image ref = to_rgb8(random_rgb(12, R, R));
  TextureImage tex(R);
  tex.pixels = ref.pixels;
  // A quad that exactly fills a 45 degree view from distance 2.
  const double half = 2.0 * std::tan(22.5 * M_PI / 180.0);
  const Mesh quad = primitives::quad(2.0 * half, 0.0);
  const Camera cam = orbit_camera(90, 0, 2.0, 45, R, R);
  const SyntheticConvExtractor ext(0);
  const MetricRecord r = evaluate_result(quad, tex, ref, "flat", {cam}, ext, MockEmbeddingProvider());
  const double against_other = gram_distance(to_unit_image(ref), {random_rgb(13, R, R)}, ext);
  // Measured: the face-on view reproduces the texture texel for texel (0).
  CHECK(r.gram_distance <= 1e-12);
  CHECK(against_other > 0.0);
}
