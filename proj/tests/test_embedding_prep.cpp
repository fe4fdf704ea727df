#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"
#include "texdistill/embedding_prep.hpp"

using namespace texdistill;

namespace {

Rgb8Image checker(int n, std::uint8_t a, std::uint8_t b) {
  Rgb8Image img{n, n, std::vector<std::uint8_t>(static_cast<std::size_t>(n) * n * 3)};
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      for (int c = 0; c < 3; ++c) img.pixels[(static_cast<std::size_t>(y) * n + x) * 3 + c] = ((x + y) % 2) ? a : b;
  return img;
}

// Provider with controllable outputs, to exercise the degenerate paths.
struct FixedProvider : EmbeddingProvider {
  std::vector<double> image, text;
  std::vector<double> embed_image(const Rgb8Image&) const override { return image; }
  std::vector<double> embed_text(const std::string&) const override { return text; }
  int dimension() const override { return static_cast<int>(image.size()); }
  std::string name() const override { return "fixed"; }
};

}  // namespace

TEST_CASE("prompt pair validation") {
  const PromptPair ok{"a", "b"}, no_y{"", "b"}, no_ref{"a", ""};
  CHECK_NOTHROW(ok.validate());
  CHECK_THROWS_AS(no_y.validate(), std::invalid_argument);
  CHECK_THROWS_AS(no_ref.validate(), std::invalid_argument);
}

TEST_CASE("prepared bundle carries prompts, style feature and layers") {
  const MockEmbeddingProvider p(48);
  const auto layers = InjectionLayerSet::preset("style-extended");
  const Rgb8Image ref = checker(8, 10, 240);
  const PromptPair prompts{"a cube in watercolor style", "a bowl of fruit"};
  const PreparedConditioning pc = prepare_conditioning(ref, prompts, p, layers);
  CHECK(*pc.bundle.text == prompts.y);
  CHECK(*pc.bundle.negative_text == prompts.y_ref);
  REQUIRE(pc.bundle.style);
  CHECK(pc.bundle.style->layers == layers);
  CHECK(pc.bundle.style->feature == pc.embeddings.f_s);
  CHECK_FALSE(pc.bundle.geometry);
  CHECK(pc.embeddings.f_g == p.embed_image(ref));
  CHECK(pc.embeddings.f_c == p.embed_text(prompts.y_ref));
  CHECK(std::abs(dot(pc.embeddings.f_s, pc.embeddings.f_c)) <=
        1e-6 * norm(pc.embeddings.f_s) * norm(pc.embeddings.f_c));

  const PreparedConditioning again = prepare_conditioning(ref, prompts, p, layers);
  CHECK(again.embeddings.f_s == pc.embeddings.f_s);
  CHECK(*again.bundle.text == *pc.bundle.text);
}

TEST_CASE("f_s depends on the reference and y_ref only") {
  const MockEmbeddingProvider p(32);
  const auto layers = InjectionLayerSet::preset("style-minimal");
  const Rgb8Image ref = checker(6, 0, 255);
  const PreparedConditioning a = prepare_conditioning(ref, {"first prompt", "content"}, p, layers);
  const PreparedConditioning b = prepare_conditioning(ref, {"second prompt", "content"}, p, layers);
  CHECK(*a.bundle.text != *b.bundle.text);
  CHECK(*a.bundle.negative_text == *b.bundle.negative_text);
  CHECK(a.embeddings.f_s == b.embeddings.f_s);
  const PreparedConditioning swapped = prepare_conditioning(ref, {"content", "first prompt"}, p, layers);
  CHECK(*swapped.bundle.text == "content");
  CHECK(swapped.embeddings.f_s != a.embeddings.f_s);
  const PreparedConditioning other_ref = prepare_conditioning(checker(6, 1, 255), {"first prompt", "content"}, p, layers);
  CHECK(other_ref.embeddings.f_s != a.embeddings.f_s);
}

TEST_CASE("invariants hold over many random inputs") {
  const MockEmbeddingProvider p(64, 3);
  for (int k = 0; k < 200; ++k) {
    const PreparedConditioning pc = prepare_conditioning(checker(4, static_cast<std::uint8_t>(k), 7),
                                                         {"y" + std::to_string(k), "ref" + std::to_string(k * 31)},
                                                         p, InjectionLayerSet::preset("all"));
    const auto& e = pc.embeddings;
    REQUIRE(std::abs(dot(e.f_s, e.f_c)) <= 1e-6 * norm(e.f_s) * norm(e.f_c));
    const double coef = dot(e.f_g, e.f_c) / dot(e.f_c, e.f_c);
    for (std::size_t i = 0; i < e.f_g.size(); ++i) REQUIRE(std::abs(e.f_s[i] + coef * e.f_c[i] - e.f_g[i]) < 1e-12);
  }
}

TEST_CASE("naive subtraction ablation and error paths") {
  FixedProvider p;
  p.image = {3, 4};
  p.text = {1, 0};
  const auto layers = InjectionLayerSet::preset("all");
  const Rgb8Image ref = checker(2, 0, 0);
  const PromptPair yr{"y", "r"};
  CHECK(prepare_conditioning(ref, {"y", "r"}, p, layers).embeddings.f_s == Embedding{0, 4});
  CHECK(prepare_conditioning(ref, {"y", "r"}, p, layers, 0.5).embeddings.f_s == Embedding{2.5, 4});
  p.text = {0, 0};
  CHECK_THROWS_AS(prepare_conditioning(ref, yr, p, layers), std::invalid_argument);
  p.text = {1, 0, 0};
  CHECK_THROWS_AS(prepare_conditioning(ref, yr, p, layers), std::invalid_argument);
  p.text = {1, 0};
  const PromptPair empty_y{"", "r"};
  CHECK_THROWS_AS(prepare_conditioning(ref, empty_y, p, layers), std::invalid_argument);
}
