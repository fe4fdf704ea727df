#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "texdistill/camera.hpp"
#include "texdistill/http_client.hpp"
#include "texdistill/image.hpp"
#include "texdistill/image_io.hpp"
#include "texdistill/mesh.hpp"
#include "texdistill/texture_image.hpp"

namespace texdistill {

// C x H x W activations, channel-major.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w, double fill = 0.0);
  double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
};

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  // One map per entry of layers(), in that order. Deterministic.
  virtual std::vector<FeatureMap> activations(const Image& rgb) const = 0;
  virtual std::vector<std::string> layers() const = 0;
  virtual std::string name() const = 0;
};

// The input channels as a single layer.
class IdentityExtractor final : public FeatureExtractor {
 public:
  std::vector<FeatureMap> activations(const Image& rgb) const override;
  std::vector<std::string> layers() const override { return {"input"}; }
  std::string name() const override { return "identity"; }
};

// Fixed random 3x3 convolutions (zero padding) with ReLU; stage k > 0 is
// preceded by 2x2 average pooling. Weights ~ N(0, 2 / fan_in) from `seed`.
class SyntheticConvExtractor final : public FeatureExtractor {
 public:
  explicit SyntheticConvExtractor(std::uint64_t seed = 0, std::vector<int> channels = {8, 16, 32});
  std::vector<FeatureMap> activations(const Image& rgb) const override;
  std::vector<std::string> layers() const override;
  std::string name() const override { return "synthetic-conv"; }

 private:
  struct Conv {
    int in = 0;
    int out = 0;
    std::vector<double> weights;  // out x in x 3 x 3
    std::vector<double> bias;
  };
  std::vector<Conv> convs_;
};

std::unique_ptr<FeatureExtractor> make_extractor(const std::string& name, const nlohmann::json& options = {});

// G_{c,c'} = (1 / (C H W)) sum_{h,w} phi_{c,h,w} phi_{c',h,w}
Eigen::MatrixXd gram_matrix(const FeatureMap& map);

// Mean over layers of |G_j(ref) - G_j(render)|_F^2, then mean over renders.
double gram_distance(const Image& reference, const std::vector<Image>& rendered, const FeatureExtractor& extractor);

inline constexpr double kClipScoreWeight = 2.5;

// 2.5 * max(cos(text, image), 0). Throws on zero vectors or mismatched sizes.
double clip_score(const std::vector<double>& text_embedding, const std::vector<double>& image_embedding);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<double> embed_image(const Rgb8Image& image) const = 0;
  virtual std::vector<double> embed_text(const std::string& text) const = 0;
  virtual int dimension() const = 0;
  virtual std::string name() const = 0;
};

// FNV-1a hash of the input bytes seeds a Gaussian draw, normalized to unit
// length. Images and text hash under different domain tags.
class MockEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit MockEmbeddingProvider(int dimension = 64, std::uint64_t salt = 0);
  std::vector<double> embed_image(const Rgb8Image& image) const override;
  std::vector<double> embed_text(const std::string& text) const override;
  int dimension() const override { return dimension_; }
  std::string name() const override { return "mock"; }

 private:
  std::vector<double> from_hash(std::uint64_t h) const;
  int dimension_;
  std::uint64_t salt_;
};

inline constexpr const char* kEmbeddingEndpointEnv = "TEXDISTILL_EMBEDDING_ENDPOINT";

// POST <endpoint>/embed_text {"text"} and /embed_image {"width","height",
// "pixels"} -> {"embedding": [...]}. Responses must have `dimension` entries.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(HttpClientOptions client, int dimension);
  std::vector<double> embed_image(const Rgb8Image& image) const override;
  std::vector<double> embed_text(const std::string& text) const override;
  int dimension() const override { return dimension_; }
  std::string name() const override { return "http"; }

 private:
  std::vector<double> read_embedding(const nlohmann::json& response) const;
  HttpClientOptions client_;
  int dimension_;
};

std::unique_ptr<EmbeddingProvider> make_provider(const std::string& name, const nlohmann::json& options = {});

struct ViewMetric {
  int index = 0;
  Camera camera;
  double gram_distance = 0.0;
  double clip_score = 0.0;
};

inline constexpr int kMetricSchemaVersion = 1;

struct MetricRecord {
  std::string run;  // free-form label, e.g. the result directory
  std::string prompt;
  std::string extractor;
  std::string provider;
  double gram_distance = 0.0;    // mean over views
  double clip_score = 0.0;       // mean over views
  std::vector<ViewMetric> views;

  nlohmann::json to_json() const;
};

// `count` views evenly spaced in azimuth at 15 degrees elevation, radius 2.
std::vector<Camera> default_eval_cameras(int size = 128, int count = 4);

// Renders each camera with the baked texture (nearest texel) and scores it
// against the reference image and the prompt.
MetricRecord evaluate_result(const Mesh& mesh, const TextureImage& texture, const Rgb8Image& reference,
                             const std::string& prompt, const std::vector<Camera>& cameras,
                             const FeatureExtractor& extractor, const EmbeddingProvider& provider);

void append_jsonl(const std::filesystem::path& path, const MetricRecord& record);
void write_csv(const std::filesystem::path& path, const std::vector<MetricRecord>& records);

}  // namespace texdistill
