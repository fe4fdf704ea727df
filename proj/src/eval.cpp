#include "texdistill/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <stdexcept>

#include "texdistill/render.hpp"
#include "texdistill/rng.hpp"

namespace texdistill {

using nlohmann::json;

FeatureMap::FeatureMap(int c, int h, int w, double fill)
    : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

namespace {

FeatureMap to_feature_map(const Image& rgb) {
  if (rgb.empty()) throw std::invalid_argument("cannot extract features from an empty image");
  FeatureMap m(rgb.channels, rgb.height, rgb.width);
  for (int y = 0; y < rgb.height; ++y)
    for (int x = 0; x < rgb.width; ++x)
      for (int c = 0; c < rgb.channels; ++c) m.at(c, y, x) = rgb.at(y, x, c);
  return m;
}

FeatureMap avg_pool2(const FeatureMap& in) {
  FeatureMap out(in.channels, std::max(1, in.height / 2), std::max(1, in.width / 2));
  for (int c = 0; c < out.channels; ++c) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        double s = 0.0;
        int n = 0;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const int sy = 2 * y + dy, sx = 2 * x + dx;
            if (sy < in.height && sx < in.width) {
              s += in.at(c, sy, sx);
              ++n;
            }
          }
        out.at(c, y, x) = s / n;
      }
    }
  }
  return out;
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;

}  // namespace

std::vector<FeatureMap> IdentityExtractor::activations(const Image& rgb) const { return {to_feature_map(rgb)}; }

SyntheticConvExtractor::SyntheticConvExtractor(std::uint64_t seed, std::vector<int> channels) {
  if (channels.empty()) throw std::invalid_argument("synthetic extractor needs at least one layer");
  Rng rng = make_rng(seed, 0xE7u);
  int in = 3;
  for (int out : channels) {
    if (out < 1) throw std::invalid_argument("layer channel counts must be positive");
    Conv conv{in, out, std::vector<double>(static_cast<std::size_t>(out) * in * 9), std::vector<double>(out, 0.0)};
    const double scale = std::sqrt(2.0 / (in * 9));
    for (double& w : conv.weights) w = scale * standard_normal(rng);
    convs_.push_back(std::move(conv));
    in = out;
  }
}

std::vector<std::string> SyntheticConvExtractor::layers() const {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < convs_.size(); ++k) names.push_back("conv" + std::to_string(k + 1));
  return names;
}

std::vector<FeatureMap> SyntheticConvExtractor::activations(const Image& rgb) const {
  if (rgb.channels != 3) throw std::invalid_argument("synthetic extractor expects RGB input");
  std::vector<FeatureMap> outs;
  FeatureMap cur = to_feature_map(rgb);
  for (std::size_t k = 0; k < convs_.size(); ++k) {
    if (k > 0) cur = avg_pool2(cur);
    const Conv& conv = convs_[k];
    FeatureMap next(conv.out, cur.height, cur.width);
    for (int o = 0; o < conv.out; ++o) {
      for (int y = 0; y < cur.height; ++y) {
        for (int x = 0; x < cur.width; ++x) {
          double s = conv.bias[o];
          for (int i = 0; i < conv.in; ++i) {
            const double* w = &conv.weights[(static_cast<std::size_t>(o) * conv.in + i) * 9];
            for (int dy = -1; dy <= 1; ++dy) {
              const int sy = y + dy;
              if (sy < 0 || sy >= cur.height) continue;
              for (int dx = -1; dx <= 1; ++dx) {
                const int sx = x + dx;
                if (sx < 0 || sx >= cur.width) continue;
                s += w[(dy + 1) * 3 + (dx + 1)] * cur.at(i, sy, sx);
              }
            }
          }
          next.at(o, y, x) = std::max(0.0, s);
        }
      }
    }
    cur = std::move(next);
    outs.push_back(cur);
  }
  return outs;
}

std::unique_ptr<FeatureExtractor> make_extractor(const std::string& name, const json& options) {
  if (name == "identity") return std::make_unique<IdentityExtractor>();
  if (name == "synthetic-conv") {
    const json o = options.is_null() ? json::object() : options;
    return std::make_unique<SyntheticConvExtractor>(o.value("seed", std::uint64_t{0}),
                                                    o.value("channels", std::vector<int>{8, 16, 32}));
  }
  throw std::invalid_argument("unknown feature extractor '" + name + "'");
}

Eigen::MatrixXd gram_matrix(const FeatureMap& map) {
  if (map.channels < 1 || map.height < 1 || map.width < 1)
    throw std::invalid_argument("gram_matrix: feature map has a zero-sized dimension");
  const Eigen::Index hw = static_cast<Eigen::Index>(map.height) * map.width;
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> F(map.data.data(),
                                                                                                    map.channels, hw);
  return (F * F.transpose()) / (static_cast<double>(map.channels) * hw);
}

double gram_distance(const Image& reference, const std::vector<Image>& rendered, const FeatureExtractor& extractor) {
  if (rendered.empty()) throw std::invalid_argument("gram_distance needs at least one rendered image");
  const std::size_t n_layers = extractor.layers().size();
  const auto ref_maps = extractor.activations(reference);
  if (ref_maps.size() != n_layers) throw std::invalid_argument("extractor returned the wrong number of layers");
  std::vector<Eigen::MatrixXd> ref_grams;
  for (const auto& m : ref_maps) ref_grams.push_back(gram_matrix(m));

  double total = 0.0;
  for (const Image& img : rendered) {
    const auto maps = extractor.activations(img);
    if (maps.size() != n_layers) throw std::invalid_argument("extractor returned the wrong number of layers");
    double per_image = 0.0;
    for (std::size_t j = 0; j < n_layers; ++j) {
      const Eigen::MatrixXd g = gram_matrix(maps[j]);
      if (g.rows() != ref_grams[j].rows()) throw std::invalid_argument("layer channel counts differ between images");
      per_image += (ref_grams[j] - g).squaredNorm();
    }
    total += per_image / static_cast<double>(n_layers);
  }
  return total / static_cast<double>(rendered.size());
}

double clip_score(const std::vector<double>& text_embedding, const std::vector<double>& image_embedding) {
  if (text_embedding.size() != image_embedding.size()) throw std::invalid_argument("clip_score: dimensions differ");
  const Eigen::Map<const Eigen::VectorXd> c(text_embedding.data(), text_embedding.size());
  const Eigen::Map<const Eigen::VectorXd> v(image_embedding.data(), image_embedding.size());
  const double nc = c.norm(), nv = v.norm();
  if (!(nc > 0.0) || !(nv > 0.0)) throw std::invalid_argument("clip_score: zero embedding");
  const double cos = std::clamp(c.dot(v) / (nc * nv), -1.0, 1.0);
  return kClipScoreWeight * std::max(cos, 0.0);
}

MockEmbeddingProvider::MockEmbeddingProvider(int dimension, std::uint64_t salt) : dimension_(dimension), salt_(salt) {
  if (dimension < 1) throw std::invalid_argument("embedding dimension must be positive");
}

std::vector<double> MockEmbeddingProvider::from_hash(std::uint64_t h) const {
  Rng rng = make_rng(h, salt_);
  std::vector<double> v(dimension_);
  double n2 = 0.0;
  while (!(n2 > 0.0)) {
    n2 = 0.0;
    for (double& x : v) {
      x = standard_normal(rng);
      n2 += x * x;
    }
  }
  const double inv = 1.0 / std::sqrt(n2);
  for (double& x : v) x *= inv;
  return v;
}

std::vector<double> MockEmbeddingProvider::embed_image(const Rgb8Image& image) const {
  std::uint64_t h = fnv1a(kFnvOffset, "image", 5);
  const std::int32_t dims[2] = {image.width, image.height};
  h = fnv1a(h, dims, sizeof(dims));
  h = fnv1a(h, image.pixels.data(), image.pixels.size());
  return from_hash(h);
}

std::vector<double> MockEmbeddingProvider::embed_text(const std::string& text) const {
  std::uint64_t h = fnv1a(kFnvOffset, "text", 4);
  h = fnv1a(h, text.data(), text.size());
  return from_hash(h);
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpClientOptions client, int dimension)
    : client_(std::move(client)), dimension_(dimension) {
  client_.validate();
  if (dimension < 1) throw std::invalid_argument("embedding dimension must be positive");
}

std::vector<double> HttpEmbeddingProvider::read_embedding(const json& response) const {
  std::vector<double> v;
  try {
    v = response.at("embedding").get<std::vector<double>>();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("malformed embedding response: ") + e.what());
  }
  if (static_cast<int>(v.size()) != dimension_)
    throw std::runtime_error("embedding service returned " + std::to_string(v.size()) + " values, expected " +
                             std::to_string(dimension_));
  return v;
}

std::vector<double> HttpEmbeddingProvider::embed_image(const Rgb8Image& image) const {
  return read_embedding(post_json(client_, "/embed_image",
                                  json{{"width", image.width}, {"height", image.height}, {"pixels", image.pixels}}));
}

std::vector<double> HttpEmbeddingProvider::embed_text(const std::string& text) const {
  return read_embedding(post_json(client_, "/embed_text", json{{"text", text}}));
}

std::unique_ptr<EmbeddingProvider> make_provider(const std::string& name, const json& options) {
  const json o = options.is_null() ? json::object() : options;
  if (name == "mock") return std::make_unique<MockEmbeddingProvider>(o.value("dimension", 64), o.value("salt", std::uint64_t{0}));
  if (name == "http")
    return std::make_unique<HttpEmbeddingProvider>(HttpClientOptions::from_json(o, kEmbeddingEndpointEnv),
                                                   o.value("dimension", 512));
  throw std::invalid_argument("unknown embedding provider '" + name + "'");
}

json MetricRecord::to_json() const {
  json views_j = json::array();
  for (const ViewMetric& v : views) {
    views_j.push_back({{"index", v.index},
                       {"camera_position", {v.camera.position.x(), v.camera.position.y(), v.camera.position.z()}},
                       {"gram_distance", v.gram_distance},
                       {"clip_score", v.clip_score}});
  }
  return json{{"schema_version", kMetricSchemaVersion},
              {"run", run},
              {"prompt", prompt},
              {"extractor", extractor},
              {"provider", provider},
              {"gram_distance", gram_distance},
              {"clip_score", clip_score},
              {"views", views_j}};
}

std::vector<Camera> default_eval_cameras(int size, int count) {
  if (count < 1) throw std::invalid_argument("need at least one evaluation view");
  std::vector<Camera> cams;
  for (int k = 0; k < count; ++k)
    cams.push_back(orbit_camera(45.0 + 360.0 * k / count, 15.0, 2.0, 45.0, size, size));
  return cams;
}

MetricRecord evaluate_result(const Mesh& mesh, const TextureImage& texture, const Rgb8Image& reference,
                             const std::string& prompt, const std::vector<Camera>& cameras,
                             const FeatureExtractor& extractor, const EmbeddingProvider& provider) {
  if (texture.empty()) throw std::invalid_argument("evaluate_result: missing texture");
  if (cameras.empty()) throw std::invalid_argument("evaluate_result: no cameras");
  const Image ref = to_unit_image(reference);
  const std::vector<double> text = provider.embed_text(prompt);

  MetricRecord rec;
  rec.prompt = prompt;
  rec.extractor = extractor.name();
  rec.provider = provider.name();
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    const RenderedView view = render_textured(mesh, texture, cameras[i]);
    ViewMetric vm;
    vm.index = static_cast<int>(i);
    vm.camera = cameras[i];
    vm.gram_distance = gram_distance(ref, {view.color}, extractor);
    vm.clip_score = clip_score(text, provider.embed_image(to_rgb8(view.color)));
    rec.gram_distance += vm.gram_distance;
    rec.clip_score += vm.clip_score;
    rec.views.push_back(vm);
  }
  rec.gram_distance /= static_cast<double>(cameras.size());
  rec.clip_score /= static_cast<double>(cameras.size());
  return rec;
}

void append_jsonl(const std::filesystem::path& path, const MetricRecord& record) {
  std::ofstream os(path, std::ios::app);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << record.to_json().dump() << '\n';
}

namespace {

std::string csv_field(const std::string& s) {
  std::string quoted = "\"";
  for (char c : s) quoted += (c == '"') ? std::string("\"\"") : std::string(1, c);
  return quoted + "\"";
}

}  // namespace

void write_csv(const std::filesystem::path& path, const std::vector<MetricRecord>& records) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "schema_version,run,prompt,extractor,provider,gram_distance,clip_score,views\n";
  os << std::setprecision(17);
  for (const MetricRecord& r : records) {
    os << kMetricSchemaVersion << ',' << csv_field(r.run) << ',' << csv_field(r.prompt) << ',' << r.extractor << ','
       << r.provider << ',' << r.gram_distance << ',' << r.clip_score << ',' << r.views.size() << '\n';
  }
}

}  // namespace texdistill
