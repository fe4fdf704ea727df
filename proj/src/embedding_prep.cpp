#include "texdistill/embedding_prep.hpp"

#include <stdexcept>

namespace texdistill {

void PromptPair::validate() const {
  if (y.empty()) throw std::invalid_argument("prompt y must not be empty");
  if (y_ref.empty()) throw std::invalid_argument("prompt y_ref must not be empty");
}

PreparedConditioning prepare_conditioning(const Rgb8Image& reference, const PromptPair& prompts,
                                          const EmbeddingProvider& provider, const InjectionLayerSet& layers,
                                          std::optional<double> naive_strength) {
  prompts.validate();
  if (reference.pixels.empty()) throw std::invalid_argument("reference image is empty");
  Embedding f_g = provider.embed_image(reference);
  Embedding f_c = provider.embed_text(prompts.y_ref);
  if (static_cast<int>(f_g.size()) != provider.dimension() || static_cast<int>(f_c.size()) != provider.dimension())
    throw std::invalid_argument("embedding provider returned vectors of inconsistent dimension");

  PreparedConditioning out;
  if (naive_strength) {
    out.embeddings.f_s = naive_subtraction(f_g, f_c, *naive_strength);
    out.embeddings.f_g = std::move(f_g);
    out.embeddings.f_c = std::move(f_c);
  } else {
    out.embeddings = StyleEmbeddings::decompose(std::move(f_g), std::move(f_c));
  }
  out.bundle.text = prompts.y;
  out.bundle.negative_text = prompts.y_ref;
  out.bundle.style = StyleCondition{out.embeddings.f_s, layers};
  return out;
}

}  // namespace texdistill
