#pragma once

#include <optional>
#include <string>

#include "texdistill/backend.hpp"
#include "texdistill/eval.hpp"
#include "texdistill/guidance.hpp"
#include "texdistill/image_io.hpp"
#include "texdistill/layers.hpp"

namespace texdistill {

struct PromptPair {
  std::string y;      // subject + style phrase
  std::string y_ref;  // content-only description of the reference image

  void validate() const;  // both non-empty
};

struct PreparedConditioning {
  ConditioningBundle bundle;
  StyleEmbeddings embeddings;
};

// f_g = embed_image(reference), f_c = embed_text(y_ref), f_s = odcr(f_g, f_c).
// With `naive_strength`, f_s = f_g - strength * f_c instead (ablation).
// The bundle carries y, y_ref, f_s and the layer set; no geometry.
PreparedConditioning prepare_conditioning(const Rgb8Image& reference, const PromptPair& prompts,
                                          const EmbeddingProvider& provider, const InjectionLayerSet& layers,
                                          std::optional<double> naive_strength = std::nullopt);

}  // namespace texdistill
