#include "texdistill/layers.hpp"

#include <stdexcept>

namespace texdistill {

const std::vector<std::string>& InjectionLayerSet::catalog() {
  static const std::vector<std::string> names = {
      "down_blocks.0.attentions.0", "down_blocks.0.attentions.1", "down_blocks.1.attentions.0",
      "down_blocks.1.attentions.1", "down_blocks.2.attentions.0", "down_blocks.2.attentions.1",
      "mid_block.attentions.0",     "up_blocks.1.attentions.0",   "up_blocks.1.attentions.1",
      "up_blocks.1.attentions.2",   "up_blocks.2.attentions.0",   "up_blocks.2.attentions.1",
      "up_blocks.2.attentions.2",   "up_blocks.3.attentions.0",   "up_blocks.3.attentions.1",
      "up_blocks.3.attentions.2",
  };
  return names;
}

const std::vector<std::string>& InjectionLayerSet::preset_names() {
  static const std::vector<std::string> names = {"style-minimal", "style-extended", "all", "none"};
  return names;
}

InjectionLayerSet::InjectionLayerSet(const std::vector<std::string>& entries) {
  for (const std::string& e : entries) {
    bool matched = false;
    for (const std::string& name : catalog()) {
      if (name == e || (name.size() > e.size() && name.compare(0, e.size(), e) == 0 && name[e.size()] == '.')) {
        layers_.insert(name);
        matched = true;
      }
    }
    if (!matched) throw std::invalid_argument("unknown injection layer '" + e + "'");
  }
}

InjectionLayerSet InjectionLayerSet::preset(const std::string& name) {
  if (name == "style-minimal") return InjectionLayerSet({"down_blocks.2", "mid_block.attentions.0", "up_blocks.1"});
  if (name == "style-extended")
    return InjectionLayerSet({"down_blocks.2", "mid_block.attentions.0", "up_blocks.1", "down_blocks.1.attentions.0", "up_blocks"});
  if (name == "all") return InjectionLayerSet(catalog());
  if (name == "none") return InjectionLayerSet();
  throw std::invalid_argument("unknown injection layer preset '" + name + "'");
}

}  // namespace texdistill
