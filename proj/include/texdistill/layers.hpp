#pragma once

#include <set>
#include <string>
#include <vector>

namespace texdistill {

// Cross-attention layers of an SD1.5-style UNet that may receive the style
// feature. Membership is restricted to catalog().
class InjectionLayerSet {
 public:
  InjectionLayerSet() = default;
  // Each entry is a catalog name or a prefix ("up_blocks", "down_blocks.2")
  // that expands to every catalog layer under it. Throws on unknown names.
  explicit InjectionLayerSet(const std::vector<std::string>& entries);

  // "style-minimal": down_blocks.2, mid_block.attentions.0, up_blocks.1
  // "style-extended": style-minimal + down_blocks.1.attentions.0 + every up_blocks layer
  // "all": the full catalog
  // "none": empty
  static InjectionLayerSet preset(const std::string& name);
  static const std::vector<std::string>& catalog();
  static const std::vector<std::string>& preset_names();

  const std::set<std::string>& layers() const { return layers_; }
  bool empty() const { return layers_.empty(); }
  bool contains(const std::string& layer) const { return layers_.count(layer) > 0; }
  std::size_t size() const { return layers_.size(); }

  bool operator==(const InjectionLayerSet&) const = default;

 private:
  std::set<std::string> layers_;
};

}  // namespace texdistill
