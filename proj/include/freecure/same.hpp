#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "freecure/attention.hpp"
#include "freecure/errors.hpp"
#include "freecure/tensor.hpp"

namespace freecure {

/// Face parser contract: one integer label per pixel.
class ParserAdapter {
 public:
  virtual ~ParserAdapter() = default;
  virtual std::string name() const = 0;
  virtual int label_count() const = 0;
  virtual LabelMap parse(const Image& image) const = 0;
};

struct ParsingMap {
  LabelMap labels;
  std::map<std::string, std::set<int>> label_table;
};

inline ParsingMap parse_face(const Image& image, const ParserAdapter& parser,
                             std::map<std::string, std::set<int>> label_table) {
  require(image.size() > 0, ErrorKind::invalid_argument, "parse_face: empty image");
  const int domain = parser.label_count();
  for (const auto& [attr, labels] : label_table)
    for (int l : labels)
      require(l >= 0 && l < domain, ErrorKind::invalid_argument,
              "attribute '" + attr + "' references label " + std::to_string(l) + " outside parser '" + parser.name() +
                  "' domain [0," + std::to_string(domain) + ")");
  ParsingMap pm{parser.parse(image), std::move(label_table)};
  require(pm.labels.height() == image.height() && pm.labels.width() == image.width(), ErrorKind::backend,
          "parser returned a label map of the wrong size");
  return pm;
}

/// {0,1} map of the pixels whose label belongs to the attribute.
inline GrayMap binary_mask(const ParsingMap& pm, const std::string& attribute_id) {
  const auto it = pm.label_table.find(attribute_id);
  require(it != pm.label_table.end(), ErrorKind::invalid_argument, "attribute '" + attribute_id + "' has no parser labels");
  GrayMap out(pm.labels.height(), pm.labels.width());
  for (std::size_t y = 0; y < out.height(); ++y)
    for (std::size_t x = 0; x < out.width(); ++x) out.at(y, x) = it->second.contains(pm.labels.at(y, x)) ? 1.0 : 0.0;
  return out;
}

/// M_i = N(H_i) * bp * bf.
inline GrayMap same_mask(const GrayMap& h, const GrayMap& bp, const GrayMap& bf) {
  require(h.same_size(bp) && h.same_size(bf), ErrorKind::invalid_argument,
          "same_mask: attention and parsing masks differ in resolution");
  const GrayMap n = normalize_map(h);
  GrayMap out(h.height(), h.width());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = n[i] * bp[i] * bf[i];
  return out;
}

/// Pixelwise maximum.
inline GrayMap merge_masks(const std::vector<GrayMap>& masks) {
  require(!masks.empty(), ErrorKind::invalid_argument, "merge_masks: empty mask list");
  GrayMap out = masks.front();
  for (std::size_t k = 1; k < masks.size(); ++k) {
    require(masks[k].same_size(out), ErrorKind::invalid_argument, "merge_masks: resolution mismatch");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], masks[k][i]);
  }
  return out;
}

/// Bilinear resample (half-pixel centres) clamped to [0,1].
inline GrayMap resample_mask(const GrayMap& mask, std::size_t height, std::size_t width) {
  GrayMap out = resize_bilinear(mask, height, width);
  for (auto& v : out.values()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

struct SameMask {
  std::map<std::string, GrayMap> per_attribute;
  GrayMap merged;

  std::size_t height() const { return merged.height(); }
  std::size_t width() const { return merged.width(); }
};

}  // namespace freecure
