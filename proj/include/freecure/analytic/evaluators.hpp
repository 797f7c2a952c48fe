#pragma once

// Deterministic stand-ins for the text-image scorer, face detector/embedder, and perceptual
// distance, all reading the analytic face layout.

#include <optional>
#include <vector>

#include "freecure/analytic/face.hpp"
#include "freecure/analytic/vocabulary.hpp"
#include "freecure/metrics.hpp"

namespace freecure::analytic {

/// Attribute read-out of a canvas image, the inverse of render_face on rendered faces.
inline FaceLook detect_look(const Image& img, double threshold = 0.12) {
  FaceLook look;
  const FaceFeatures f = extract_features(img);
  const FaceLook traits = decode_features(f);
  look.skin = traits.skin;
  look.marks = traits.marks;
  look.hair = traits.hair;
  look.texture = traits.texture;
  look.eyes = traits.eyes;

  auto mean_over = [&img](auto pred) {
    Rgb acc;
    int n = 0;
    for (int y = 0; y < kCells; ++y)
      for (int x = 0; x < kCells; ++x)
        if (pred(x, y)) {
          const Rgb c = cell_mean(img, x, y);
          acc.r += c.r;
          acc.g += c.g;
          acc.b += c.b;
          ++n;
        }
    return acc.scaled(1.0 / n);
  };
  const Rgb ring = mean_over(geometry::is_earring);
  double best = threshold;
  for (auto e : {Earrings::silver, Earrings::pearl, Earrings::gold, Earrings::weak}) {
    const double d = distance(ring, palette::earrings(e));
    if (d <= best) {
      best = d;
      look.earrings = e;
    }
  }
  const Rgb lens = mean_over(geometry::is_glasses);
  best = threshold;
  for (auto g : {Glasses::dark, Glasses::weak}) {
    const double d = distance(lens, palette::glasses(g));
    if (d <= best) {
      best = d;
      look.glasses = g;
    }
  }
  best = 1e300;
  for (std::size_t e = 0; e < enum_size<Expression>(); ++e) {
    const auto ex = static_cast<Expression>(e);
    double d = 0.0;
    for (int y = kMouthY0; y <= kMouthY1; ++y)
      for (int x = kMouthX0; x <= kMouthX1; ++x)
        d += distance(cell_mean(img, x, y), mouth_color(geometry::mouth_part(ex, x, y)));
    if (d < best) {
      best = d;
      look.expression = ex;
    }
  }
  return look;
}

/// Bag-of-attributes embedding shared by text and image sides.
class AttributeScorer final : public TextImageScorer {
 public:
  static constexpr std::size_t kDim = 1 + 6 + 2 + 4 + 3 + 1 + 5;

  std::vector<double> embed_text(std::string_view text) const override {
    const PromptReading r = read_prompt_text(text);
    std::vector<double> v(kDim, 0.0);
    v[0] = 1.0;
    if (r.hair) v[hair_slot(*r.hair)] = 1.0;
    if (r.texture && *r.texture != HairTexture::plain) v[texture_slot(*r.texture)] = 1.0;
    if (r.eyes) v[eye_slot(*r.eyes)] = 1.0;
    if (r.earrings && *r.earrings != Earrings::weak && *r.earrings != Earrings::none) v[earring_slot(*r.earrings)] = 1.0;
    if (r.glasses == Glasses::dark) v[glasses_slot()] = 1.0;
    if (r.expression && *r.expression != Expression::neutral) v[expression_slot(*r.expression)] = 1.0;
    return v;
  }

  std::vector<double> embed_image(const Image& image) const override {
    const FaceLook look = detect_look(image);
    std::vector<double> v(kDim, 0.0);
    v[0] = 1.0;
    v[hair_slot(look.hair)] = 1.0;
    if (look.texture != HairTexture::plain) v[texture_slot(look.texture)] = 1.0;
    v[eye_slot(look.eyes)] = 1.0;
    if (look.earrings != Earrings::none && look.earrings != Earrings::weak) v[earring_slot(look.earrings)] = 1.0;
    if (look.glasses == Glasses::dark) v[glasses_slot()] = 1.0;
    if (look.expression != Expression::neutral) v[expression_slot(look.expression)] = 1.0;
    return v;
  }

 private:
  static std::size_t hair_slot(HairColor c) { return 1 + static_cast<std::size_t>(c); }
  static std::size_t texture_slot(HairTexture t) { return 7 + (t == HairTexture::curly ? 0 : 1); }
  static std::size_t eye_slot(EyeColor e) { return 9 + static_cast<std::size_t>(e); }
  static std::size_t earring_slot(Earrings e) { return 13 + static_cast<std::size_t>(e) - 1; }
  static std::size_t glasses_slot() { return 16; }
  static std::size_t expression_slot(Expression e) { return 17 + static_cast<std::size_t>(e) - 1; }
};

/// Skin offset from the default tone plus signed mark indicators.
class SkinMarkEmbedder final : public FaceEmbedder {
 public:
  std::vector<double> embed(const Image& face) const override {
    const FaceLook traits = decode_features(extract_features(face));
    std::vector<double> v;
    v.push_back(10.0 * (traits.skin.r - palette::default_skin.r));
    v.push_back(10.0 * (traits.skin.g - palette::default_skin.g));
    v.push_back(10.0 * (traits.skin.b - palette::default_skin.b));
    for (bool m : traits.marks) v.push_back(m ? 1.0 : -1.0);
    return v;
  }
};

/// Treats the whole canvas as the face crop.
class WholeImageDetector final : public FaceDetector {
 public:
  std::optional<Image> detect(const Image& image) const override {
    if (image.size() == 0) return std::nullopt;
    return image;
  }
};

/// Detector that never finds a face; exercises the missing-value path.
class NoFaceDetector final : public FaceDetector {
 public:
  std::optional<Image> detect(const Image&) const override { return std::nullopt; }
};

class MeanAbsDistance final : public PerceptualDistance {
 public:
  double distance(const Image& a, const Image& b) const override {
    require(a.same_geometry(b), ErrorKind::invalid_argument, "distance: image geometry differs");
    return mean_abs_diff(a.values(), b.values());
  }
};

}  // namespace freecure::analytic
