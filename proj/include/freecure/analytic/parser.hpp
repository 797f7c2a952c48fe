#pragma once

#include <initializer_list>

#include "freecure/analytic/face.hpp"
#include "freecure/same.hpp"

namespace freecure::analytic {

/// Reads the analytic face layout back out of a canvas image. Static zones come from the
/// geometry; glasses, earrings, and mouth cells are classified by nearest palette colour.
class SyntheticParser final : public ParserAdapter {
 public:
  static constexpr double kColorThreshold = 0.12;

  std::string name() const override { return "synthetic"; }
  int label_count() const override { return label::count; }

  LabelMap parse(const Image& image) const override {
    require(image.channels() == 3 && image.height() == kCanvas && image.width() == kCanvas,
            ErrorKind::invalid_argument, "synthetic parser expects a 3x64x64 image");
    LabelMap cells(kCells, kCells);
    const FaceLook bare;  // no accessories, neutral mouth
    for (int y = 0; y < kCells; ++y) {
      for (int x = 0; x < kCells; ++x) {
        const Rgb c = cell_mean(image, x, y);
        int l = cell_label(bare, x, y);
        if (geometry::is_glasses(x, y)) {
          if (nearest(c, {palette::glasses(Glasses::dark), palette::glasses(Glasses::weak)}) >= 0) l = label::eye_g;
        } else if (geometry::is_earring(x, y)) {
          if (nearest(c, {palette::earrings(Earrings::silver), palette::earrings(Earrings::pearl),
                          palette::earrings(Earrings::gold), palette::earrings(Earrings::weak)}) >= 0)
            l = label::ear_r;
        } else if (geometry::in_mouth_box(x, y)) {
          switch (nearest(c, {palette::lip, palette::teeth, palette::mouth_dark})) {
            case 0: l = y <= 20 ? label::u_lip : label::l_lip; break;
            case 1:
            case 2: l = label::mouth; break;
            default: l = label::skin; break;
          }
        }
        cells.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = l;
      }
    }
    LabelMap out(kCanvas, kCanvas);
    for (std::size_t y = 0; y < kCanvas; ++y)
      for (std::size_t x = 0; x < kCanvas; ++x) out.at(y, x) = cells.at(y / kPixelsPerCell, x / kPixelsPerCell);
    return out;
  }

 private:
  static int nearest(const Rgb& c, std::initializer_list<Rgb> candidates) {
    int best = -1;
    double best_d = kColorThreshold;
    int i = 0;
    for (const auto& cand : candidates) {
      const double d = distance(c, cand);
      if (d <= best_d) {
        best_d = d;
        best = i;
      }
      ++i;
    }
    return best;
  }
};

}  // namespace freecure::analytic
