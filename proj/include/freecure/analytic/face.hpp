#pragma once

// Procedural 32x32-cell face model behind the analytic backend. Every cell renders as a
// 2x2 pixel block on the 64x64 canvas; labels follow the CelebAMask-HQ numbering.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "freecure/errors.hpp"
#include "freecure/tensor.hpp"

namespace freecure::analytic {

inline constexpr int kCells = 32;
inline constexpr int kPixelsPerCell = 2;
inline constexpr int kCanvas = kCells * kPixelsPerCell;

namespace label {
inline constexpr int background = 0;
inline constexpr int skin = 1;
inline constexpr int l_brow = 2;
inline constexpr int r_brow = 3;
inline constexpr int l_eye = 4;
inline constexpr int r_eye = 5;
inline constexpr int eye_g = 6;
inline constexpr int l_ear = 7;
inline constexpr int r_ear = 8;
inline constexpr int ear_r = 9;
inline constexpr int nose = 10;
inline constexpr int mouth = 11;
inline constexpr int u_lip = 12;
inline constexpr int l_lip = 13;
inline constexpr int neck = 14;
inline constexpr int cloth = 16;
inline constexpr int hair = 17;
inline constexpr int count = 19;
}  // namespace label

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  Rgb scaled(double f) const { return {r * f, g * f, b * f}; }
  double luminance() const { return (r + g + b) / 3.0; }
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline double distance(const Rgb& a, const Rgb& b) {
  return std::sqrt((a.r - b.r) * (a.r - b.r) + (a.g - b.g) * (a.g - b.g) + (a.b - b.b) * (a.b - b.b));
}

enum class HairColor { black, brown, blonde, red, white, gray };
enum class HairTexture { plain, curly, straight };
enum class EyeColor { blue, brown, green, gray };
enum class Earrings { none, silver, pearl, gold, weak };
enum class Glasses { none, dark, weak };
enum class Expression { neutral, smiling, laughing, angry, frowning, unhappy };

template <class E>
struct EnumNames;

template <>
struct EnumNames<HairColor> {
  static constexpr std::array<std::string_view, 6> names{"black", "brown", "blonde", "red", "white", "gray"};
};
template <>
struct EnumNames<HairTexture> {
  static constexpr std::array<std::string_view, 3> names{"plain", "curly", "straight"};
};
template <>
struct EnumNames<EyeColor> {
  static constexpr std::array<std::string_view, 4> names{"blue", "brown", "green", "gray"};
};
template <>
struct EnumNames<Earrings> {
  static constexpr std::array<std::string_view, 5> names{"none", "silver", "pearl", "gold", "weak"};
};
template <>
struct EnumNames<Glasses> {
  static constexpr std::array<std::string_view, 3> names{"none", "dark", "weak"};
};
template <>
struct EnumNames<Expression> {
  static constexpr std::array<std::string_view, 6> names{"neutral", "smiling", "laughing",
                                                         "angry",   "frowning", "unhappy"};
};

template <class E>
constexpr std::string_view name_of(E value) {
  return EnumNames<E>::names[static_cast<std::size_t>(value)];
}

template <class E>
std::optional<E> parse_enum(std::string_view text) {
  const auto& names = EnumNames<E>::names;
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == text) return static_cast<E>(i);
  return std::nullopt;
}

template <class E>
constexpr std::size_t enum_size() {
  return EnumNames<E>::names.size();
}

namespace palette {
inline constexpr Rgb background{0.62, 0.68, 0.74};
inline constexpr Rgb cloth{0.22, 0.30, 0.48};
inline constexpr Rgb brows{0.28, 0.20, 0.15};
inline constexpr Rgb eye_white{0.95, 0.95, 0.95};
inline constexpr Rgb default_skin{0.88, 0.73, 0.62};
inline constexpr Rgb lip{0.72, 0.32, 0.34};
inline constexpr Rgb teeth{0.96, 0.95, 0.90};
inline constexpr Rgb mouth_dark{0.30, 0.08, 0.10};
// Mouth-box filler; kept independent of skin so expressions render identically on any face.
inline constexpr Rgb perioral{0.80, 0.60, 0.55};

inline constexpr double neck_shade = 0.93;
inline constexpr double ear_shade = 0.96;
inline constexpr double nose_shade = 0.92;
inline constexpr double mark_shade = 0.72;
inline constexpr double curly_shade = 0.78;
inline constexpr double straight_shade = 0.85;

inline Rgb hair(HairColor c) {
  switch (c) {
    case HairColor::black: return {0.08, 0.07, 0.07};
    case HairColor::brown: return {0.42, 0.26, 0.15};
    case HairColor::blonde: return {0.93, 0.80, 0.45};
    case HairColor::red: return {0.70, 0.20, 0.10};
    case HairColor::white: return {0.90, 0.90, 0.92};
    case HairColor::gray: return {0.55, 0.55, 0.55};
  }
  return {};
}

inline Rgb eyes(EyeColor c) {
  switch (c) {
    case EyeColor::blue: return {0.20, 0.40, 0.85};
    case EyeColor::brown: return {0.35, 0.20, 0.10};
    case EyeColor::green: return {0.20, 0.60, 0.30};
    case EyeColor::gray: return {0.45, 0.50, 0.52};
  }
  return {};
}

inline Rgb earrings(Earrings e) {
  switch (e) {
    case Earrings::silver: return {0.78, 0.80, 0.84};
    case Earrings::pearl: return {0.95, 0.93, 0.86};
    case Earrings::gold: return {0.85, 0.68, 0.20};
    case Earrings::weak: return {0.55, 0.50, 0.35};
    case Earrings::none: break;
  }
  return background;
}

inline Rgb glasses(Glasses g) {
  switch (g) {
    case Glasses::dark: return {0.07, 0.10, 0.13};
    case Glasses::weak: return {0.60, 0.66, 0.78};
    case Glasses::none: break;
  }
  return {};
}
}  // namespace palette

inline constexpr std::size_t kMarkCount = 8;

struct FaceLook {
  Rgb skin = palette::default_skin;
  std::array<bool, kMarkCount> marks{};
  HairColor hair = HairColor::brown;
  HairTexture texture = HairTexture::plain;
  EyeColor eyes = EyeColor::brown;
  Earrings earrings = Earrings::none;
  Glasses glasses = Glasses::none;
  Expression expression = Expression::neutral;

  friend bool operator==(const FaceLook&, const FaceLook&) = default;
};

// ---------------------------------------------------------------------------------------------
// Geometry

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

inline constexpr std::array<Cell, kMarkCount> kMarkCells{
    {{10, 17}, {12, 18}, {21, 17}, {19, 18}, {13, 9}, {18, 10}, {9, 15}, {22, 16}}};
inline constexpr std::array<Cell, 4> kEarringCells{{{8, 17}, {8, 18}, {23, 17}, {23, 18}}};
inline constexpr std::array<Cell, 4> kIrisCells{{{12, 13}, {12, 14}, {19, 13}, {19, 14}}};
inline constexpr std::array<Cell, 4> kCheekCells{{{11, 19}, {20, 19}, {10, 16}, {21, 16}}};

inline constexpr int kMouthX0 = 13, kMouthX1 = 18, kMouthY0 = 19, kMouthY1 = 22;

namespace geometry {

inline bool in_face(int x, int y) {
  const double dx = (x + 0.5 - 16.0) / 7.5;
  const double dy = (y + 0.5 - 16.0) / 9.5;
  return dx * dx + dy * dy <= 1.0;
}

inline bool in_hair_outer(int x, int y) {
  const double dx = (x + 0.5 - 16.0) / 10.5;
  const double dy = (y + 0.5 - 14.0) / 11.0;
  return dx * dx + dy * dy <= 1.0;
}

inline bool is_ear(int x, int y) { return (x == 8 || x == 23) && (y == 15 || y == 16); }

inline bool is_hair(int x, int y) {
  if (is_ear(x, y)) return false;
  if (in_face(x, y)) return y < 9;  // fringe
  return in_hair_outer(x, y) && y < 17;
}

inline bool is_neck(int x, int y) { return x >= 13 && x <= 18 && y >= 25 && y <= 27; }
inline bool is_cloth(int x, int y) { return y >= 28 && x >= 5 && x <= 26; }
inline bool is_brow(int x, int y) { return y == 11 && ((x >= 10 && x <= 13) || (x >= 18 && x <= 21)); }
inline bool is_eye(int x, int y) { return (y == 13 || y == 14) && ((x >= 11 && x <= 13) || (x >= 18 && x <= 20)); }
inline bool is_iris(int x, int y) { return (y == 13 || y == 14) && (x == 12 || x == 19); }
inline bool is_nose(int x, int y) { return (x == 15 || x == 16) && (y == 16 || y == 17); }
inline bool in_mouth_box(int x, int y) { return x >= kMouthX0 && x <= kMouthX1 && y >= kMouthY0 && y <= kMouthY1; }

inline bool is_glasses(int x, int y) {
  const bool lens = y >= 12 && y <= 15 && ((x >= 10 && x <= 14) || (x >= 17 && x <= 21));
  const bool bridge = y == 13 && (x == 15 || x == 16);
  return lens || bridge;
}

inline bool is_earring(int x, int y) {
  for (const auto& c : kEarringCells)
    if (c.x == x && c.y == y) return true;
  return false;
}

inline int mark_index(int x, int y) {
  for (std::size_t i = 0; i < kMarkCells.size(); ++i)
    if (kMarkCells[i].x == x && kMarkCells[i].y == y) return static_cast<int>(i);
  return -1;
}

/// Every cell whose appearance can depend on identity or prompt attributes.
inline bool in_head(int x, int y) {
  return in_face(x, y) || is_hair(x, y) || is_ear(x, y) || is_earring(x, y) || is_neck(x, y);
}

enum class MouthPart { none, u_lip, l_lip, teeth, dark };

inline MouthPart mouth_part(Expression e, int x, int y) {
  if (!in_mouth_box(x, y)) return MouthPart::none;
  const bool mid = x >= 14 && x <= 17;
  switch (e) {
    case Expression::neutral:
      if (mid && y == 20) return MouthPart::u_lip;
      if (mid && y == 21) return MouthPart::l_lip;
      break;
    case Expression::smiling:
      if ((x == 13 || x == 18) && y == 19) return MouthPart::u_lip;
      if (mid && y == 20) return MouthPart::u_lip;
      if (mid && y == 21) return MouthPart::l_lip;
      break;
    case Expression::laughing:
      if (mid && y == 19) return MouthPart::u_lip;
      if (mid && y == 20) return MouthPart::teeth;
      if (y == 21) return MouthPart::dark;
      if (mid && y == 22) return MouthPart::l_lip;
      break;
    case Expression::angry:
      if ((x == 15 || x == 16) && y == 20) return MouthPart::u_lip;
      if (mid && y == 21) return MouthPart::l_lip;
      break;
    case Expression::frowning:
      if (mid && y == 20) return MouthPart::u_lip;
      if (mid && y == 21) return MouthPart::l_lip;
      if ((x == 13 || x == 18) && y == 22) return MouthPart::l_lip;
      break;
    case Expression::unhappy:
      if ((x == 15 || x == 16) && y == 20) return MouthPart::u_lip;
      if (y == 21) return MouthPart::l_lip;
      break;
  }
  return MouthPart::none;
}

}  // namespace geometry

/// Cell-grid predicate for a geometric region.
using CellMask = std::array<std::array<bool, kCells>, kCells>;  // [y][x]

template <class Pred>
CellMask make_cell_mask(Pred pred) {
  CellMask m{};
  for (int y = 0; y < kCells; ++y)
    for (int x = 0; x < kCells; ++x) m[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] = pred(x, y);
  return m;
}

// ---------------------------------------------------------------------------------------------
// Rendering

inline Rgb mouth_color(geometry::MouthPart part) {
  using geometry::MouthPart;
  switch (part) {
    case MouthPart::u_lip:
    case MouthPart::l_lip: return palette::lip;
    case MouthPart::teeth: return palette::teeth;
    case MouthPart::dark: return palette::mouth_dark;
    case MouthPart::none: break;
  }
  return palette::perioral;
}

inline Rgb hair_cell_color(HairColor color, HairTexture texture, int x, int y) {
  const Rgb base = palette::hair(color);
  if (texture == HairTexture::curly && (x + y) % 2 == 0) return base.scaled(palette::curly_shade);
  if (texture == HairTexture::straight && x % 3 == 0) return base.scaled(palette::straight_shade);
  return base;
}

inline Rgb cell_color(const FaceLook& look, int x, int y) {
  namespace g = geometry;
  if (look.glasses != Glasses::none && g::is_glasses(x, y)) return palette::glasses(look.glasses);
  if (g::is_earring(x, y)) return look.earrings == Earrings::none ? palette::background : palette::earrings(look.earrings);
  if (g::is_ear(x, y)) return look.skin.scaled(palette::ear_shade);
  if (g::is_hair(x, y)) return hair_cell_color(look.hair, look.texture, x, y);
  if (g::in_face(x, y)) {
    if (g::is_brow(x, y)) return palette::brows;
    if (g::is_iris(x, y)) return palette::eyes(look.eyes);
    if (g::is_eye(x, y)) return palette::eye_white;
    if (g::is_nose(x, y)) return look.skin.scaled(palette::nose_shade);
    if (g::in_mouth_box(x, y)) return mouth_color(g::mouth_part(look.expression, x, y));
    const int mark = g::mark_index(x, y);
    if (mark >= 0 && look.marks[static_cast<std::size_t>(mark)]) return look.skin.scaled(palette::mark_shade);
    return look.skin;
  }
  if (g::is_neck(x, y)) return look.skin.scaled(palette::neck_shade);
  if (g::is_cloth(x, y)) return palette::cloth;
  return palette::background;
}

inline int cell_label(const FaceLook& look, int x, int y) {
  namespace g = geometry;
  if (look.glasses != Glasses::none && g::is_glasses(x, y)) return label::eye_g;
  if (g::is_earring(x, y)) return look.earrings == Earrings::none ? label::background : label::ear_r;
  if (g::is_ear(x, y)) return x < 16 ? label::l_ear : label::r_ear;
  if (g::is_hair(x, y)) return label::hair;
  if (g::in_face(x, y)) {
    if (g::is_brow(x, y)) return x < 16 ? label::l_brow : label::r_brow;
    if (g::is_eye(x, y)) return x < 16 ? label::l_eye : label::r_eye;
    if (g::is_nose(x, y)) return label::nose;
    switch (g::mouth_part(look.expression, x, y)) {
      case g::MouthPart::u_lip: return label::u_lip;
      case g::MouthPart::l_lip: return label::l_lip;
      case g::MouthPart::teeth:
      case g::MouthPart::dark: return label::mouth;
      case g::MouthPart::none: break;
    }
    return label::skin;
  }
  if (g::is_neck(x, y)) return label::neck;
  if (g::is_cloth(x, y)) return label::cloth;
  return label::background;
}

/// 3 x 32 x 32 cell-resolution render.
inline Image render_cells(const FaceLook& look) {
  Image img(3, kCells, kCells);
  for (int y = 0; y < kCells; ++y) {
    for (int x = 0; x < kCells; ++x) {
      const Rgb c = cell_color(look, x, y);
      const auto yy = static_cast<std::size_t>(y);
      const auto xx = static_cast<std::size_t>(x);
      img.at(0, yy, xx) = c.r;
      img.at(1, yy, xx) = c.g;
      img.at(2, yy, xx) = c.b;
    }
  }
  return img;
}

inline Image upsample_cells(const Image& cells) {
  Image img(cells.channels(), cells.height() * kPixelsPerCell, cells.width() * kPixelsPerCell);
  for (std::size_t c = 0; c < img.channels(); ++c)
    for (std::size_t y = 0; y < img.height(); ++y)
      for (std::size_t x = 0; x < img.width(); ++x) img.at(c, y, x) = cells.at(c, y / kPixelsPerCell, x / kPixelsPerCell);
  return img;
}

/// 3 x 64 x 64 canvas render.
inline Image render_face(const FaceLook& look) { return upsample_cells(render_cells(look)); }

/// Ground-truth labels at canvas resolution.
inline LabelMap render_labels(const FaceLook& look) {
  LabelMap map(kCanvas, kCanvas);
  for (std::size_t y = 0; y < kCanvas; ++y)
    for (std::size_t x = 0; x < kCanvas; ++x)
      map.at(y, x) = cell_label(look, static_cast<int>(x / kPixelsPerCell), static_cast<int>(y / kPixelsPerCell));
  return map;
}

/// Mean colour of one cell of a canvas-resolution image.
inline Rgb cell_mean(const Image& img, int x, int y) {
  require(img.channels() == 3 && img.height() == kCanvas && img.width() == kCanvas, ErrorKind::invalid_argument,
          "expected a 3x64x64 image");
  std::array<double, 3> acc{};
  for (int dy = 0; dy < kPixelsPerCell; ++dy)
    for (int dx = 0; dx < kPixelsPerCell; ++dx)
      for (std::size_t c = 0; c < 3; ++c)
        acc[c] += img.at(c, static_cast<std::size_t>(y * kPixelsPerCell + dy), static_cast<std::size_t>(x * kPixelsPerCell + dx));
  const double n = kPixelsPerCell * kPixelsPerCell;
  return {acc[0] / n, acc[1] / n, acc[2] / n};
}

// ---------------------------------------------------------------------------------------------
// Identity traits and the image-feature encoding used by the identity encoder

struct SyntheticFaceSpec {
  std::uint64_t identity_seed = 0;
  std::map<std::string, std::string> attribute_values;  // hair_color, hair_texture, eye_color, earrings, glasses, expression

  friend bool operator==(const SyntheticFaceSpec&, const SyntheticFaceSpec&) = default;
};

namespace detail {
inline double unit_uniform(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * (1.0 / 9007199254740992.0);
}
inline std::size_t pick(std::mt19937_64& engine, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(unit_uniform(engine) * static_cast<double>(n)));
}

template <class E>
E parse_value(const std::string& key, const std::string& value) {
  auto parsed = parse_enum<E>(value);
  require(parsed.has_value(), ErrorKind::invalid_argument, "unknown value '" + value + "' for attribute '" + key + "'");
  return *parsed;
}
}  // namespace detail

/// Seeded identity: skin tone, marks, hair, eyes. Identity faces are expressionless and unadorned.
inline FaceLook identity_look(std::uint64_t seed) {
  std::mt19937_64 engine(seed ^ 0x9e3779b97f4a7c15ULL);
  FaceLook look;
  const double r = 0.78 + 0.17 * detail::unit_uniform(engine);
  const double g = r - (0.12 + 0.08 * detail::unit_uniform(engine));
  const double b = g - (0.06 + 0.08 * detail::unit_uniform(engine));
  look.skin = {r, g, b};
  for (auto& m : look.marks) m = detail::unit_uniform(engine) < 0.5;
  look.hair = static_cast<HairColor>(detail::pick(engine, enum_size<HairColor>()));
  look.texture = static_cast<HairTexture>(detail::pick(engine, enum_size<HairTexture>()));
  look.eyes = static_cast<EyeColor>(detail::pick(engine, enum_size<EyeColor>()));
  return look;
}

inline FaceLook apply_attribute_values(FaceLook look, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    if (key == "hair_color") look.hair = detail::parse_value<HairColor>(key, value);
    else if (key == "hair_texture") look.texture = detail::parse_value<HairTexture>(key, value);
    else if (key == "eye_color") look.eyes = detail::parse_value<EyeColor>(key, value);
    else if (key == "earrings") look.earrings = detail::parse_value<Earrings>(key, value);
    else if (key == "glasses") look.glasses = detail::parse_value<Glasses>(key, value);
    else if (key == "expression") look.expression = detail::parse_value<Expression>(key, value);
    else fail(ErrorKind::invalid_argument, "unknown attribute '" + key + "'");
  }
  return look;
}

inline FaceLook look_for(const SyntheticFaceSpec& spec) {
  return apply_attribute_values(identity_look(spec.identity_seed), spec.attribute_values);
}

inline Image render_target(const SyntheticFaceSpec& spec) { return render_face(look_for(spec)); }

inline constexpr std::size_t kFeatureDim = 20;
using FaceFeatures = std::array<double, kFeatureDim>;

namespace detail {
inline std::vector<Cell> hair_cells() {
  std::vector<Cell> cells;
  for (int y = 0; y < kCells; ++y)
    for (int x = 0; x < kCells; ++x)
      if (geometry::is_hair(x, y)) cells.push_back({x, y});
  return cells;
}

// Mouth-box summary: upper-row luminance, lower-row luminance, mean red-green spread.
template <class ColorAt>
std::array<double, 3> mouth_summary(ColorAt color_at) {
  double upper = 0.0, lower = 0.0, spread = 0.0;
  int n_upper = 0, n_lower = 0, n = 0;
  for (int y = kMouthY0; y <= kMouthY1; ++y) {
    for (int x = kMouthX0; x <= kMouthX1; ++x) {
      const Rgb c = color_at(x, y);
      if (y <= 20) {
        upper += c.luminance();
        ++n_upper;
      } else {
        lower += c.luminance();
        ++n_lower;
      }
      spread += c.r - c.g;
      ++n;
    }
  }
  return {upper / n_upper, lower / n_lower, spread / n};
}
}  // namespace detail

/// Fixed-layout feature vector: hair mean, skin mean, iris mean, mouth summary, mark luminances.
inline FaceFeatures extract_features(const Image& img) {
  FaceFeatures f{};
  auto put = [&f](std::size_t at, const Rgb& c) {
    f[at] = c.r;
    f[at + 1] = c.g;
    f[at + 2] = c.b;
  };
  auto mean_of = [&img](const auto& cells) {
    Rgb acc;
    for (const auto& c : cells) {
      const Rgb v = cell_mean(img, c.x, c.y);
      acc.r += v.r;
      acc.g += v.g;
      acc.b += v.b;
    }
    return acc.scaled(1.0 / static_cast<double>(cells.size()));
  };
  put(0, mean_of(detail::hair_cells()));
  put(3, mean_of(kCheekCells));
  put(6, mean_of(kIrisCells));
  const auto mouth = detail::mouth_summary([&img](int x, int y) { return cell_mean(img, x, y); });
  f[9] = mouth[0];
  f[10] = mouth[1];
  f[11] = mouth[2];
  for (std::size_t i = 0; i < kMarkCount; ++i) f[12 + i] = cell_mean(img, kMarkCells[i].x, kMarkCells[i].y).luminance();
  return f;
}

/// Mean hair-zone colour of a (colour, texture) combination.
inline Rgb hair_prototype(HairColor color, HairTexture texture) {
  Rgb acc;
  const auto cells = detail::hair_cells();
  for (const auto& c : cells) {
    const Rgb v = hair_cell_color(color, texture, c.x, c.y);
    acc.r += v.r;
    acc.g += v.g;
    acc.b += v.b;
  }
  return acc.scaled(1.0 / static_cast<double>(cells.size()));
}

inline std::array<double, 3> mouth_prototype(Expression e) {
  return detail::mouth_summary([e](int x, int y) { return mouth_color(geometry::mouth_part(e, x, y)); });
}

/// Relative darkening below which a mark cell counts as marked.
inline constexpr double kMarkThreshold = 0.86;

/// Inverse of extract_features over identity-bound traits (accessories are not identity).
inline FaceLook decode_features(const FaceFeatures& f) {
  FaceLook look;
  const Rgb hair{f[0], f[1], f[2]};
  double best = 1e300;
  for (std::size_t c = 0; c < enum_size<HairColor>(); ++c) {
    for (std::size_t t = 0; t < enum_size<HairTexture>(); ++t) {
      const double d = distance(hair, hair_prototype(static_cast<HairColor>(c), static_cast<HairTexture>(t)));
      if (d < best) {
        best = d;
        look.hair = static_cast<HairColor>(c);
        look.texture = static_cast<HairTexture>(t);
      }
    }
  }
  look.skin = {f[3], f[4], f[5]};
  const Rgb iris{f[6], f[7], f[8]};
  best = 1e300;
  for (std::size_t c = 0; c < enum_size<EyeColor>(); ++c) {
    const double d = distance(iris, palette::eyes(static_cast<EyeColor>(c)));
    if (d < best) {
      best = d;
      look.eyes = static_cast<EyeColor>(c);
    }
  }
  best = 1e300;
  for (std::size_t e = 0; e < enum_size<Expression>(); ++e) {
    const auto p = mouth_prototype(static_cast<Expression>(e));
    const double d = std::abs(p[0] - f[9]) + std::abs(p[1] - f[10]) + std::abs(p[2] - f[11]);
    if (d < best) {
      best = d;
      look.expression = static_cast<Expression>(e);
    }
  }
  const double skin_lum = look.skin.luminance();
  for (std::size_t i = 0; i < kMarkCount; ++i) look.marks[i] = f[12 + i] < kMarkThreshold * skin_lum;
  return look;
}

}  // namespace freecure::analytic
