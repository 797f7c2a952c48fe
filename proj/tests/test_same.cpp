#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace fixtures;
namespace a = freecure::analytic;

namespace {

GrayMap random_map(std::mt19937_64& rng, std::size_t h, std::size_t w, bool binary = false) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GrayMap g(h, w);
  for (auto& v : g.values()) v = binary ? (u(rng) < 0.5 ? 0.0 : 1.0) : u(rng);
  return g;
}

}  // namespace

TEST(ParseFace, LabelsMatchGeometry) {
  const a::SyntheticParser parser;
  for (std::uint64_t s = 0; s < 6; ++s) {
    const auto look = a::look_for({s, {}});
    const auto pm = parse_face(a::render_face(look), parser, {});
    EXPECT_EQ(pm.labels, a::render_labels(look)) << "seed " << s;
  }
  const Image img = a::render_target({1, {}});
  EXPECT_EQ(parse_face(img, parser, {}).labels, parse_face(img, parser, {}).labels);
}

TEST(ParseFace, EarringPixelsExact) {
  const a::SyntheticParser parser;
  const auto look = a::look_for({2, {{"earrings", "gold"}, {"glasses", "dark"}, {"expression", "laughing"}}});
  const auto labels = parse_face(a::render_face(look), parser, {}).labels;
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x) {
      const bool on = a::geometry::is_earring(static_cast<int>(x / 2), static_cast<int>(y / 2));
      EXPECT_EQ(labels.at(y, x) == a::label::ear_r, on) << x << "," << y;
    }
  EXPECT_EQ(labels, a::render_labels(look));
}

TEST(ParseFace, LabelDomainChecked) {
  const a::SyntheticParser parser;
  EXPECT_THROW(parse_face(a::render_target({0, {}}), parser, {{"hair", {99}}}), Error);
}

TEST(BinaryMask, EmptyRegionAndOracle) {
  ParsingMap pm{LabelMap(4, 4, 1), {{"earrings", {9}}}};
  const GrayMap none = binary_mask(pm, "earrings");
  for (double v : none.values()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(binary_mask(pm, "hair"), Error);

  std::mt19937_64 rng(6);
  for (int c = 0; c < 100; ++c) {
    LabelMap lm(7, 5);
    for (std::size_t y = 0; y < 7; ++y)
      for (std::size_t x = 0; x < 5; ++x) lm.at(y, x) = static_cast<int>(rng() % 19);
    const std::set<int> set{static_cast<int>(rng() % 19), static_cast<int>(rng() % 19)};
    const GrayMap m = binary_mask({lm, {{"x", set}}}, "x");
    for (std::size_t y = 0; y < 7; ++y)
      for (std::size_t x = 0; x < 5; ++x) EXPECT_EQ(m.at(y, x), set.contains(lm.at(y, x)) ? 1.0 : 0.0);
  }
}

TEST(SameMask, Examples) {
  GrayMap h(1, 3);
  h[0] = 0.0;
  h[1] = 0.8;
  h[2] = 1.0;
  const GrayMap ones(1, 3, 1.0);
  EXPECT_DOUBLE_EQ(same_mask(h, ones, ones)[1], 0.8);
  GrayMap bf = ones;
  bf[2] = 0.0;
  EXPECT_EQ(same_mask(h, ones, bf)[2], 0.0);
  EXPECT_THROW(same_mask(h, GrayMap(1, 2), ones), Error);
}

TEST(SameMask, RandomOracle) {
  std::mt19937_64 rng(7);
  for (int c = 0; c < 1000; ++c) {
    const GrayMap h = random_map(rng, 8, 8), bp = random_map(rng, 8, 8, true), bf = random_map(rng, 8, 8, true);
    const GrayMap m = same_mask(h, bp, bf);
    const auto [lo, hi] = std::minmax_element(h.values().begin(), h.values().end());
    for (std::size_t i = 0; i < 64; ++i) {
      const double n = *hi == *lo ? 1.0 : (h[i] - *lo) / (*hi - *lo);
      ASSERT_DOUBLE_EQ(m[i], n * bp[i] * bf[i]);
      ASSERT_GE(m[i], 0.0);
      ASSERT_LE(m[i], std::min(bp[i], bf[i]));
    }
  }
}

TEST(MergeMasks, Algebra) {
  std::mt19937_64 rng(8);
  const GrayMap one = random_map(rng, 5, 5);
  EXPECT_EQ(merge_masks({one}), one);
  EXPECT_THROW(merge_masks({}), Error);
  EXPECT_THROW(merge_masks({one, GrayMap(4, 4)}), Error);
  for (int c = 0; c < 1000; ++c) {
    const GrayMap x = random_map(rng, 6, 6), y = random_map(rng, 6, 6), z = random_map(rng, 6, 6);
    ASSERT_EQ(merge_masks({x, y}), merge_masks({y, x}));
    ASSERT_EQ(merge_masks({x, x}), x);
    const GrayMap m = merge_masks({x, y, z});
    for (std::size_t i = 0; i < m.size(); ++i) ASSERT_EQ(m[i], std::max({x[i], y[i], z[i]}));
  }
}

TEST(ResampleMask, CopyConstantAndOracle) {
  std::mt19937_64 rng(9);
  const GrayMap r = random_map(rng, 6, 6);
  EXPECT_EQ(resample_mask(r, 6, 6), r);
  const GrayMap flat = resample_mask(GrayMap(8, 8, 0.3), 13, 5);
  for (double v : flat.values()) EXPECT_NEAR(v, 0.3, 1e-15);
  GrayMap board(64, 64);
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x) board.at(y, x) = (x + y) % 2 ? 1.0 : 0.0;
  const GrayMap small = resample_mask(board, 32, 32);
  // Half-pixel centres: output (i,j) samples source (2i+0.5, 2j+0.5), the mean of a 2x2 block.
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t x = 0; x < 32; ++x) {
      const double want = 0.25 * (board.at(2 * y, 2 * x) + board.at(2 * y + 1, 2 * x) + board.at(2 * y, 2 * x + 1) +
                                  board.at(2 * y + 1, 2 * x + 1));
      ASSERT_NEAR(small.at(y, x), want, 1e-12);
    }
}

TEST(SamePipeline, HairMaskCoversOnlyChangedHair) {
  Rig s;
  const auto r = run_pipeline(hair_manifest(), s);
  ASSERT_TRUE(r.attention_available);
  ASSERT_TRUE(r.mask.per_attribute.contains("hair"));
  const GrayMap& m = r.mask.merged;
  std::size_t inside = 0;
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x) {
      const bool hair = a::geometry::is_hair(static_cast<int>(x / 2), static_cast<int>(y / 2));
      if (!hair) EXPECT_EQ(m.at(y, x), 0.0);
      if (m.at(y, x) > 0.0) ++inside;
    }
  EXPECT_GT(inside, 100u);
  EXPECT_EQ(r.latent_mask.height(), 32u);
}

TEST(SamePipeline, AttentionOffFallsBackToParsing) {
  Rig s;
  auto m = hair_manifest();
  m.attn_fusion = false;
  const auto r = run_pipeline(m, s);
  const auto pm_p = parse_face(r.i_p(), s.parser, {{"hair", {17}}});
  const auto pm_f = parse_face(r.i_f(), s.parser, {{"hair", {17}}});
  const GrayMap bp = binary_mask(pm_p, "hair"), bf = binary_mask(pm_f, "hair");
  for (std::size_t i = 0; i < bp.size(); ++i) EXPECT_EQ(r.mask.merged[i], bp[i] * bf[i]);
}
