#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "freecure/freecure.hpp"

namespace fixtures {

using namespace freecure;
namespace fs = std::filesystem;

/// First identity seed whose hair differs from the prompt's black curly hair.
inline std::uint64_t contrasting_identity() {
  for (std::uint64_t s = 1;; ++s) {
    const auto look = analytic::identity_look(s);
    if (look.hair != analytic::HairColor::black && look.texture != analytic::HairTexture::curly) return s;
  }
}

/// Manifest for a prompt with phrase-located attributes.
inline RunManifest manifest_for(const std::string& prompt, const std::vector<CorpusAttribute>& attrs,
                                std::uint64_t seed = 11, std::uint64_t identity_seed = contrasting_identity()) {
  const analytic::AnalyticBackend backend;
  RunManifest m = corpus_manifest({prompt, attrs}, 0, backend);
  m.seed = seed;
  m.identity.synthetic->identity_seed = identity_seed;
  return m;
}

inline RunManifest hair_manifest(std::uint64_t seed = 11) {
  return manifest_for("a <S> with black curly hair", {corpus_detail::hair("black curly hair")}, seed);
}

inline RunManifest hair_laugh_manifest(std::uint64_t seed = 11) {
  return manifest_for("a <S> with black curly hair, laughing happily",
                      {corpus_detail::hair("black curly hair"), corpus_detail::expression("laughing happily")}, seed);
}

struct Rig {
  analytic::AnalyticBackend backend;
  analytic::SyntheticParser parser;
  NoiseSchedule sched = NoiseSchedule::linear(50);
};

inline PipelineResult run_pipeline(const RunManifest& m, const Rig& s) {
  return freecure_pipeline(make_request(m, reference_image(m)), s.backend, s.parser);
}

struct Conditions {
  EncodedPrompt encoded;
  ConditioningBundle fused;
  LatentState z_T;
};

inline Conditions conditions(const RunManifest& m, const Rig& s) {
  auto encoded = encode_prompt(m.prompt, s.backend, prompt_attributes(m));
  auto fused = fuse_identity(encoded.bundle, encode_identity(reference_image(m), s.backend));
  auto z = sample_initial_latent(m.seed, s.backend.capabilities().latent_shape, s.sched);
  return {std::move(encoded), std::move(fused), std::move(z)};
}

/// Pixels whose 8-neighbourhood contains both mask>0 and mask==0 pixels.
inline std::vector<bool> boundary_band(const GrayMap& mask) {
  const auto h = static_cast<int>(mask.height()), w = static_cast<int>(mask.width());
  std::vector<bool> band(mask.size(), false);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const bool in = mask.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) > 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
          if ((mask.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx)) > 0.0) != in)
            band[static_cast<std::size_t>(y * w + x)] = true;
        }
    }
  return band;
}

struct PiecewiseError {
  double inside = 0.0;   // max |img - inside_ref| over mask>0, off-band
  double outside = 0.0;  // max |img - outside_ref| over mask==0, off-band
  std::size_t inside_pixels = 0;
};

inline PiecewiseError piecewise_error(const Image& img, const Image& inside_ref, const Image& outside_ref,
                                      const GrayMap& mask) {
  const auto band = boundary_band(mask);
  PiecewiseError e;
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x) {
      const std::size_t i = y * img.width() + x;
      if (band[i]) continue;
      const bool in = mask[i] > 0.0;
      if (in) ++e.inside_pixels;
      for (std::size_t c = 0; c < img.channels(); ++c) {
        const double ref = in ? inside_ref.at(c, y, x) : outside_ref.at(c, y, x);
        double& worst = in ? e.inside : e.outside;
        worst = std::max(worst, std::abs(img.at(c, y, x) - ref));
      }
    }
  return e;
}

/// Max abs difference over the pixels of the given cells.
template <class CellPred>
double cell_region_error(const Image& a, const Image& b, CellPred pred) {
  double worst = 0.0;
  for (std::size_t y = 0; y < a.height(); ++y)
    for (std::size_t x = 0; x < a.width(); ++x) {
      if (!pred(static_cast<int>(x / analytic::kPixelsPerCell), static_cast<int>(y / analytic::kPixelsPerCell)))
        continue;
      for (std::size_t c = 0; c < a.channels(); ++c) worst = std::max(worst, std::abs(a.at(c, y, x) - b.at(c, y, x)));
    }
  return worst;
}

inline fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("freecure_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

/// FNV-1a over (relative path, bytes) of every file, in sorted path order.
inline std::uint64_t tree_hash(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
  std::sort(files.begin(), files.end());
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ull;
  };
  for (const auto& f : files) {
    for (char c : f.generic_string()) mix(static_cast<unsigned char>(c));
    mix(0);
    for (unsigned char c : io::read_bytes(root / f)) mix(c);
  }
  return h;
}

inline fs::path demo_manifest_path() { return fs::path(FREECURE_SOURCE_DIR) / "data" / "demo_manifest.json"; }

}  // namespace fixtures
