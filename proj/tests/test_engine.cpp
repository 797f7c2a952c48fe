#include <gtest/gtest.h>

#include "support.hpp"

using namespace fixtures;

namespace {

struct Fixture {
  Rig s;
  RunManifest m = hair_manifest();
  Conditions c = conditions(m, s);
  RunConfig cfg = run_config(m);
};

// Hand-chained sampler: one DDIM step per t with the conditioning selected by step index.
std::vector<LatentState> chain(const Fixture& f, int inject) {
  std::vector<LatentState> out{f.c.z_T};
  LatentState z = f.c.z_T;
  for (int step = 0; z.t > 0; ++step) {
    const auto& cond = step < inject ? f.c.encoded.bundle : f.c.fused;
    z = ddim_step(z, f.s.backend.predict_noise(z, cond, f.s.sched), z.t - 1, f.s.sched);
    out.push_back(z);
  }
  return out;
}

}  // namespace

TEST(RunFd, HairFollowsPromptAndIsDeterministic) {
  Fixture f;
  const auto a = run_fd(f.c.z_T, f.c.encoded.bundle, f.cfg, f.s.backend, f.s.sched);
  const auto b = run_fd(f.c.z_T, f.c.encoded.bundle, f.cfg, f.s.backend, f.s.sched);
  EXPECT_EQ(a.image, b.image);
  analytic::FaceLook black;
  black.hair = analytic::HairColor::black;
  black.texture = analytic::HairTexture::curly;
  EXPECT_LE(cell_region_error(a.image, analytic::render_face(black), analytic::geometry::is_hair), 1.0 / 255.0);
}

TEST(RunFd, RejectsFusedConditioning) {
  Fixture f;
  try {
    run_fd(f.c.z_T, f.c.fused, f.cfg, f.s.backend, f.s.sched);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
  }
}

TEST(RunPd, NeverInjectingEqualsFd) {
  Fixture f;
  f.cfg.identity_injection_step = 50;
  EXPECT_EQ(run_pd(f.c.z_T, f.c.encoded.bundle, f.c.fused, f.cfg, f.s.backend, f.s.sched).image,
            run_fd(f.c.z_T, f.c.encoded.bundle, f.cfg, f.s.backend, f.s.sched).image);
}

TEST(RunPd, ErodedHairShowsIdentity) {
  Fixture f;
  const auto pd = run_pd(f.c.z_T, f.c.encoded.bundle, f.c.fused, f.cfg, f.s.backend, f.s.sched);
  auto id = analytic::identity_look(f.m.identity.synthetic->identity_seed);
  analytic::FaceLook hair_only;
  hair_only.hair = id.hair;
  hair_only.texture = id.texture;
  EXPECT_LE(cell_region_error(pd.image, analytic::render_face(hair_only), analytic::geometry::is_hair), 1.0 / 255.0);
  EXPECT_LE(max_abs_diff(pd.image.values(), f.s.backend.render_target(f.c.fused).values()), 1.0 / 255.0);
}

TEST(RunPd, InjectionStepTrajectoriesMatchManualChain) {
  Fixture f;
  f.cfg.keep_trajectory = true;
  for (int inject : {0, 10}) {
    f.cfg.identity_injection_step = inject;
    const auto r = run_pd(f.c.z_T, f.c.encoded.bundle, f.c.fused, f.cfg, f.s.backend, f.s.sched);
    const auto manual = chain(f, inject);
    ASSERT_EQ(r.trajectory.size(), manual.size());
    for (std::size_t i = 0; i < manual.size(); ++i) ASSERT_EQ(r.trajectory[i], manual[i]) << "inject " << inject;
    EXPECT_LE(max_abs_diff(r.image.values(), f.s.backend.render_target(f.c.fused).values()), 1.0 / 255.0);
  }
  const auto a = chain(f, 0), b = chain(f, 10);
  EXPECT_NE(a[5], b[5]);
}

TEST(RunPd, RejectsUnfusedSecondBundle) {
  Fixture f;
  EXPECT_THROW(run_pd(f.c.z_T, f.c.encoded.bundle, f.c.encoded.bundle, f.cfg, f.s.backend, f.s.sched), Error);
}

TEST(Blend, DegenerateMasks) {
  Fixture f;
  for (std::uint64_t seed : {0u, 5u}) {
    f.c.z_T = sample_initial_latent(seed, f.s.backend.capabilities().latent_shape, f.s.sched);
    const auto pd = run_pd(f.c.z_T, f.c.encoded.bundle, f.c.fused, f.cfg, f.s.backend, f.s.sched);
    const auto fd = run_fd(f.c.z_T, f.c.encoded.bundle, f.cfg, f.s.backend, f.s.sched);
    const auto z = run_blended_pair(f.c.z_T, f.c.encoded.bundle, f.c.encoded.bundle, f.c.fused, GrayMap(32, 32, 0.0),
                                    f.cfg, f.s.backend, f.s.sched);
    const auto o = run_blended_pair(f.c.z_T, f.c.encoded.bundle, f.c.encoded.bundle, f.c.fused, GrayMap(32, 32, 1.0),
                                    f.cfg, f.s.backend, f.s.sched);
    EXPECT_EQ(z.pd.image, pd.image);
    EXPECT_EQ(o.pd.image, fd.image);
    EXPECT_EQ(z.fd.image, fd.image);
  }
}

TEST(Blend, MaskResolutionChecked) {
  Fixture f;
  try {
    run_blended_pair(f.c.z_T, f.c.encoded.bundle, f.c.encoded.bundle, f.c.fused, GrayMap(64, 64, 0.0), f.cfg,
                     f.s.backend, f.s.sched);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
  }
}

TEST(Blend, HairMaskIsPiecewise) {
  Fixture f;
  // Hair cells from the geometry, dilation-free, at latent resolution.
  GrayMap latent(32, 32);
  GrayMap image(64, 64);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      if (analytic::geometry::is_hair(x, y)) {
        latent.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = 1.0;
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t dx = 0; dx < 2; ++dx) image.at(2 * y + dy, 2 * x + dx) = 1.0;
      }
  const auto r = run_blended_pair(f.c.z_T, f.c.encoded.bundle, f.c.encoded.bundle, f.c.fused, latent, f.cfg,
                                  f.s.backend, f.s.sched);
  const auto e = piecewise_error(r.pd.image, f.s.backend.render_target(f.c.encoded.bundle),
                                 f.s.backend.render_target(f.c.fused), image);
  EXPECT_GT(e.inside_pixels, 100u);
  EXPECT_LE(e.inside, 2.0 / 255.0);
  EXPECT_LE(e.outside, 2.0 / 255.0);
}

TEST(Blend, LogMarksBlendedSteps) {
  Fixture f;
  const auto r = run_blended_pair(f.c.z_T, f.c.encoded.bundle, f.c.encoded.bundle, f.c.fused, GrayMap(32, 32, 0.5),
                                  f.cfg, f.s.backend, f.s.sched);
  ASSERT_EQ(r.log.size(), 50u);
  for (const auto& e : r.log) EXPECT_EQ(e.blended, e.step >= f.cfg.blend_start());
}

TEST(Config, Validation) {
  Fixture f;
  f.cfg.identity_injection_step = 51;
  EXPECT_THROW(run_pd(f.c.z_T, f.c.encoded.bundle, f.c.fused, f.cfg, f.s.backend, f.s.sched), Error);
  f.cfg.identity_injection_step = 10;
  f.cfg.guidance_scale = 0.5;
  EXPECT_THROW(run_fd(f.c.z_T, f.c.encoded.bundle, f.cfg, f.s.backend, f.s.sched), Error);
}

TEST(Guidance, PreAndPostCfgAgreeAtUnitScale) {
  Fixture f;
  const GrayMap mask(32, 32, 0.5);
  f.cfg.blend_point = BlendPoint::pre_cfg;
  const auto pre = run_blended_pair(f.c.z_T, f.c.encoded.bundle, f.c.encoded.bundle, f.c.fused, mask, f.cfg,
                                    f.s.backend, f.s.sched);
  f.cfg.blend_point = BlendPoint::post_cfg;
  const auto post = run_blended_pair(f.c.z_T, f.c.encoded.bundle, f.c.encoded.bundle, f.c.fused, mask, f.cfg,
                                     f.s.backend, f.s.sched);
  EXPECT_LE(max_abs_diff(pre.pd.image.values(), post.pd.image.values()), 1e-12);
}
