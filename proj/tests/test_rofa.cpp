#include <gtest/gtest.h>

#include "support.hpp"

using namespace fixtures;
namespace a = freecure::analytic;

TEST(Plan, RoutesAndTemplate) {
  const a::AnalyticBackend b;
  const auto m = hair_laugh_manifest();
  const auto spec = encode_prompt(m.prompt, b, prompt_attributes(m)).spec;
  std::vector<AttributeRequest> req;
  for (const auto& attr : m.attributes)
    req.push_back({*spec.find_attribute(attr.id), attr.route, attr.parser_labels});
  const auto plan = make_plan(spec, req, 0.45);
  EXPECT_EQ(plan.localized_attributes, std::vector<std::string>{"hair"});
  EXPECT_EQ(plan.abstract_attributes, std::vector<std::string>{"expression"});
  EXPECT_EQ(plan.template_spec.text(), "a <S> with black curly hair,");
  EXPECT_EQ(plan.augmented_spec, spec);
  EXPECT_THROW(make_plan(spec, req, 1.5), Error);
}

TEST(Localized, EmptyListGivesPlainPd) {
  Rig s;
  const auto m = manifest_for("a <S> with black curly hair", {});
  const auto r = run_pipeline(m, s);
  EXPECT_EQ(r.i_nb(), r.i_p());
  EXPECT_EQ(r.i_out(), r.i_p());
}

TEST(Localized, HairMatchesFdRenderAndIsDeterministic) {
  Rig s;
  const auto m = hair_manifest();
  const auto r = run_pipeline(m, s);
  const auto c = conditions(m, s);
  const auto e = piecewise_error(r.i_nb(), s.backend.render_target(c.encoded.bundle), s.backend.render_target(c.fused),
                                 r.mask.merged);
  EXPECT_LE(e.inside, 2.0 / 255.0);
  EXPECT_LE(e.outside, 2.0 / 255.0);
  EXPECT_EQ(run_pipeline(m, s).i_nb(), r.i_nb());
}

TEST(Inversion, GammaZeroIsEncodedImage) {
  Rig s;
  const auto r = run_pipeline(hair_manifest(), s);
  const auto tmpl = embed_spec(r.plan.template_spec, s.backend);
  const auto z = invert_to_gamma(r.i_nb(), tmpl, 0.0, s.backend, s.sched);
  EXPECT_EQ(z.t, 0);
  EXPECT_EQ(z.z, s.backend.encode_image(r.i_nb()));
}

TEST(Inversion, DepthAndRoundTrip) {
  Rig s;
  const auto m = hair_manifest();
  const auto r = run_pipeline(m, s);
  const auto tmpl = embed_spec(r.plan.template_spec, s.backend);
  InversionStats stats;
  const auto z = invert_to_gamma(r.i_nb(), tmpl, 0.45, s.backend, s.sched, m.inversion, 1.0, &stats);
  EXPECT_EQ(z.t, 22);
  EXPECT_EQ(stats.steps, 22);
  const auto full = invert_to_gamma(r.i_nb(), tmpl, 1.0, s.backend, s.sched, m.inversion);
  const auto back = denoise_from(full, tmpl, run_config(m), s.backend, s.sched);
  EXPECT_LE(mean_squared_error(back.image.values(), r.i_nb().values()), 1e-4);
}

TEST(Inversion, RejectsFusedTemplate) {
  Rig s;
  const auto c = conditions(hair_manifest(), s);
  try {
    invert_to_gamma(a::render_target({0, {}}), c.fused, 0.5, s.backend, s.sched);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
  }
}

TEST(Abstract, NoAbstractAttributeRoundTripIsNoOp) {
  Rig s;
  const auto m = hair_manifest();
  const auto r = run_pipeline(m, s);
  const auto tmpl = embed_spec(r.plan.template_spec, s.backend);
  for (double g : {0.2, 0.45, 0.8}) {
    const auto z = invert_to_gamma(r.i_nb(), tmpl, g, s.backend, s.sched, m.inversion);
    const auto out = restore_abstract(z, embed_spec(r.plan.augmented_spec, s.backend), run_config(m), s.backend, s.sched);
    EXPECT_LE(mean_squared_error(out.image.values(), r.i_nb().values()), 1e-4) << g;
  }
}

TEST(Abstract, LaughingMouthRestored) {
  Rig s;
  const auto m = hair_laugh_manifest();
  const auto r = run_pipeline(m, s);
  auto look = a::foundation_look(a::read_prompt_text(m.prompt));
  ASSERT_EQ(look.expression, a::Expression::laughing);
  EXPECT_LE(cell_region_error(r.i_out(), a::render_face(look), a::geometry::in_mouth_box), 2.0 / 255.0);
  EXPECT_GT(cell_region_error(r.i_nb(), a::render_face(look), a::geometry::in_mouth_box), 0.1);
  EXPECT_EQ(r.inversion_step, 22);
}

TEST(Abstract, RejectsFusedConditioning) {
  Rig s;
  const auto c = conditions(hair_manifest(), s);
  EXPECT_THROW(restore_abstract(c.z_T, c.fused, RunConfig{}, s.backend, s.sched), Error);
}

TEST(Pipeline, NonInterferenceAndIdentityOutsideMouth) {
  Rig s;
  const auto m = hair_laugh_manifest();
  const auto r = run_pipeline(m, s);
  const auto band = boundary_band(r.mask.merged);
  double hair = 0.0, rest = 0.0;
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x) {
      const std::size_t i = y * 64 + x;
      const bool mouth = a::geometry::in_mouth_box(static_cast<int>(x / 2), static_cast<int>(y / 2));
      for (std::size_t c = 0; c < 3; ++c) {
        const double d = std::abs(r.i_out().at(c, y, x) - r.i_nb().at(c, y, x));
        if (r.mask.merged[i] > 0.0 && !band[i]) hair = std::max(hair, d);
        if (!mouth) rest = std::max(rest, d);
      }
    }
  EXPECT_LE(hair, 2.0 / 255.0);
  // Skin and marks outside the mouth box survive stage 3.
  EXPECT_LE(rest, 2.0 / 255.0);
}

TEST(Pipeline, StageTaggedErrors) {
  Rig s;
  auto m = hair_manifest();
  m.gamma = 2.0;
  try {
    run_pipeline(m, s);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "config");
    EXPECT_NE(std::string(e.what()).find("[stage:config]"), std::string::npos);
  }
  m = hair_manifest();
  m.prompt = "a man with black curly hair";
  try {
    run_pipeline(m, s);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "prompt");
    EXPECT_EQ(e.kind(), ErrorKind::invalid_prompt);
  }
}

TEST(Pipeline, AttentionOnlyNeedsCapture) {
  analytic::AnalyticOptions o;
  o.supports_capture = false;
  const analytic::AnalyticBackend no_capture(o);
  const a::SyntheticParser parser;
  auto m = hair_manifest();
  m.attributes[0].mask_source = MaskSource::attention_only;
  try {
    freecure_pipeline(make_request(m, reference_image(m)), no_capture, parser);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "same");
    EXPECT_EQ(e.kind(), ErrorKind::capability);
  }
}
