#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "freecure/attention.hpp"
#include "freecure/engine.hpp"
#include "freecure/prompt.hpp"
#include "freecure/same.hpp"

namespace freecure {

enum class Route { localized, abstract_attr };

inline constexpr std::string_view to_string(Route r) { return r == Route::localized ? "localized" : "abstract"; }

inline Route parse_route(std::string_view s) {
  if (s == "localized") return Route::localized;
  if (s == "abstract") return Route::abstract_attr;
  fail(ErrorKind::invalid_argument, "unknown route '" + std::string(s) + "'");
}

/// Error raised inside a pipeline stage; the message carries the stage tag.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& inner)
      : Error(inner.kind(), "[stage:" + stage + "] " + std::string(inner.what()), Verbatim{}),
        stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

template <class F>
decltype(auto) run_stage(const std::string& stage, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  }
}

struct AttributeRequest {
  PromptAttribute attribute;
  Route route = Route::localized;
  std::set<int> parser_labels;
};

struct RofaPlan {
  std::vector<std::string> localized_attributes;
  std::vector<std::string> abstract_attributes;
  double gamma = 0.45;
  PromptSpec template_spec;
  PromptSpec augmented_spec;
};

inline RofaPlan make_plan(const PromptSpec& spec, const std::vector<AttributeRequest>& attributes, double gamma) {
  require(std::isfinite(gamma) && gamma >= 0.0 && gamma <= 1.0, ErrorKind::invalid_argument, "gamma must lie in [0,1]");
  RofaPlan plan;
  plan.gamma = gamma;
  for (const auto& a : attributes)
    (a.route == Route::localized ? plan.localized_attributes : plan.abstract_attributes).push_back(a.attribute.id);
  plan.template_spec = strip_attributes(spec, plan.abstract_attributes).spec;
  plan.augmented_spec = spec;
  return plan;
}

/// Stage 2: masked noise blending from the SAME pass's z_T; returns I_nb as the PD branch.
inline BlendedResult restore_localized(const LatentState& z_T, const ConditioningBundle& unfused,
                                       const ConditioningBundle& fused, const GrayMap& latent_mask,
                                       const RunConfig& cfg, const DiffusionBackend& backend,
                                       const NoiseSchedule& sched) {
  return run_blended_pair(z_T, unfused, unfused, fused, latent_mask, cfg, backend, sched);
}

/// Encodes I_nb and inverts it under the template prompt to t = floor(gamma * T).
inline LatentState invert_to_gamma(const Image& i_nb, const ConditioningBundle& template_cond, double gamma,
                                   const DiffusionBackend& backend, const NoiseSchedule& sched,
                                   const InversionOptions& options = {}, double guidance = 1.0,
                                   InversionStats* stats = nullptr) {
  require(!template_cond.identity_fused, ErrorKind::invalid_argument,
          "inversion must use pure text conditioning without identity embeddings");
  const int target = gamma_to_step(gamma, sched.steps());
  const LatentState z0{backend.encode_image(i_nb), 0};
  return ddim_invert(z0, template_cond, target, backend, sched, options, guidance, stats);
}

/// Stage 3: re-denoise from the inverted latent under the augmented (unfused) prompt.
inline RunResult restore_abstract(const LatentState& z_hat, const ConditioningBundle& augmented_cond,
                                  const RunConfig& cfg, const DiffusionBackend& backend, const NoiseSchedule& sched) {
  require(!augmented_cond.identity_fused, ErrorKind::invalid_argument,
          "abstract restoration must use pure text conditioning without identity embeddings");
  return denoise_from(z_hat, augmented_cond, cfg, backend, sched);
}

struct PipelineRequest {
  std::string prompt;
  std::vector<AttributeRequest> attributes;
  Image reference;
  std::string reference_ref;
  std::uint64_t seed = 0;
  int steps = 50;
  RunConfig run;
  double gamma = 0.45;
  InversionOptions inversion;
  bool attn_fusion = true;
  std::optional<TimestepWindow> window;  // defaults to [T - injection, 0]
};

struct PipelineResult {
  RofaPlan plan;
  PromptSpec spec;
  RunResult fd;
  RunResult pd;
  BlendedResult blended;
  RunResult out;  // I_out; equals the blended PD branch when no abstract attributes exist
  SameMask mask;  // image resolution
  GrayMap latent_mask;
  std::map<std::string, GrayMap> attention;  // H_i at image resolution
  bool attention_available = false;
  int inversion_step = 0;
  InversionStats inversion;

  const Image& i_f() const { return fd.image; }
  const Image& i_p() const { return pd.image; }
  const Image& i_nb() const { return blended.pd.image; }
  const Image& i_out() const { return out.image; }
};

/// SAME then ROFA from one z_T.
inline PipelineResult freecure_pipeline(const PipelineRequest& req, const DiffusionBackend& backend,
                                        const ParserAdapter& parser) {
  PipelineResult res;
  const NoiseSchedule sched = run_stage("schedule", [&] { return build_schedule(ScheduleKind::linear, req.steps); });
  run_stage("config", [&] {
    validate_config(req.run, req.steps);
    require(std::isfinite(req.gamma) && req.gamma >= 0.0 && req.gamma <= 1.0, ErrorKind::invalid_argument,
            "gamma must lie in [0,1]");
  });
  const auto& caps = backend.capabilities();

  std::vector<PromptAttribute> attrs;
  for (const auto& a : req.attributes) attrs.push_back(a.attribute);
  const EncodedPrompt encoded = run_stage("prompt", [&] { return encode_prompt(req.prompt, backend, attrs); });
  res.spec = encoded.spec;
  res.plan = run_stage("prompt", [&] { return make_plan(encoded.spec, req.attributes, req.gamma); });
  const ConditioningBundle& unfused = encoded.bundle;
  const ConditioningBundle fused = run_stage("identity", [&] {
    IdentityEmbedding id = encode_identity(req.reference, backend);
    id.source_ref = req.reference_ref;
    return fuse_identity(unfused, id);
  });

  const LatentState z_T = sample_initial_latent(req.seed, caps.latent_shape, sched);

  // Stage 1: SAME.
  run_stage("same", [&] {
    const bool capture = caps.supports_attention_capture;
    const int t_hi = req.steps - req.run.identity_injection_step;
    const TimestepWindow window = req.window.value_or(TimestepWindow{t_hi, 0});
    CaptureSession fd_capture(RunTag::fd, {BlockGroup::up}, std::make_pair(window.high, window.low));
    CaptureSession pd_capture(RunTag::pd, {BlockGroup::up}, std::make_pair(window.high, window.low));
    const AttentionContext fd_ctx{capture ? &fd_capture : nullptr, nullptr};
    const AttentionContext pd_ctx{capture ? &pd_capture : nullptr, nullptr};
    res.fd = run_fd(z_T, unfused, req.run, backend, sched, fd_ctx);
    res.pd = run_pd(z_T, unfused, fused, req.run, backend, sched, pd_ctx);
    res.attention_available = capture;

    std::map<std::string, std::set<int>> table;
    for (const auto& a : req.attributes)
      if (a.route == Route::localized && a.attribute.mask_source == MaskSource::parsing)
        table[a.attribute.id] = a.parser_labels;
    const ParsingMap pm_p = parse_face(res.pd.image, parser, table);
    const ParsingMap pm_f = parse_face(res.fd.image, parser, table);
    const std::size_t h = pm_p.labels.height();
    const std::size_t w = pm_p.labels.width();

    std::vector<GrayMap> masks;
    for (const auto& a : req.attributes) {
      if (a.route != Route::localized) continue;
      const auto& span = a.attribute.span;
      std::set<std::size_t> tokens;
      for (std::size_t k = span.begin; k < span.end; ++k) tokens.insert(k);
      GrayMap h_i(h, w, 1.0);
      if (capture) {
        h_i = aggregate_attribute_map(fd_capture, tokens, h, w, window);
        res.attention[a.attribute.id] = h_i;
      }
      if (!req.attn_fusion) h_i = GrayMap(h, w, 1.0);
      GrayMap m_i;
      if (a.attribute.mask_source == MaskSource::attention_only) {
        require(capture, ErrorKind::capability,
                "attribute '" + a.attribute.id + "' needs attention capture, which the backend lacks");
        m_i = normalize_map(h_i);
      } else {
        m_i = same_mask(h_i, binary_mask(pm_p, a.attribute.id), binary_mask(pm_f, a.attribute.id));
      }
      res.mask.per_attribute[a.attribute.id] = m_i;
      masks.push_back(std::move(m_i));
    }
    res.mask.merged = masks.empty() ? GrayMap(h, w, 0.0) : merge_masks(masks);
    res.latent_mask = resample_mask(res.mask.merged, caps.latent_shape[1], caps.latent_shape[2]);
  });

  // Stage 2: noise blending.
  res.blended = run_stage("blend", [&] {
    return restore_localized(z_T, unfused, fused, res.latent_mask, req.run, backend, sched);
  });

  // Stage 3: inversion-based restoration of abstract attributes.
  if (res.plan.abstract_attributes.empty()) {
    res.out = res.blended.pd;
    return res;
  }
  res.inversion_step = gamma_to_step(req.gamma, req.steps);
  const ConditioningBundle template_cond = embed_spec(res.plan.template_spec, backend);
  const LatentState z_hat = run_stage("inversion", [&] {
    return invert_to_gamma(res.i_nb(), template_cond, req.gamma, backend, sched, req.inversion,
                           req.run.guidance_scale, &res.inversion);
  });
  res.out = run_stage("restore", [&] {
    RunConfig cfg = req.run;
    return restore_abstract(z_hat, embed_spec(res.plan.augmented_spec, backend), cfg, backend, sched);
  });
  return res;
}

}  // namespace freecure
