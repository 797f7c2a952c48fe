#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "freecure/backend.hpp"
#include "freecure/conditioning.hpp"
#include "freecure/schedule.hpp"
#include "freecure/tensor.hpp"

namespace freecure {

enum class BlendPoint { post_cfg, pre_cfg };

inline constexpr std::string_view to_string(BlendPoint p) { return p == BlendPoint::post_cfg ? "post_cfg" : "pre_cfg"; }

inline BlendPoint parse_blend_point(std::string_view s) {
  if (s == "post_cfg") return BlendPoint::post_cfg;
  if (s == "pre_cfg") return BlendPoint::pre_cfg;
  fail(ErrorKind::invalid_argument, "unknown blend point '" + std::string(s) + "'");
}

/// Step indices count denoising steps from the start: step k moves t = T - k to T - k - 1.
struct RunConfig {
  int identity_injection_step = 10;
  std::optional<int> blend_start_step;  // defaults to identity_injection_step
  double guidance_scale = 1.0;
  BlendPoint blend_point = BlendPoint::post_cfg;
  bool keep_trajectory = false;

  int blend_start() const { return blend_start_step.value_or(identity_injection_step); }
};

inline void validate_config(const RunConfig& cfg, int steps) {
  // injection == T means the identity is never injected.
  require(cfg.identity_injection_step >= 0 && cfg.identity_injection_step <= steps, ErrorKind::invalid_argument,
          "identity_injection_step must lie in [0, T]");
  require(cfg.blend_start() >= 0 && cfg.blend_start() <= steps, ErrorKind::invalid_argument,
          "blend_start_step must lie in [0, T]");
  require(std::isfinite(cfg.guidance_scale) && cfg.guidance_scale >= 1.0, ErrorKind::invalid_argument,
          "guidance_scale must be >= 1");
}

struct RunResult {
  LatentState final_latent;
  Image image;
  std::vector<LatentState> trajectory;  // initial state first, when kept
};

/// Classifier-free guidance around the backend's empty-prompt conditioning.
inline Tensor guided_noise(const DiffusionBackend& backend, const LatentState& z, const ConditioningBundle& cond,
                           const NoiseSchedule& sched, double guidance, const AttentionContext& attention = {}) {
  Tensor eps = backend.predict_noise(z, cond, sched, attention);
  if (guidance == 1.0) return eps;
  const Tensor uncond = backend.predict_noise(z, backend.unconditional(), sched);
  auto e = eps.values();
  const auto u = uncond.values();
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = u[i] + guidance * (e[i] - u[i]);
  return eps;
}

namespace detail {

inline void require_initial(const LatentState& z_T, const NoiseSchedule& sched, const DiffusionBackend& backend) {
  require(z_T.t == sched.steps(), ErrorKind::invalid_argument, "runs start from t = T");
  require(z_T.z.shape() == backend.capabilities().latent_shape, ErrorKind::invalid_argument,
          "initial latent shape does not match the backend");
  require(z_T.z.all_finite(), ErrorKind::numeric, "initial latent is not finite");
}

using ConditionForStep = std::function<const ConditioningBundle&(int step)>;

inline RunResult denoise(LatentState state, const ConditionForStep& cond_for, const RunConfig& cfg,
                         const DiffusionBackend& backend, const NoiseSchedule& sched, const AttentionContext& attention) {
  RunResult result;
  if (cfg.keep_trajectory) result.trajectory.push_back(state);
  while (state.t > 0) {
    const int step = sched.steps() - state.t;
    const Tensor eps = guided_noise(backend, state, cond_for(step), sched, cfg.guidance_scale, attention);
    state = ddim_step(state, eps, state.t - 1, sched);
    if (cfg.keep_trajectory) result.trajectory.push_back(state);
  }
  result.image = backend.decode_latent(state.z);
  result.final_latent = std::move(state);
  return result;
}

}  // namespace detail

/// Denoises any state down to t = 0 under one conditioning.
inline RunResult denoise_from(const LatentState& state, const ConditioningBundle& cond, const RunConfig& cfg,
                              const DiffusionBackend& backend, const NoiseSchedule& sched,
                              const AttentionContext& attention = {}) {
  require(state.t >= 0 && state.t <= sched.steps(), ErrorKind::invalid_argument, "state timestep out of range");
  return detail::denoise(state, [&cond](int) -> const ConditioningBundle& { return cond; }, cfg, backend, sched,
                         attention);
}

/// Foundation denoising: pure text conditioning throughout.
inline RunResult run_fd(const LatentState& z_T, const ConditioningBundle& cond, const RunConfig& cfg,
                        const DiffusionBackend& backend, const NoiseSchedule& sched,
                        const AttentionContext& attention = {}) {
  require(!cond.identity_fused, ErrorKind::invalid_argument, "FD conditioning must not carry an identity embedding");
  validate_config(cfg, sched.steps());
  detail::require_initial(z_T, sched, backend);
  return denoise_from(z_T, cond, cfg, backend, sched, attention);
}

/// Personalized denoising: text conditioning before the injection step, identity-fused after.
inline RunResult run_pd(const LatentState& z_T, const ConditioningBundle& unfused, const ConditioningBundle& fused,
                        const RunConfig& cfg, const DiffusionBackend& backend, const NoiseSchedule& sched,
                        const AttentionContext& attention = {}) {
  require(!unfused.identity_fused, ErrorKind::invalid_argument, "PD pre-injection conditioning must be unfused");
  require(fused.identity_fused, ErrorKind::invalid_argument, "PD conditioning must be identity-fused");
  validate_config(cfg, sched.steps());
  detail::require_initial(z_T, sched, backend);
  const int inject = cfg.identity_injection_step;
  return detail::denoise(
      z_T, [&](int step) -> const ConditioningBundle& { return step < inject ? unfused : fused; }, cfg, backend, sched,
      attention);
}

struct BlendLogEntry {
  int step = 0;
  int t = 0;
  bool blended = false;
  double mask_mean = 0.0;
};

struct BlendedResult {
  RunResult pd;  // I_nb
  RunResult fd;
  std::vector<BlendLogEntry> log;
};

namespace detail {

inline void check_mask(const GrayMap& mask, const DiffusionBackend& backend) {
  const auto& shape = backend.capabilities().latent_shape;
  require(shape.size() == 3 && mask.height() == shape[1] && mask.width() == shape[2], ErrorKind::invalid_argument,
          "blend mask " + std::to_string(mask.height()) + "x" + std::to_string(mask.width()) +
              " does not match latent resolution " + shape_string(shape));
  for (double v : mask.values())
    require(std::isfinite(v) && v >= 0.0 && v <= 1.0, ErrorKind::invalid_argument, "blend mask values must lie in [0,1]");
}

// eps_p <- M * eps_f + (1 - M) * eps_p, M broadcast over channels.
inline void blend_into(Tensor& eps_p, const Tensor& eps_f, const GrayMap& mask) {
  const std::size_t plane = mask.size();
  const std::size_t channels = eps_p.size() / plane;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t s = 0; s < plane; ++s) {
      const double m = mask[s];
      const std::size_t i = c * plane + s;
      if (m == 1.0) eps_p[i] = eps_f[i];
      else if (m != 0.0) eps_p[i] = m * eps_f[i] + (1.0 - m) * eps_p[i];
    }
  }
}

}  // namespace detail

/// FD and PD advance in lockstep from one z_T. From the blend start onward the PD noise is
/// replaced by the masked blend; the FD branch never sees PD state.
inline BlendedResult run_blended_pair(const LatentState& z_T, const ConditioningBundle& cond_fd,
                                      const ConditioningBundle& pd_unfused, const ConditioningBundle& pd_fused,
                                      const GrayMap& mask, const RunConfig& cfg, const DiffusionBackend& backend,
                                      const NoiseSchedule& sched, const AttentionContext& fd_attention = {},
                                      const AttentionContext& pd_attention = {}) {
  require(!cond_fd.identity_fused, ErrorKind::invalid_argument, "FD conditioning must not carry an identity embedding");
  require(!pd_unfused.identity_fused && pd_fused.identity_fused, ErrorKind::invalid_argument,
          "PD needs an unfused and an identity-fused conditioning");
  validate_config(cfg, sched.steps());
  detail::require_initial(z_T, sched, backend);
  detail::check_mask(mask, backend);

  double mask_mean = 0.0;
  for (double v : mask.values()) mask_mean += v;
  mask_mean /= static_cast<double>(mask.size());

  BlendedResult out;
  LatentState fd = z_T;
  LatentState pd = z_T;
  if (cfg.keep_trajectory) {
    out.fd.trajectory.push_back(fd);
    out.pd.trajectory.push_back(pd);
  }
  const double g = cfg.guidance_scale;
  while (fd.t > 0) {
    const int step = sched.steps() - fd.t;
    const ConditioningBundle& pd_cond = step < cfg.identity_injection_step ? pd_unfused : pd_fused;
    const bool blend = step >= cfg.blend_start();
    Tensor eps_fd, eps_pd;
    if (blend && cfg.blend_point == BlendPoint::pre_cfg && g != 1.0) {
      const Tensor fd_c = backend.predict_noise(fd, cond_fd, sched, fd_attention);
      Tensor pd_c = backend.predict_noise(pd, pd_cond, sched, pd_attention);
      detail::blend_into(pd_c, fd_c, mask);
      const auto uncond = backend.unconditional();
      const Tensor fd_u = backend.predict_noise(fd, uncond, sched);
      const Tensor pd_u = backend.predict_noise(pd, uncond, sched);
      eps_fd = fd_c;
      eps_pd = pd_c;
      for (std::size_t i = 0; i < eps_fd.size(); ++i) {
        eps_fd[i] = fd_u[i] + g * (fd_c[i] - fd_u[i]);
        eps_pd[i] = pd_u[i] + g * (pd_c[i] - pd_u[i]);
      }
    } else {
      eps_fd = guided_noise(backend, fd, cond_fd, sched, g, fd_attention);
      eps_pd = guided_noise(backend, pd, pd_cond, sched, g, pd_attention);
      if (blend) detail::blend_into(eps_pd, eps_fd, mask);
    }
    out.log.push_back({step, fd.t, blend, blend ? mask_mean : 0.0});
    fd = ddim_step(fd, eps_fd, fd.t - 1, sched);
    pd = ddim_step(pd, eps_pd, pd.t - 1, sched);
    if (cfg.keep_trajectory) {
      out.fd.trajectory.push_back(fd);
      out.pd.trajectory.push_back(pd);
    }
  }
  out.fd.image = backend.decode_latent(fd.z);
  out.pd.image = backend.decode_latent(pd.z);
  out.fd.final_latent = std::move(fd);
  out.pd.final_latent = std::move(pd);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Inversion

struct InversionOptions {
  int max_iterations = 50;
  double tolerance = 1e-12;

  friend bool operator==(const InversionOptions&, const InversionOptions&) = default;
};

struct InversionStats {
  int steps = 0;
  int iterations = 0;
  double worst_residual = 0.0;
};

/// Inverts a clean latent up to t_target. Each step solves z_{t+1} = invert(z_t, eps(z_{t+1}))
/// by fixed-point iteration with one-step Anderson mixing, so the sampler maps z_{t+1} back
/// onto z_t instead of merely approximating it.
inline LatentState ddim_invert(const LatentState& z0, const ConditioningBundle& cond, int t_target,
                               const DiffusionBackend& backend, const NoiseSchedule& sched,
                               const InversionOptions& options = {}, double guidance = 1.0,
                               InversionStats* stats = nullptr) {
  require(t_target >= z0.t && t_target <= sched.steps(), ErrorKind::invalid_argument, "inversion target out of range");
  require(options.max_iterations >= 1 && options.tolerance > 0.0, ErrorKind::invalid_argument,
          "inversion needs max_iterations >= 1 and tolerance > 0");
  InversionStats local;
  LatentState state = z0;
  while (state.t < t_target) {
    const int next = state.t + 1;
    auto residual = [&](const Tensor& x, Tensor& fx) {
      const Tensor eps = guided_noise(backend, {x, next}, cond, sched, guidance);
      fx = ddim_invert_step(state, eps, next, sched).z;
      double worst = 0.0;
      for (std::size_t i = 0; i < fx.size(); ++i) {
        fx[i] -= x[i];
        worst = std::max(worst, std::abs(fx[i]));
      }
      return worst;
    };
    auto scale_of = [](const Tensor& x) {
      double m = 1.0;
      for (double v : x.values()) m = std::max(m, std::abs(v));
      return m;
    };

    Tensor x = ddim_invert_step(state, guided_noise(backend, state, cond, sched, guidance), next, sched).z;
    Tensor f;
    double res = residual(x, f);
    Tensor x_prev, f_prev;
    int it = 0;
    while (res > options.tolerance * scale_of(x) && it < options.max_iterations) {
      Tensor x_new = x;
      if (it == 0) {
        for (std::size_t i = 0; i < x.size(); ++i) x_new[i] = x[i] + f[i];
      } else {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double df = f[i] - f_prev[i];
          num += f[i] * df;
          den += df * df;
        }
        const double theta = den > 0.0 ? num / den : 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double dx = x[i] - x_prev[i];
          const double df = f[i] - f_prev[i];
          x_new[i] = x[i] + f[i] - theta * (dx + df);
        }
      }
      x_prev = std::move(x);
      f_prev = std::move(f);
      x = std::move(x_new);
      res = residual(x, f);
      ++it;
    }
    local.iterations += it;
    local.worst_residual = std::max(local.worst_residual, res);
    ++local.steps;
    require(x.all_finite(), ErrorKind::numeric, "inversion diverged at t = " + std::to_string(next));
    state = {std::move(x), next};
  }
  if (stats) *stats = local;
  return state;
}

}  // namespace freecure
