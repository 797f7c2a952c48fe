#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "freecure/errors.hpp"
#include "freecure/tensor.hpp"

namespace freecure {

enum class ScheduleKind { linear };

/// Discrete variance schedule. State index t runs over [0, T]; t = 0 is the clean
/// endpoint (alpha_bar = 1) and t >= 1 reads alpha_bar[t - 1].
class NoiseSchedule {
 public:
  static NoiseSchedule linear(int steps, double beta_start = 1e-4, double beta_end = 0.02) {
    require(steps >= 1, ErrorKind::invalid_argument, "schedule step count must be >= 1");
    std::vector<double> beta(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) {
      const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
      beta[static_cast<std::size_t>(i)] = beta_start + (beta_end - beta_start) * frac;
    }
    return from_beta(std::move(beta));
  }

  static NoiseSchedule from_beta(std::vector<double> beta) {
    require(!beta.empty(), ErrorKind::invalid_argument, "schedule needs at least one step");
    std::vector<double> alpha_bar(beta.size());
    double running = 1.0;
    for (std::size_t i = 0; i < beta.size(); ++i) {
      require(std::isfinite(beta[i]) && beta[i] > 0.0 && beta[i] < 1.0, ErrorKind::invalid_argument,
              "beta entries must lie in (0,1)");
      running *= 1.0 - beta[i];
      alpha_bar[i] = running;
    }
    return NoiseSchedule(std::move(beta), std::move(alpha_bar));
  }

  /// Builds a schedule from explicit cumulative products (strictly decreasing, in (0,1]).
  static NoiseSchedule from_alpha_bar(std::vector<double> alpha_bar) {
    require(!alpha_bar.empty(), ErrorKind::invalid_argument, "schedule needs at least one step");
    std::vector<double> beta(alpha_bar.size());
    double previous = 1.0;
    for (std::size_t i = 0; i < alpha_bar.size(); ++i) {
      const double a = alpha_bar[i];
      require(std::isfinite(a) && a > 0.0 && a <= 1.0, ErrorKind::invalid_argument, "alpha_bar entries must lie in (0,1]");
      require(i == 0 || a < previous, ErrorKind::invalid_argument, "alpha_bar must be strictly decreasing");
      beta[i] = 1.0 - a / previous;
      previous = a;
    }
    return NoiseSchedule(std::move(beta), std::move(alpha_bar));
  }

  int steps() const noexcept { return static_cast<int>(alpha_bar_.size()); }
  const std::vector<double>& beta() const noexcept { return beta_; }
  const std::vector<double>& alpha_bar() const noexcept { return alpha_bar_; }

  double alpha_bar_at(int t) const {
    require(t >= 0 && t <= steps(), ErrorKind::invalid_argument, "timestep " + std::to_string(t) + " out of range");
    return t == 0 ? 1.0 : alpha_bar_[static_cast<std::size_t>(t - 1)];
  }

 private:
  NoiseSchedule(std::vector<double> beta, std::vector<double> alpha_bar)
      : beta_(std::move(beta)), alpha_bar_(std::move(alpha_bar)) {}

  std::vector<double> beta_;
  std::vector<double> alpha_bar_;
};

inline NoiseSchedule build_schedule(ScheduleKind kind, int steps) {
  switch (kind) {
    case ScheduleKind::linear: return NoiseSchedule::linear(steps);
  }
  fail(ErrorKind::invalid_argument, "unknown schedule kind");
}

struct LatentState {
  Tensor z;
  int t = 0;

  friend bool operator==(const LatentState&, const LatentState&) = default;
};

namespace detail {

inline void check_step_inputs(const LatentState& state, const Tensor& eps, int t_next, const NoiseSchedule& sched) {
  require(eps.shape() == state.z.shape(), ErrorKind::invalid_argument,
          "noise shape " + shape_string(eps.shape()) + " does not match latent " + shape_string(state.z.shape()));
  require(state.t >= 0 && state.t <= sched.steps(), ErrorKind::invalid_argument, "current timestep out of range");
  require(t_next >= 0 && t_next <= sched.steps(), ErrorKind::invalid_argument, "target timestep out of range");
  require(eps.all_finite(), ErrorKind::numeric, "noise estimate contains non-finite values");
}

inline LatentState ddim_transfer(const LatentState& state, const Tensor& eps, int t_next, const NoiseSchedule& sched) {
  if (t_next == state.t) return state;
  const double a_now = sched.alpha_bar_at(state.t);
  const double a_next = sched.alpha_bar_at(t_next);
  const double sqrt_a_now = std::sqrt(a_now);
  const double sigma_now = std::sqrt(1.0 - a_now);
  const double sqrt_a_next = std::sqrt(a_next);
  const double sigma_next = std::sqrt(1.0 - a_next);

  LatentState out{Tensor(state.z.shape()), t_next};
  auto dst = out.z.values();
  const auto z = state.z.values();
  const auto e = eps.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double x0 = (z[i] - sigma_now * e[i]) / sqrt_a_now;
    dst[i] = sqrt_a_next * x0 + sigma_next * e[i];
  }
  return out;
}

}  // namespace detail

/// Deterministic (eta = 0) DDIM update toward smaller t.
inline LatentState ddim_step(const LatentState& state, const Tensor& eps, int t_next, const NoiseSchedule& sched) {
  detail::check_step_inputs(state, eps, t_next, sched);
  require(t_next <= state.t, ErrorKind::invalid_argument, "ddim_step moves toward smaller timesteps");
  return detail::ddim_transfer(state, eps, t_next, sched);
}

/// Same update run toward larger t (DDIM inversion).
inline LatentState ddim_invert_step(const LatentState& state, const Tensor& eps, int t_next, const NoiseSchedule& sched) {
  detail::check_step_inputs(state, eps, t_next, sched);
  require(t_next >= state.t, ErrorKind::invalid_argument, "ddim_invert_step moves toward larger timesteps");
  return detail::ddim_transfer(state, eps, t_next, sched);
}

/// Standard-normal latent at t = T. Box-Muller over mt19937_64 keeps the stream identical
/// across standard library implementations.
inline LatentState sample_initial_latent(std::uint64_t seed, const Shape& shape, const NoiseSchedule& sched) {
  require(!shape.empty() && element_count(shape) > 0, ErrorKind::invalid_argument, "latent shape must be non-empty");
  std::mt19937_64 engine(seed);
  auto uniform = [&engine] {
    // 53-bit mantissa in (0, 1].
    return (static_cast<double>(engine() >> 11) + 1.0) * (1.0 / 9007199254740992.0);
  };
  Tensor z(shape);
  auto v = z.values();
  for (std::size_t i = 0; i < v.size(); i += 2) {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    v[i] = r * std::cos(theta);
    if (i + 1 < v.size()) v[i + 1] = r * std::sin(theta);
  }
  return {std::move(z), sched.steps()};
}

/// Inversion depth for a schedule fraction: floor(gamma * T).
inline int gamma_to_step(double gamma, int steps) {
  require(std::isfinite(gamma) && gamma >= 0.0 && gamma <= 1.0, ErrorKind::invalid_argument, "gamma must lie in [0,1]");
  // The epsilon absorbs representation error in products such as 0.3 * 50.
  return static_cast<int>(std::floor(gamma * static_cast<double>(steps) + 1e-9));
}

}  // namespace freecure
