#pragma once

#include <set>
#include <utility>
#include <vector>

#include "freecure/attention.hpp"
#include "freecure/engine.hpp"

namespace freecure {

struct SweepEntry {
  double alpha = 0.0;
  RunResult pd;
  GrayMap identity_map;  // placeholder attention of the edited PD run, up blocks
};

struct SweepResult {
  RunResult fd;
  std::vector<SweepEntry> entries;
};

/// One PD run per alpha with the identity column of the selected block groups interpolated
/// toward the FD run's placeholder column at the same layer and timestep.
inline SweepResult run_interpolation_sweep(const LatentState& z_T, const ConditioningBundle& unfused,
                                           const ConditioningBundle& fused, const std::vector<double>& alphas,
                                           const std::set<BlockGroup>& groups, const RunConfig& cfg,
                                           const DiffusionBackend& backend, const NoiseSchedule& sched) {
  require(backend.capabilities().supports_attention_capture, ErrorKind::capability,
          "backend '" + backend.capabilities().name + "' does not expose cross-attention");
  require(!groups.empty(), ErrorKind::invalid_argument, "sweep needs at least one block group");
  for (double a : alphas)
    require(std::isfinite(a) && a >= 0.0 && a <= 1.0, ErrorKind::invalid_argument, "alpha must lie in [0,1]");

  SweepResult out;
  CaptureSession fd_capture(RunTag::fd, {BlockGroup::down, BlockGroup::mid, BlockGroup::up});
  out.fd = run_fd(z_T, unfused, cfg, backend, sched, {&fd_capture, nullptr});
  const std::size_t m = fused.placeholder_index;
  const std::size_t n = unfused.placeholder_index;
  const auto& caps = backend.capabilities();
  for (double alpha : alphas) {
    IdentityInterpolationEditor editor(fd_capture, m, n, alpha, groups);
    CaptureSession pd_capture(RunTag::pd, {BlockGroup::up});
    SweepEntry entry;
    entry.alpha = alpha;
    entry.pd = run_pd(z_T, unfused, fused, cfg, backend, sched, {&pd_capture, &editor});
    entry.identity_map = aggregate_attribute_map(pd_capture, {m}, caps.image_height, caps.image_width);
    out.entries.push_back(std::move(entry));
  }
  return out;
}

}  // namespace freecure
