#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <vector>

#include "freecure/backend.hpp"
#include "freecure/capture.hpp"
#include "freecure/tensor.hpp"

namespace freecure {

/// Softmax over the token axis of a [heads x spatial x tokens] logit tensor.
inline Tensor softmax_tokens(const Tensor& logits) {
  require(logits.rank() == 3, ErrorKind::invalid_argument, "softmax_tokens expects [heads x spatial x tokens]");
  Tensor out(logits.shape());
  const std::size_t tokens = logits.dim(2);
  if (tokens == 0) return out;
  const std::size_t rows = logits.dim(0) * logits.dim(1);
  const auto src = logits.values();
  auto dst = out.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = src.data() + r * tokens;
    double* o = dst.data() + r * tokens;
    const double peak = *std::max_element(in, in + tokens);
    double sum = 0.0;
    for (std::size_t k = 0; k < tokens; ++k) {
      o[k] = std::exp(in[k] - peak);
      sum += o[k];
    }
    for (std::size_t k = 0; k < tokens; ++k) o[k] /= sum;
  }
  return out;
}

/// Per-record attribute map: softmax over tokens, sum of the chosen columns, mean over heads.
inline GrayMap record_token_map(const AttentionRecord& record, const std::set<std::size_t>& token_indices) {
  const std::size_t heads = record.heads();
  const std::size_t spatial = record.spatial();
  const std::size_t tokens = record.tokens();
  for (auto k : token_indices)
    require(k < tokens, ErrorKind::invalid_argument, "token index " + std::to_string(k) + " out of range");
  const Tensor probs = softmax_tokens(record.scores);
  GrayMap map(record.layer.height, record.layer.width);
  auto out = map.values();
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t s = 0; s < spatial; ++s) {
      double acc = 0.0;
      for (auto k : token_indices) acc += probs[(h * spatial + s) * tokens + k];
      out[s] += acc;
    }
  }
  for (auto& v : out) v /= static_cast<double>(heads);
  return map;
}

struct TimestepWindow {
  int high = std::numeric_limits<int>::max();
  int low = 0;

  bool contains(int t) const noexcept { return t <= high && t >= low; }
};

/// Average attention map H for a token set over the selected records, resized to `height x width`
/// and clamped to [0,1].
inline GrayMap aggregate_attribute_map(const CaptureSession& session, const std::set<std::size_t>& token_indices,
                                       std::size_t height, std::size_t width, TimestepWindow window = {},
                                       const std::set<BlockGroup>& groups = {BlockGroup::up}) {
  require(!token_indices.empty(), ErrorKind::invalid_argument, "aggregate_attribute_map: empty token selection");
  GrayMap acc(height, width);
  std::size_t used = 0;
  for (const auto& record : session.records()) {
    if (!groups.contains(record.layer.group) || !window.contains(record.timestep)) continue;
    const GrayMap resized = resize_bilinear(record_token_map(record, token_indices), height, width);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += resized[i];
    ++used;
  }
  require(used > 0, ErrorKind::no_records, "no attention records match the block-group filter and timestep window");
  for (auto& v : acc.values()) v = std::clamp(v / static_cast<double>(used), 0.0, 1.0);
  return acc;
}

/// Identity-attention interpolation on logits: column m of A_p becomes
/// alpha * A_f[:, :, n] + (1 - alpha) * A_p[:, :, m]. Softmax is applied by the consumer.
inline Tensor interpolate_identity_attention(const Tensor& personalized, const Tensor& foundation, std::size_t m,
                                             std::size_t n, double alpha) {
  require(std::isfinite(alpha) && alpha >= 0.0 && alpha <= 1.0, ErrorKind::invalid_argument, "alpha must lie in [0,1]");
  require(personalized.rank() == 3 && foundation.rank() == 3, ErrorKind::invalid_argument,
          "attention scores must be [heads x spatial x tokens]");
  require(personalized.dim(0) == foundation.dim(0) && personalized.dim(1) == foundation.dim(1),
          ErrorKind::invalid_argument, "attention score tensors differ in heads or spatial size");
  require(m < personalized.dim(2) && n < foundation.dim(2), ErrorKind::invalid_argument, "token index out of range");
  Tensor out = personalized;
  if (alpha == 0.0) return out;
  const std::size_t rows = personalized.dim(0) * personalized.dim(1);
  const std::size_t tp = personalized.dim(2);
  const std::size_t tf = foundation.dim(2);
  for (std::size_t r = 0; r < rows; ++r) {
    const double f = foundation[r * tf + n];
    out[r * tp + m] = alpha == 1.0 ? f : alpha * f + (1.0 - alpha) * personalized[r * tp + m];
  }
  return out;
}

/// Min-max normalisation to [0,1]; a constant map becomes all ones.
inline GrayMap normalize_map(const GrayMap& map) {
  require(map.size() > 0, ErrorKind::invalid_argument, "normalize_map: empty map");
  const auto v = map.values();
  require(std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }), ErrorKind::numeric,
          "normalize_map: non-finite input");
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  GrayMap out(map.height(), map.width(), 1.0);
  if (hi == lo) return out;
  const double range = hi - lo;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (v[i] - lo) / range;
  return out;
}

/// Applies the identity interpolation to PD logits using the FD logits captured at the same
/// layer and timestep.
class IdentityInterpolationEditor final : public AttentionEditor {
 public:
  IdentityInterpolationEditor(const CaptureSession& foundation_step, std::size_t m, std::size_t n, double alpha,
                              std::set<BlockGroup> groups)
      : foundation_(foundation_step), m_(m), n_(n), alpha_(alpha), groups_(std::move(groups)) {}

  void edit(const LayerInfo& layer, int timestep, Tensor& scores) const override {
    if (!groups_.contains(layer.group)) return;
    for (const auto& rec : foundation_.records()) {
      if (rec.layer.layer_id == layer.layer_id && rec.timestep == timestep) {
        scores = interpolate_identity_attention(scores, rec.scores, m_, n_, alpha_);
        return;
      }
    }
    fail(ErrorKind::invalid_state, "no foundation record for layer " + std::to_string(layer.layer_id) +
                                       " at timestep " + std::to_string(timestep));
  }

 private:
  const CaptureSession& foundation_;
  std::size_t m_;
  std::size_t n_;
  double alpha_;
  std::set<BlockGroup> groups_;
};

}  // namespace freecure
