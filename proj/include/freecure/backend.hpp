#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "freecure/capture.hpp"
#include "freecure/conditioning.hpp"
#include "freecure/schedule.hpp"
#include "freecure/tensor.hpp"

namespace freecure {

struct BackendCapabilities {
  std::string name;
  Shape latent_shape;          // [channels, height, width]
  std::size_t image_channels = 3;
  std::size_t image_height = 0;
  std::size_t image_width = 0;
  std::size_t embedding_dim = 0;
  std::size_t token_limit = 0;
  bool supports_attention_capture = false;
  std::vector<LayerInfo> layers;  // cross-attention layers in evaluation order
};

/// Hook that may rewrite a layer's logits before the backend applies its softmax.
class AttentionEditor {
 public:
  virtual ~AttentionEditor() = default;
  virtual void edit(const LayerInfo& layer, int timestep, Tensor& scores) const = 0;
};

struct AttentionContext {
  CaptureSession* capture = nullptr;
  const AttentionEditor* editor = nullptr;

  bool active() const noexcept { return capture != nullptr || editor != nullptr; }
};

/// Contract every diffusion model adapter honours. All calls are read-only and deterministic.
class DiffusionBackend {
 public:
  virtual ~DiffusionBackend() = default;

  virtual const BackendCapabilities& capabilities() const = 0;

  virtual std::vector<Token> tokenize(std::string_view text) const = 0;
  virtual int placeholder_token_id() const = 0;
  virtual Tensor embed_tokens(std::span<const int> token_ids) const = 0;
  virtual IdentityEmbedding encode_identity(const Image& reference) const = 0;

  /// Noise estimate for z at z.t. When the context carries a capture session and the backend
  /// supports capture, one record per accepted layer is appended.
  virtual Tensor predict_noise(const LatentState& z, const ConditioningBundle& cond, const NoiseSchedule& sched,
                               const AttentionContext& attention = {}) const = 0;

  virtual Image decode_latent(const Tensor& z0) const = 0;
  virtual Tensor encode_image(const Image& image) const = 0;

  /// Conditioning for the empty prompt, used for classifier-free guidance.
  virtual ConditioningBundle unconditional() const {
    ConditioningBundle bundle;
    bundle.embeddings = embed_tokens({});
    return bundle;
  }
};

}  // namespace freecure
