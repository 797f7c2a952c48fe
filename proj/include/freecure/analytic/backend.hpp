#pragma once

// Closed-form diffusion backend. The denoiser is the exact posterior mean for a Gaussian
// prior centred on the conditioning's render, so every trajectory has a known fixed point.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "freecure/analytic/face.hpp"
#include "freecure/analytic/vocabulary.hpp"
#include "freecure/attention.hpp"
#include "freecure/backend.hpp"

namespace freecure::analytic {

struct AnalyticOptions {
  double prior_spread = 1e-3;        // std-dev of the clean-latent prior around the render
  double attribute_logit = 8.0;      // attribute token logit inside its region
  double placeholder_logit = 2.0;    // unfused placeholder logit over the face
  double fused_attenuation = 0.3;    // factor applied to every other token under a fused identity
  bool supports_capture = true;
  std::uint64_t projector_seed = 7;

  friend bool operator==(const AnalyticOptions&, const AnalyticOptions&) = default;
};

/// What the backend reads out of a conditioning bundle.
struct ConditionView {
  PromptReading reading;
  std::optional<FaceLook> identity;  // set when the placeholder row carries an identity
  std::size_t placeholder_index = 0;
  std::size_t tokens = 0;
};

class AnalyticBackend final : public DiffusionBackend {
 public:
  static constexpr std::size_t kLatentChannels = 4;
  static constexpr std::size_t kHeads = 2;

  explicit AnalyticBackend(AnalyticOptions options = {}) : options_(options) {
    require(options_.prior_spread >= 0.0 && std::isfinite(options_.prior_spread), ErrorKind::invalid_argument,
            "prior_spread must be finite and >= 0");
    require(options_.fused_attenuation > 0.0 && options_.fused_attenuation < 1.0, ErrorKind::invalid_argument,
            "fused_attenuation must lie in (0,1)");
    caps_.name = "analytic";
    caps_.latent_shape = {kLatentChannels, kCells, kCells};
    caps_.image_channels = 3;
    caps_.image_height = kCanvas;
    caps_.image_width = kCanvas;
    caps_.embedding_dim = kEmbeddingDim;
    caps_.token_limit = 77;
    caps_.supports_attention_capture = options_.supports_capture;
    caps_.layers = {
        {BlockGroup::down, 0, 32, 32, kHeads}, {BlockGroup::down, 1, 16, 16, kHeads}, {BlockGroup::mid, 2, 8, 8, kHeads},
        {BlockGroup::up, 3, 16, 16, kHeads},   {BlockGroup::up, 4, 32, 32, kHeads},
    };

    vocab_ids_.push_back(kPlaceholderId);
    for (std::size_t i = 0; i < kVocabulary.size(); ++i) vocab_ids_.push_back(kFirstWordId + static_cast<int>(i));
    for (int id : vocab_ids_) vocab_vectors_.push_back(token_vector(id));

    build_projector();
    for (std::size_t res : {32u, 16u, 8u}) build_regions(res);
  }

  const AnalyticOptions& options() const noexcept { return options_; }
  const BackendCapabilities& capabilities() const override { return caps_; }

  std::vector<Token> tokenize(std::string_view text) const override { return tokenize_words(text); }
  int placeholder_token_id() const override { return kPlaceholderId; }

  Tensor embed_tokens(std::span<const int> ids) const override {
    Tensor out({ids.size(), kEmbeddingDim});
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto v = token_vector(ids[i]);
      std::copy(v.begin(), v.end(), out.values().begin() + static_cast<std::ptrdiff_t>(i * kEmbeddingDim));
    }
    return out;
  }

  IdentityEmbedding encode_identity(const Image& reference) const override {
    require(reference.channels() == 3 && reference.height() == kCanvas && reference.width() == kCanvas,
            ErrorKind::invalid_argument, "analytic identity encoder expects a 3x64x64 image");
    return {project(extract_features(reference)), "analytic-features"};
  }

  /// Projector P(f) = W f + b with orthonormal columns in W.
  std::vector<double> project(const FaceFeatures& f) const {
    std::vector<double> v(bias_);
    for (std::size_t r = 0; r < kEmbeddingDim; ++r)
      for (std::size_t c = 0; c < kFeatureDim; ++c) v[r] += projector_[r][c] * f[c];
    return v;
  }

  FaceFeatures unproject(std::span<const double> v) const {
    FaceFeatures f{};
    for (std::size_t c = 0; c < kFeatureDim; ++c)
      for (std::size_t r = 0; r < kEmbeddingDim; ++r) f[c] += projector_[r][c] * (v[r] - bias_[r]);
    return f;
  }

  const std::vector<double>& projector_bias() const noexcept { return bias_; }

  ConditionView interpret(const ConditioningBundle& cond) const {
    require(cond.token_count() == 0 || cond.dim() == kEmbeddingDim, ErrorKind::invalid_argument,
            "conditioning embedding dim " + std::to_string(cond.dim()) + " != " + std::to_string(kEmbeddingDim));
    ConditionView view;
    view.tokens = cond.token_count();
    view.placeholder_index = cond.placeholder_index;
    std::vector<std::optional<std::string_view>> words(view.tokens);
    const auto rows = cond.embeddings.values();
    for (std::size_t i = 0; i < view.tokens; ++i) {
      const auto row = rows.subspan(i * kEmbeddingDim, kEmbeddingDim);
      if (cond.identity_fused && i == cond.placeholder_index) {
        words[i] = std::string_view("<S>");
        view.identity = decode_features(unproject(row));
        continue;
      }
      for (std::size_t k = 0; k < vocab_ids_.size(); ++k) {
        if (std::memcmp(row.data(), vocab_vectors_[k].data(), kEmbeddingDim * sizeof(double)) == 0) {
          words[i] = id_word(vocab_ids_[k]);
          break;
        }
      }
    }
    view.reading = read_prompt(words);
    return view;
  }

  FaceLook foundation(const ConditionView& view) const { return foundation_look(view.reading); }
  FaceLook personalized(const ConditionView& view) const {
    return view.identity ? eroded_look(view.reading, *view.identity) : foundation(view);
  }

  /// Clean image the conditioning pins down (identity-fused bundles render the eroded look).
  Image render_target(const ConditioningBundle& cond) const {
    const auto view = interpret(cond);
    return render_face(personalized(view));
  }

  /// Pre-softmax logits of one layer for the given conditioning, before any editor runs.
  Tensor layer_logits(const ConditionView& view, const LayerInfo& layer) const {
    return build_logits(view, layer, view.identity.has_value());
  }

  /// Token-axis attention column for a token, averaged over heads, at the layer's resolution.
  GrayMap synth_attention(const ConditioningBundle& cond, std::size_t token_index, std::size_t layer_index) const {
    require(layer_index < caps_.layers.size(), ErrorKind::invalid_argument, "layer index out of range");
    const auto view = interpret(cond);
    require(token_index < view.tokens, ErrorKind::invalid_argument, "token index out of range");
    const auto& layer = caps_.layers[layer_index];
    AttentionRecord rec{layer, 0, layer_logits(view, layer)};
    return record_token_map(rec, {token_index});
  }

  Tensor predict_noise(const LatentState& z, const ConditioningBundle& cond, const NoiseSchedule& sched,
                       const AttentionContext& attention = {}) const override {
    require(z.z.shape() == caps_.latent_shape, ErrorKind::invalid_argument,
            "latent shape " + shape_string(z.z.shape()) + " != " + shape_string(caps_.latent_shape));
    require(z.t >= 0 && z.t <= sched.steps(), ErrorKind::invalid_argument, "timestep out of range");
    const auto x0 = target_latent(cond, z.t, attention);
    Tensor eps(z.z.shape());
    if (z.t == 0) return eps;
    const double a = sched.alpha_bar_at(z.t);
    const double sa = std::sqrt(a);
    const double so = std::sqrt(1.0 - a);
    const double s2 = options_.prior_spread * options_.prior_spread;
    const double w = a * s2 / (a * s2 + 1.0 - a);
    const auto zv = z.z.values();
    auto ev = eps.values();
    for (std::size_t i = 0; i < ev.size(); ++i) {
      const double mean = x0[i] + w * (zv[i] / sa - x0[i]);
      ev[i] = (zv[i] - sa * mean) / so;
    }
    return eps;
  }

  /// Prior centre for this call: foundation and personalized renders mixed by the identity
  /// influence read off the up-block placeholder attention.
  Tensor target_latent(const ConditioningBundle& cond, int t, const AttentionContext& attention = {}) const {
    const auto view = interpret(cond);
    const bool fused = view.identity.has_value();
    const bool capture = attention.capture != nullptr && caps_.supports_attention_capture;
    std::array<double, kCells * kCells> kappa{};
    std::size_t kappa_layers = 0;

    if (view.tokens > 0) {
      for (const auto& layer : caps_.layers) {
        const bool wants_capture = capture && attention.capture->accepts(layer.group, t);
        const bool wants_kappa = fused && layer.group == BlockGroup::up;
        if (!wants_capture && !wants_kappa && attention.editor == nullptr) continue;
        Tensor logits = build_logits(view, layer, fused);
        const Tensor unedited = wants_kappa ? logits : Tensor();
        if (attention.editor != nullptr) attention.editor->edit(layer, t, logits);
        if (wants_kappa) {
          accumulate_kappa(view, layer, unedited, logits, kappa);
          ++kappa_layers;
        }
        if (wants_capture) attention.capture->append({layer, t, std::move(logits)});
      }
    }

    const Tensor r_u = encode_image(render_face(foundation(view)));
    if (!fused) return r_u;
    const Tensor r_f = encode_image(render_face(personalized(view)));
    Tensor out(r_u.shape());
    const std::size_t plane = kCells * kCells;
    for (std::size_t s = 0; s < plane; ++s) {
      const double k = kappa_layers ? kappa[s] / static_cast<double>(kappa_layers) : 1.0;
      for (std::size_t c = 0; c < kLatentChannels; ++c) {
        const std::size_t i = c * plane + s;
        if (k == 1.0) out[i] = r_f[i];
        else if (k == 0.0) out[i] = r_u[i];
        else out[i] = (1.0 - k) * r_u[i] + k * r_f[i];
      }
    }
    return out;
  }

  Image decode_latent(const Tensor& z0) const override {
    require(z0.shape() == caps_.latent_shape, ErrorKind::invalid_argument,
            "decode_latent: latent shape " + shape_string(z0.shape()) + " != " + shape_string(caps_.latent_shape));
    Image img(3, kCanvas, kCanvas);
    const std::size_t plane = kCells * kCells;
    for (std::size_t y = 0; y < kCanvas; ++y) {
      for (std::size_t x = 0; x < kCanvas; ++x) {
        const std::size_t s = (y / 2) * kCells + x / 2;
        const double sign = block_sign(y % 2, x % 2);
        for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = 0.5 + 0.5 * (z0[c * plane + s] + sign * z0[3 * plane + s]);
      }
    }
    return img;
  }

  Tensor encode_image(const Image& image) const override {
    require(image.channels() == 3 && image.height() == kCanvas && image.width() == kCanvas,
            ErrorKind::invalid_argument, "encode_image expects a 3x64x64 image");
    Tensor z(caps_.latent_shape);
    const std::size_t plane = kCells * kCells;
    for (std::size_t by = 0; by < kCells; ++by) {
      for (std::size_t bx = 0; bx < kCells; ++bx) {
        const std::size_t s = by * kCells + bx;
        double detail = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
          double mean = 0.0;
          for (std::size_t dy = 0; dy < 2; ++dy) {
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const double v = 2.0 * image.at(c, 2 * by + dy, 2 * bx + dx) - 1.0;
              mean += v;
              detail += block_sign(dy, dx) * v;
            }
          }
          z[c * plane + s] = mean / 4.0;
        }
        z[3 * plane + s] = detail / 12.0;
      }
    }
    return z;
  }

  /// Layer-resolution region mask (dilated by one cell) for a role.
  const std::vector<bool>& region(Role role, std::size_t resolution) const {
    for (const auto& r : regions_)
      if (r.role == role && r.resolution == resolution) return r.cells;
    fail(ErrorKind::invalid_argument, "no region for resolution " + std::to_string(resolution));
  }
  const std::vector<bool>& head_region(std::size_t resolution) const { return region_for(kHeadKey, resolution); }

 private:
  static constexpr int kHeadKey = -1;
  static constexpr int kFaceKey = -2;

  struct Region {
    Role role = Role::filler;
    int key = 0;
    std::size_t resolution = 0;
    std::vector<bool> cells;
  };

  static double block_sign(std::size_t dy, std::size_t dx) { return dy == dx ? 1.0 : -1.0; }
  static double head_scale(std::size_t h) { return 1.0 + 0.5 * static_cast<double>(h); }

  const std::vector<bool>& region_for(int key, std::size_t resolution) const {
    for (const auto& r : regions_)
      if (r.key == key && r.resolution == resolution) return r.cells;
    fail(ErrorKind::invalid_argument, "no region for resolution " + std::to_string(resolution));
  }

  template <class Pred>
  void add_region(Role role, int key, std::size_t res, Pred pred) {
    const std::size_t f = kCells / res;
    std::vector<bool> coarse(res * res, false);
    for (int y = 0; y < kCells; ++y)
      for (int x = 0; x < kCells; ++x)
        if (pred(x, y)) coarse[(static_cast<std::size_t>(y) / f) * res + static_cast<std::size_t>(x) / f] = true;
    std::vector<bool> dilated(res * res, false);
    const int n = static_cast<int>(res);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if (yy >= 0 && yy < n && xx >= 0 && xx < n && coarse[static_cast<std::size_t>(yy * n + xx)])
              dilated[static_cast<std::size_t>(y * n + x)] = true;
          }
    regions_.push_back({role, key, res, std::move(dilated)});
  }

  void build_regions(std::size_t res) {
    namespace g = geometry;
    add_region(Role::hair, static_cast<int>(Role::hair), res, g::is_hair);
    add_region(Role::eyes, static_cast<int>(Role::eyes), res, g::is_eye);
    add_region(Role::earrings, static_cast<int>(Role::earrings), res, g::is_earring);
    add_region(Role::glasses, static_cast<int>(Role::glasses), res, g::is_glasses);
    add_region(Role::mouth, static_cast<int>(Role::mouth), res, g::in_mouth_box);
    add_region(Role::placeholder, kFaceKey, res, g::in_face);
    add_region(Role::filler, kHeadKey, res, g::in_head);
  }

  void build_projector() {
    std::mt19937_64 engine(options_.projector_seed);
    auto gauss = [&engine] {
      double s = 0.0;
      for (int k = 0; k < 12; ++k) s += detail::unit_uniform(engine);
      return s - 6.0;
    };
    projector_.assign(kEmbeddingDim, std::vector<double>(kFeatureDim, 0.0));
    for (std::size_t c = 0; c < kFeatureDim; ++c) {
      std::vector<double> v(kEmbeddingDim);
      for (auto& x : v) x = gauss();
      for (std::size_t p = 0; p < c; ++p) {
        double dot = 0.0;
        for (std::size_t r = 0; r < kEmbeddingDim; ++r) dot += v[r] * projector_[r][p];
        for (std::size_t r = 0; r < kEmbeddingDim; ++r) v[r] -= dot * projector_[r][p];
      }
      double norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
      for (std::size_t r = 0; r < kEmbeddingDim; ++r) projector_[r][c] = v[r] / norm;
    }
    bias_.resize(kEmbeddingDim);
    for (auto& x : bias_) x = 0.05 * gauss();
  }

  Tensor build_logits(const ConditionView& view, const LayerInfo& layer, bool fused) const {
    const std::size_t res = layer.height;
    const std::size_t spatial = layer.spatial();
    const std::size_t tokens = view.tokens;
    Tensor logits({layer.heads, spatial, tokens});
    const auto& roles = view.reading.roles;
    const auto& face = region_for(kFaceKey, res);
    std::vector<const std::vector<bool>*> token_region(tokens, nullptr);
    for (std::size_t k = 0; k < tokens; ++k) {
      const Role role = roles[k];
      if (role != Role::filler && role != Role::placeholder) token_region[k] = &region(role, res);
    }
    const std::size_t m = view.placeholder_index;
    const double log_att = std::log(options_.fused_attenuation);
    for (std::size_t h = 0; h < layer.heads; ++h) {
      const double hs = head_scale(h);
      for (std::size_t s = 0; s < spatial; ++s) {
        double* row = &logits[(h * spatial + s) * tokens];
        for (std::size_t k = 0; k < tokens; ++k) {
          if (roles[k] == Role::placeholder) row[k] = face[s] ? hs * options_.placeholder_logit : 0.0;
          else if (token_region[k] != nullptr && (*token_region[k])[s]) row[k] = hs * options_.attribute_logit;
          else row[k] = 0.0;
        }
        if (fused && m < tokens) {
          // Raise the identity logit until every other token keeps fused_attenuation of its mass.
          const double peak = *std::max_element(row, row + tokens);
          double sum = 0.0;
          for (std::size_t k = 0; k < tokens; ++k) sum += std::exp(row[k] - peak);
          const double lse = peak + std::log(sum);
          const double p_m = std::exp(row[m] - lse);
          const double q = 1.0 - options_.fused_attenuation * (1.0 - p_m);
          row[m] = std::log(q) + lse - log_att;
        }
      }
    }
    return logits;
  }

  static double softmax_entry(const double* row, std::size_t tokens, std::size_t k) {
    const double peak = *std::max_element(row, row + tokens);
    double sum = 0.0;
    for (std::size_t j = 0; j < tokens; ++j) sum += std::exp(row[j] - peak);
    return std::exp(row[k] - peak) / sum;
  }

  void accumulate_kappa(const ConditionView& view, const LayerInfo& layer, const Tensor& fused_logits,
                        const Tensor& edited_logits, std::array<double, kCells * kCells>& kappa) const {
    const std::size_t res = layer.height;
    const std::size_t spatial = layer.spatial();
    const std::size_t tokens = view.tokens;
    const std::size_t m = view.placeholder_index;
    const Tensor unfused = build_logits(view, layer, false);
    std::vector<double> layer_kappa(spatial, 0.0);
    for (std::size_t h = 0; h < layer.heads; ++h) {
      for (std::size_t s = 0; s < spatial; ++s) {
        const std::size_t off = (h * spatial + s) * tokens;
        const double q_plain = softmax_entry(unfused.values().data() + off, tokens, m);
        const double q_fused = softmax_entry(fused_logits.values().data() + off, tokens, m);
        const double q = softmax_entry(edited_logits.values().data() + off, tokens, m);
        const double denom = q_fused - q_plain;
        layer_kappa[s] += denom == 0.0 ? 0.0 : (q - q_plain) / denom;
      }
    }
    const std::size_t f = kCells / res;
    for (std::size_t y = 0; y < kCells; ++y)
      for (std::size_t x = 0; x < kCells; ++x)
        kappa[y * kCells + x] += layer_kappa[(y / f) * res + x / f] / static_cast<double>(layer.heads);
  }

  AnalyticOptions options_;
  BackendCapabilities caps_;
  std::vector<int> vocab_ids_;
  std::vector<std::vector<double>> vocab_vectors_;
  std::vector<std::vector<double>> projector_;  // [embedding][feature]
  std::vector<double> bias_;
  std::vector<Region> regions_;
};

}  // namespace freecure::analytic
