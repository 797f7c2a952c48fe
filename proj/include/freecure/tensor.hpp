#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "freecure/errors.hpp"

namespace freecure {

using Shape = std::vector<std::size_t>;

inline std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

/// Dense row-major tensor of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}
  Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    require(data_.size() == element_count(shape_), ErrorKind::invalid_argument,
            "tensor data size does not match shape " + shape_string(shape_));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Channel-major image, nominal value range [0,1].
class Image {
 public:
  Image() = default;
  Image(std::size_t channels, std::size_t height, std::size_t width, double fill = 0.0)
      : channels_(channels), height_(height), width_(width), data_(channels * height * width, fill) {}

  std::size_t channels() const noexcept { return channels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& at(std::size_t c, std::size_t y, std::size_t x) { return data_[(c * height_ + y) * width_ + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const { return data_[(c * height_ + y) * width_ + x]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool same_geometry(const Image& other) const {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

/// Single-channel real map (attention maps, soft masks).
class GrayMap {
 public:
  GrayMap() = default;
  GrayMap(std::size_t height, std::size_t width, double fill = 0.0)
      : height_(height), width_(width), data_(height * width, fill) {}

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& at(std::size_t y, std::size_t x) { return data_[y * width_ + x]; }
  double at(std::size_t y, std::size_t x) const { return data_[y * width_ + x]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool same_size(const GrayMap& other) const { return height_ == other.height_ && width_ == other.width_; }

  friend bool operator==(const GrayMap&, const GrayMap&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

/// Integer label image produced by a face parser.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(std::size_t height, std::size_t width, int fill = 0)
      : height_(height), width_(width), data_(height * width, fill) {}

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  int& at(std::size_t y, std::size_t x) { return data_[y * width_ + x]; }
  int at(std::size_t y, std::size_t x) const { return data_[y * width_ + x]; }
  std::span<const int> values() const noexcept { return data_; }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<int> data_;
};

namespace detail {

// Half-pixel-centre source coordinate, clamped to the valid sample range.
struct LinearTap {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

inline LinearTap linear_tap(std::size_t dst_index, std::size_t dst_size, std::size_t src_size) {
  const double scale = static_cast<double>(src_size) / static_cast<double>(dst_size);
  double src = (static_cast<double>(dst_index) + 0.5) * scale - 0.5;
  src = std::clamp(src, 0.0, static_cast<double>(src_size - 1));
  const auto lo = static_cast<std::size_t>(std::floor(src));
  const std::size_t hi = std::min(lo + 1, src_size - 1);
  return {lo, hi, src - static_cast<double>(lo)};
}

}  // namespace detail

/// Bilinear resize with half-pixel centres and edge clamping. Same-size input is copied verbatim.
inline GrayMap resize_bilinear(const GrayMap& src, std::size_t height, std::size_t width) {
  require(src.height() > 0 && src.width() > 0 && height > 0 && width > 0, ErrorKind::invalid_argument,
          "resize_bilinear: empty geometry");
  if (src.height() == height && src.width() == width) return src;
  GrayMap out(height, width);
  for (std::size_t y = 0; y < height; ++y) {
    const auto ty = detail::linear_tap(y, height, src.height());
    for (std::size_t x = 0; x < width; ++x) {
      const auto tx = detail::linear_tap(x, width, src.width());
      const double top = src.at(ty.lo, tx.lo) * (1.0 - tx.frac) + src.at(ty.lo, tx.hi) * tx.frac;
      const double bottom = src.at(ty.hi, tx.lo) * (1.0 - tx.frac) + src.at(ty.hi, tx.hi) * tx.frac;
      out.at(y, x) = top * (1.0 - ty.frac) + bottom * ty.frac;
    }
  }
  return out;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::invalid_argument, "max_abs_diff: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

inline double mean_squared_error(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::invalid_argument, "mean_squared_error: size mismatch");
  if (a.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc / static_cast<double>(a.size());
}

inline double mean_abs_diff(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::invalid_argument, "mean_abs_diff: size mismatch");
  if (a.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc / static_cast<double>(a.size());
}

}  // namespace freecure
