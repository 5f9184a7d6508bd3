#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace ghostkit {

// Row-major 2D intensity grid. Phantoms and masks are nonnegative; least-squares
// reconstructions may legitimately dip below zero, so the sign is checked by
// the operations that need it rather than by the type.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), pixels(h * w, fill) {}
  Image(std::size_t h, std::size_t w, std::vector<double> values)
      : height(h), width(w), pixels(std::move(values)) {
    require(pixels.size() == h * w, ErrorCode::Shape,
            "image " + std::to_string(h) + "x" + std::to_string(w) + " given " +
                std::to_string(pixels.size()) + " pixels");
  }

  std::size_t size() const { return pixels.size(); }
  double& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
  double at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
  bool same_shape(const Image& o) const { return height == o.height && width == o.width; }
};

// M stacked masks, one row of W per realization.
struct MaskSet {
  std::size_t count = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;  // count x (height*width)
  // Global maximum of the raw half-normal draws that was divided out.
  double normalization = 1.0;

  std::size_t pixels() const { return height * width; }
  std::span<const double> mask(std::size_t m) const {
    return std::span<const double>(values).subspan(m * pixels(), pixels());
  }
  std::span<double> mask(std::size_t m) {
    return std::span<double>(values).subspan(m * pixels(), pixels());
  }
};

struct BucketVector {
  std::vector<double> values;
  // Noise-free counterpart b when known (simulation).
  std::optional<std::vector<double>> clean;

  std::size_t size() const { return values.size(); }
};

// Dense row-major matrix view used by the linear solvers.
struct MatrixRef {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  static MatrixRef of(const MaskSet& w) { return {w.values, w.count, w.pixels()}; }
  std::span<const double> row(std::size_t r) const { return data.subspan(r * cols, cols); }
};

}  // namespace ghostkit
