#pragma once

#include <cstdint>
#include <string>

#include "core/image.hpp"

namespace ghostkit::acquisition {

struct NoiseModel {
  // Maximum expected emitted photons per pixel per realization (C). Infinity
  // disables the noise.
  double photons = 100.0;
  std::uint64_t seed = 0;
};

// Half-normal masks |z|, z ~ N(0,1), divided by the global maximum.
MaskSet generate_masks(std::size_t count, std::size_t height, std::size_t width, std::uint64_t seed);

// Throws unless every value is in [0,1] and no mask is all zero.
void validate_masks(const MaskSet& masks);

// b = W x, accumulated in double.
BucketVector forward_project(const MaskSet& masks, const Image& image);

// y_m = Poisson(C b_m) / C, independent per bucket. Keeps b as the clean part.
BucketVector apply_poisson(const BucketVector& clean, const NoiseModel& model);

// 100 * mean|y - b| / mean|b - mean(b)|.
double noise_fluctuation_ratio(std::span<const double> clean, std::span<const double> noisy);

// Raster scan: every pixel drawn as Poisson(photons * x) / photons.
Image pencil_beam_scan(const Image& image, double photons_per_pixel, std::uint64_t seed);

// "disks", "blobs" or "flat"; values in [0,1].
Image generate_phantom(const std::string& kind, std::size_t height, std::size_t width,
                       std::uint64_t seed);

}  // namespace ghostkit::acquisition
