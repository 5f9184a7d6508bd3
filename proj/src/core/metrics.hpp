#pragma once

#include <limits>
#include <vector>

#include "core/image.hpp"

namespace ghostkit::metrics {

double mse(const Image& a, const Image& b);

// 10 log10(peak^2 / MSE) with peak = max(reference). Identical images give
// +infinity.
double psnr(const Image& test, const Image& reference);

struct SsimComponents {
  double ssim = 0.0;
  // Window-averaged terms; ssim is the mean of luminance * contrast_structure.
  double luminance = 0.0;
  double contrast = 0.0;
  double structure = 0.0;
};

// Gaussian-window SSIM (11x11, sigma 1.5, K1 0.01, K2 0.03) over all fully
// contained windows. Dynamic range = max - min of the reference (1 if flat).
SsimComponents ssim_components(const Image& test, const Image& reference);
double ssim(const Image& test, const Image& reference);

struct FrcCurve {
  std::vector<double> frequency;    // cycles/pixel, ring r at r / min(H,W)
  std::vector<double> correlation;  // in [-1,1]
  std::vector<std::size_t> samples; // n_r
  std::vector<double> threshold;    // half-bit
};

double half_bit_threshold(std::size_t samples);

// Unit-width rings up to Nyquist. hann applies a separable Hann window to both
// images first.
FrcCurve frc(const Image& a, const Image& b, bool hann = false);

// 1 / f_c in pixels, f_c the first half-bit crossing above DC with linear
// interpolation between rings; 2 px when the curve never crosses.
double resolution_from_frc(const FrcCurve& curve);

struct MetricBundle {
  double mse = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  double resolution = 0.0;
  FrcCurve frc;
};

MetricBundle evaluate(const Image& test, const Image& reference, bool hann = false);

}  // namespace ghostkit::metrics
