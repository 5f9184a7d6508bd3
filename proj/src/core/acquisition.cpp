#include "core/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include "core/fft.hpp"
#include "core/rng.hpp"

namespace ghostkit::acquisition {
namespace {

void require_dims(std::size_t h, std::size_t w, const char* what) {
  require(h > 0 && w > 0, ErrorCode::InvalidArgument,
          std::string(what) + ": height and width must be positive");
}

// White noise filtered by an anisotropic Gaussian (periodic boundary),
// rescaled to zero mean and unit standard deviation.
std::vector<double> filtered_noise(std::size_t h, std::size_t w, double sigma_long,
                                   double sigma_short, double angle, Rng& rng) {
  const std::size_t n = h * w;
  std::vector<std::complex<double>> buf(n);
  for (auto& v : buf) v = {rng.normal(), 0.0};

  fft::dft2(buf, h, w, true);
  const double c = std::cos(angle), s = std::sin(angle);
  for (std::size_t ky = 0; ky < h; ++ky) {
    const double fy = fft::signed_bin(ky, h) / double(h);
    for (std::size_t kx = 0; kx < w; ++kx) {
      const double fx = fft::signed_bin(kx, w) / double(w);
      const double along = c * fx + s * fy;
      const double across = -s * fx + c * fy;
      // Fourier transform of a spatial Gaussian with the given widths.
      const double g = std::exp(-2.0 * M_PI * M_PI *
                                (along * along * sigma_long * sigma_long +
                                 across * across * sigma_short * sigma_short));
      buf[ky * w + kx] *= g;
    }
  }
  fft::dft2(buf, h, w, false);

  std::vector<double> out(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = buf[i].real();
    mean += out[i];
  }
  mean /= double(n);
  double var = 0.0;
  for (auto& v : out) {
    v -= mean;
    var += v * v;
  }
  const double sd = std::sqrt(var / double(n));
  if (sd > 0)
    for (auto& v : out) v /= sd;
  return out;
}

double smoothstep(double edge0, double edge1, double x) {
  const double t = std::clamp((x - edge0) / (edge1 - edge0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

Image blobs_phantom(std::size_t h, std::size_t w, Rng& rng) {
  const double size = double(std::min(h, w));
  const double sigma_long = std::max(1.5, size / 12.0);
  const double sigma_short = std::max(0.8, size / 40.0);
  // Union of elongated structures at three random orientations, thresholded
  // so that roughly kFill of the field of view is covered.
  constexpr int kOrientations = 3;
  constexpr double kFill = 0.15;
  std::vector<double> field(h * w, -std::numeric_limits<double>::infinity());
  for (int j = 0; j < kOrientations; ++j) {
    const double angle = rng.uniform(0.0, M_PI);
    const auto f = filtered_noise(h, w, sigma_long, sigma_short, angle, rng);
    for (std::size_t i = 0; i < f.size(); ++i) field[i] = std::max(field[i], f[i]);
  }
  std::vector<double> sorted = field;
  const auto cut = static_cast<std::ptrdiff_t>((1.0 - kFill) * double(sorted.size() - 1));
  std::nth_element(sorted.begin(), sorted.begin() + cut, sorted.end());
  const double threshold = sorted[static_cast<std::size_t>(cut)] - 0.15;
  std::vector<double> support(h * w);
  for (std::size_t i = 0; i < field.size(); ++i)
    support[i] = smoothstep(threshold, threshold + 0.3, field[i]);
  const auto texture = filtered_noise(h, w, size / 25.0 + 0.5, size / 25.0 + 0.5, 0.0, rng);
  Image img(h, w);
  for (std::size_t i = 0; i < img.size(); ++i)
    img.pixels[i] = support[i] * std::clamp(0.75 + 0.15 * texture[i], 0.3, 1.0);
  const double peak = *std::max_element(img.pixels.begin(), img.pixels.end());
  if (peak > 0)
    for (auto& v : img.pixels) v /= peak;
  return img;
}

Image disks_phantom(std::size_t h, std::size_t w, Rng& rng) {
  static constexpr double kAmplitudes[] = {1.0, 0.7, 0.4};
  struct Disk {
    double cy, cx, r, amp;
  };
  const double size = double(std::min(h, w));
  const int target = 5 + static_cast<int>(rng.below(6));
  std::vector<Disk> disks;
  for (int attempt = 0; attempt < 500 && int(disks.size()) < target; ++attempt) {
    const double r = std::min(size / 2.0,
                              rng.uniform(std::max(1.0, size / 16.0), std::max(1.5, size / 6.0)));
    const double cy = rng.uniform(r, double(h) - r);
    const double cx = rng.uniform(r, double(w) - r);
    bool overlaps = false;
    for (const auto& d : disks)
      if (std::hypot(d.cy - cy, d.cx - cx) < d.r + r + 1.0) overlaps = true;
    if (overlaps) continue;
    const double amp = disks.empty() ? 1.0 : kAmplitudes[rng.below(3)];
    disks.push_back({cy, cx, r, amp});
  }
  Image img(h, w);
  for (const auto& d : disks)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        if (std::hypot(double(y) + 0.5 - d.cy, double(x) + 0.5 - d.cx) <= d.r) img.at(y, x) = d.amp;
  return img;
}

}  // namespace

MaskSet generate_masks(std::size_t count, std::size_t height, std::size_t width,
                       std::uint64_t seed) {
  require(count >= 1, ErrorCode::InvalidArgument, "generate_masks: need at least one mask");
  require_dims(height, width, "generate_masks");
  MaskSet masks;
  masks.count = count;
  masks.height = height;
  masks.width = width;
  masks.values.resize(count * height * width);
  Rng rng(seed, streams::kMasks);
  double peak = 0.0;
  for (auto& v : masks.values) {
    v = std::fabs(rng.normal());
    peak = std::max(peak, v);
  }
  for (auto& v : masks.values) v /= peak;
  masks.normalization = peak;
  validate_masks(masks);
  return masks;
}

void validate_masks(const MaskSet& masks) {
  require(masks.count >= 1, ErrorCode::InvalidArgument, "mask set is empty");
  require(masks.values.size() == masks.count * masks.pixels(), ErrorCode::Shape,
          "mask set holds " + std::to_string(masks.values.size()) + " values, expected " +
              std::to_string(masks.count * masks.pixels()));
  for (std::size_t m = 0; m < masks.count; ++m) {
    bool any = false;
    for (double v : masks.mask(m)) {
      require(std::isfinite(v) && v >= 0.0 && v <= 1.0, ErrorCode::InvalidArgument,
              "mask " + std::to_string(m) + " has a value outside [0,1]");
      any = any || v > 0.0;
    }
    require(any, ErrorCode::InvalidArgument, "mask " + std::to_string(m) + " is all zero");
  }
}

BucketVector forward_project(const MaskSet& masks, const Image& image) {
  require(masks.height == image.height && masks.width == image.width, ErrorCode::Shape,
          "forward_project: masks are " + std::to_string(masks.height) + "x" +
              std::to_string(masks.width) + " but image is " + std::to_string(image.height) + "x" +
              std::to_string(image.width));
  BucketVector b;
  b.values.resize(masks.count);
  for (std::size_t m = 0; m < masks.count; ++m) {
    const auto row = masks.mask(m);
    double acc = 0.0;
    for (std::size_t n = 0; n < row.size(); ++n) acc += row[n] * image.pixels[n];
    b.values[m] = acc;
  }
  b.clean = b.values;
  return b;
}

BucketVector apply_poisson(const BucketVector& clean, const NoiseModel& model) {
  require(model.photons > 0, ErrorCode::InvalidArgument, "apply_poisson: photons C must be > 0");
  BucketVector out;
  out.clean = clean.values;
  out.values.resize(clean.size());
  for (double b : clean.values)
    require(std::isfinite(b) && b >= 0.0, ErrorCode::InvalidArgument,
            "apply_poisson: clean buckets must be finite and nonnegative");
  if (std::isinf(model.photons)) {
    out.values = clean.values;
    return out;
  }
  Rng rng(model.seed, streams::kPoisson);
  for (std::size_t m = 0; m < clean.size(); ++m)
    out.values[m] = static_cast<double>(rng.poisson(model.photons * clean.values[m])) / model.photons;
  return out;
}

double noise_fluctuation_ratio(std::span<const double> clean, std::span<const double> noisy) {
  require(clean.size() == noisy.size() && !clean.empty(), ErrorCode::Shape,
          "noise_fluctuation_ratio: bucket vectors must be non-empty and equally long");
  const double n = double(clean.size());
  const double mean_b = std::accumulate(clean.begin(), clean.end(), 0.0) / n;
  double noise = 0.0, signal = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    noise += std::fabs(noisy[i] - clean[i]);
    signal += std::fabs(clean[i] - mean_b);
  }
  if (noise == 0.0) return 0.0;
  require(signal > 0.0, ErrorCode::Numeric,
          "noise_fluctuation_ratio: clean buckets have no fluctuations");
  return 100.0 * noise / signal;
}

Image pencil_beam_scan(const Image& image, double photons_per_pixel, std::uint64_t seed) {
  require(photons_per_pixel > 0, ErrorCode::InvalidArgument,
          "pencil_beam_scan: photons per pixel must be > 0");
  Image out(image.height, image.width);
  if (std::isinf(photons_per_pixel)) {
    out.pixels = image.pixels;
    return out;
  }
  Rng rng(seed, streams::kPencilBeam);
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double x = image.pixels[i];
    require(std::isfinite(x) && x >= 0.0, ErrorCode::InvalidArgument,
            "pencil_beam_scan: image must be finite and nonnegative");
    out.pixels[i] = static_cast<double>(rng.poisson(photons_per_pixel * x)) / photons_per_pixel;
  }
  return out;
}

Image generate_phantom(const std::string& kind, std::size_t height, std::size_t width,
                       std::uint64_t seed) {
  require_dims(height, width, "generate_phantom");
  Rng rng(seed, streams::kPhantom);
  if (kind == "flat") return Image(height, width, 1.0);
  if (kind == "disks") return disks_phantom(height, width, rng);
  if (kind == "blobs") return blobs_phantom(height, width, rng);
  fail(ErrorCode::InvalidArgument, "unknown phantom kind '" + kind + "' (disks, blobs, flat)");
}

}  // namespace ghostkit::acquisition
