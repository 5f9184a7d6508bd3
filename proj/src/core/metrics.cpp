#include "core/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "core/fft.hpp"

namespace ghostkit::metrics {
namespace {

void require_same_shape(const Image& a, const Image& b, const char* what) {
  require(a.same_shape(b), ErrorCode::Shape,
          std::string(what) + ": image shapes differ (" + std::to_string(a.height) + "x" +
              std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
              std::to_string(b.width) + ")");
  require(a.size() > 0, ErrorCode::Shape, std::string(what) + ": empty images");
}

constexpr std::size_t kWindow = 11;
constexpr double kSigma = 1.5;

std::vector<double> gaussian_window() {
  std::vector<double> g(kWindow);
  double total = 0.0;
  for (std::size_t i = 0; i < kWindow; ++i) {
    const double d = double(i) - double(kWindow / 2);
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    total += g[i];
  }
  for (auto& v : g) v /= total;
  return g;
}

// Separable 'valid' filtering of src with the 1D window g.
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t h, std::size_t w,
                                 const std::vector<double>& g) {
  const std::size_t k = g.size(), oh = h - k + 1, ow = w - k + 1;
  std::vector<double> rows(h * ow, 0.0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += g[j] * src[y * w + x + j];
      rows[y * ow + x] = acc;
    }
  std::vector<double> out(oh * ow, 0.0);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += g[j] * rows[(y + j) * ow + x];
      out[y * ow + x] = acc;
    }
  return out;
}

std::vector<std::complex<double>> spectrum(const Image& img, bool hann) {
  const std::size_t h = img.height, w = img.width;
  std::vector<std::complex<double>> buf(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    const double wy = hann ? 0.5 - 0.5 * std::cos(2.0 * M_PI * double(y) / double(h)) : 1.0;
    for (std::size_t x = 0; x < w; ++x) {
      const double wx = hann ? 0.5 - 0.5 * std::cos(2.0 * M_PI * double(x) / double(w)) : 1.0;
      buf[y * w + x] = img.at(y, x) * wy * wx;
    }
  }
  fft::dft2(buf, h, w, true);
  return buf;
}

}  // namespace

double mse(const Image& a, const Image& b) {
  require_same_shape(a, b, "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    acc += d * d;
  }
  return acc / double(a.size());
}

double psnr(const Image& test, const Image& reference) {
  const double e = mse(test, reference);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  const double peak = *std::max_element(reference.pixels.begin(), reference.pixels.end());
  require(peak > 0.0, ErrorCode::Numeric, "psnr: reference peak must be positive");
  return 10.0 * std::log10(peak * peak / e);
}

SsimComponents ssim_components(const Image& test, const Image& reference) {
  require_same_shape(test, reference, "ssim");
  require(test.height >= kWindow && test.width >= kWindow, ErrorCode::Shape,
          "ssim: images must be at least 11x11");
  const auto [lo, hi] = std::minmax_element(reference.pixels.begin(), reference.pixels.end());
  double range = *hi - *lo;
  if (range <= 0.0) range = 1.0;
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  const double c3 = c2 / 2.0;

  const std::size_t h = test.height, w = test.width, n = h * w;
  const auto& a = test.pixels;
  const auto& b = reference.pixels;
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto g = gaussian_window();
  const auto mu_a = filter_valid(a, h, w, g);
  const auto mu_b = filter_valid(b, h, w, g);
  const auto e_aa = filter_valid(aa, h, w, g);
  const auto e_bb = filter_valid(bb, h, w, g);
  const auto e_ab = filter_valid(ab, h, w, g);

  SsimComponents out;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double va = std::max(0.0, e_aa[i] - mu_a[i] * mu_a[i]);
    const double vb = std::max(0.0, e_bb[i] - mu_b[i] * mu_b[i]);
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    const double sa = std::sqrt(va), sb = std::sqrt(vb);
    const double lum = (2.0 * mu_a[i] * mu_b[i] + c1) / (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1);
    const double cs = (2.0 * cov + c2) / (va + vb + c2);
    out.ssim += lum * cs;
    out.luminance += lum;
    out.contrast += (2.0 * sa * sb + c2) / (va + vb + c2);
    out.structure += (cov + c3) / (sa * sb + c3);
  }
  const double count = double(mu_a.size());
  out.ssim /= count;
  out.luminance /= count;
  out.contrast /= count;
  out.structure /= count;
  return out;
}

double ssim(const Image& test, const Image& reference) {
  return ssim_components(test, reference).ssim;
}

double half_bit_threshold(std::size_t samples) {
  const double s = std::sqrt(double(samples));
  return (0.2071 + 1.9102 / s) / (1.2071 + 0.9102 / s);
}

FrcCurve frc(const Image& a, const Image& b, bool hann) {
  require_same_shape(a, b, "frc");
  const std::size_t h = a.height, w = a.width, side = std::min(h, w);
  require(side >= 2, ErrorCode::Shape, "frc: images must be at least 2x2");
  const auto fa = spectrum(a, hann);
  const auto fb = spectrum(b, hann);
  const std::size_t rings = side / 2 + 1;
  std::vector<double> cross(rings, 0.0), pa(rings, 0.0), pb(rings, 0.0);
  std::vector<std::size_t> count(rings, 0);
  for (std::size_t ky = 0; ky < h; ++ky) {
    const double fy = fft::signed_bin(ky, h) / double(h);
    for (std::size_t kx = 0; kx < w; ++kx) {
      const double fx = fft::signed_bin(kx, w) / double(w);
      const auto r = static_cast<std::size_t>(std::lround(std::hypot(fy, fx) * double(side)));
      if (r >= rings) continue;
      const auto& va = fa[ky * w + kx];
      const auto& vb = fb[ky * w + kx];
      cross[r] += (va * std::conj(vb)).real();
      pa[r] += std::norm(va);
      pb[r] += std::norm(vb);
      ++count[r];
    }
  }
  FrcCurve curve;
  for (std::size_t r = 0; r < rings; ++r) {
    curve.frequency.push_back(double(r) / double(side));
    const double denom = std::sqrt(pa[r] * pb[r]);
    curve.correlation.push_back(denom > 0.0 ? std::clamp(cross[r] / denom, -1.0, 1.0) : 0.0);
    curve.samples.push_back(count[r]);
    curve.threshold.push_back(half_bit_threshold(count[r]));
  }
  return curve;
}

double resolution_from_frc(const FrcCurve& curve) {
  const std::size_t n = curve.correlation.size();
  for (std::size_t r = 1; r < n; ++r) {
    const double d = curve.correlation[r] - curve.threshold[r];
    if (d >= 0.0) continue;
    if (r == 1) return 1.0 / curve.frequency[1];
    const double dp = curve.correlation[r - 1] - curve.threshold[r - 1];
    const double t = dp / (dp - d);
    const double fc = curve.frequency[r - 1] + t * (curve.frequency[r] - curve.frequency[r - 1]);
    return 1.0 / fc;
  }
  return 2.0;
}

MetricBundle evaluate(const Image& test, const Image& reference, bool hann) {
  MetricBundle m;
  m.mse = mse(test, reference);
  m.psnr = psnr(test, reference);
  m.ssim = ssim(test, reference);
  m.frc = frc(test, reference, hann);
  m.resolution = resolution_from_frc(m.frc);
  return m;
}

}  // namespace ghostkit::metrics
