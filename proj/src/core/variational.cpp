#include "core/variational.hpp"

#include <cmath>

#include "core/blas.hpp"
#include "core/rng.hpp"

namespace ghostkit::variational {
namespace {

void gradient(const double* x, std::size_t h, std::size_t w, double* gx, double* gy) {
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t i = r * w + c;
      gx[i] = c + 1 < w ? x[i + 1] - x[i] : 0.0;
      gy[i] = r + 1 < h ? x[i + w] - x[i] : 0.0;
    }
}

// Adjoint of the forward-difference gradient (= minus the divergence).
void gradient_adjoint(const double* px, const double* py, std::size_t h, std::size_t w,
                      double* out) {
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t i = r * w + c;
      double v = 0.0;
      if (c + 1 < w) v -= px[i];
      if (c > 0) v += px[i - 1];
      if (r + 1 < h) v -= py[i];
      if (r > 0) v += py[i - w];
      out[i] = v;
    }
}

double estimate_norm(const MatrixRef& w, int iterations, std::uint64_t seed) {
  Rng rng(seed, streams::kPowerIteration);
  std::vector<double> v(w.cols), wv(w.rows);
  for (auto& x : v) x = rng.normal();
  double sigma = 0.0;
  for (int it = 0; it < std::max(1, iterations); ++it) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n == 0.0) return 0.0;
    for (auto& x : v) x /= n;
    blas::gemv<double>(false, w.rows, w.cols, 1.0, w.data.data(), w.cols, v.data(), 0.0, wv.data());
    blas::gemv<double>(true, w.rows, w.cols, 1.0, w.data.data(), w.cols, wv.data(), 0.0, v.data());
    double s = 0.0;
    for (double x : v) s += x * x;
    sigma = std::sqrt(std::sqrt(s));
  }
  return sigma;
}

}  // namespace

double total_variation(const Image& x) {
  double tv = 0.0;
  for (std::size_t r = 0; r < x.height; ++r)
    for (std::size_t c = 0; c < x.width; ++c) {
      const double dx = c + 1 < x.width ? x.at(r, c + 1) - x.at(r, c) : 0.0;
      const double dy = r + 1 < x.height ? x.at(r + 1, c) - x.at(r, c) : 0.0;
      tv += std::sqrt(dx * dx + dy * dy);
    }
  return tv;
}

double tv_objective(const MatrixRef& w, std::span<const double> y, const Image& x, double lambda) {
  std::vector<double> wx(w.rows);
  blas::gemv<double>(false, w.rows, w.cols, 1.0, w.data.data(), w.cols, x.pixels.data(), 0.0,
                     wx.data());
  double fit = 0.0;
  for (std::size_t i = 0; i < wx.size(); ++i) fit += (wx[i] - y[i]) * (wx[i] - y[i]);
  return 0.5 * fit + (lambda > 0 ? lambda * total_variation(x) : 0.0);
}

Image tv_min_reconstruct(const MaskSet& masks, std::span<const double> y,
                         const VariationalConfig& config, TvTrace* trace) {
  require(config.lambda >= 0, ErrorCode::InvalidArgument, "tv_min: lambda must be >= 0");
  require(config.iterations >= 1, ErrorCode::InvalidArgument, "tv_min: iterations must be >= 1");
  require(y.size() == masks.count, ErrorCode::Shape, "tv_min: bucket/mask count mismatch");
  for (double v : y) require(std::isfinite(v), ErrorCode::Numeric, "tv_min: non-finite bucket");

  const MatrixRef w = MatrixRef::of(masks);
  const std::size_t h = masks.height, wd = masks.width, n = masks.pixels(), m = masks.count;

  // The gradient block is rescaled by mu so both blocks of K = [W; mu*grad]
  // have comparable norms; the dual ball radius becomes lambda / mu.
  const double w_norm = estimate_norm(w, config.power_iterations, config.seed);
  require(w_norm > 0, ErrorCode::Numeric, "tv_min: acquisition matrix is zero");
  const double grad_norm = std::sqrt(8.0);
  const double mu = w_norm / grad_norm;
  const double k_norm = 1.01 * std::sqrt(w_norm * w_norm + mu * mu * grad_norm * grad_norm);
  const double tau = 1.0 / k_norm;
  const double sigma = 1.0 / k_norm;
  const double radius = config.lambda / mu;

  std::vector<double> x(n, 0.0), x_bar(n, 0.0), x_avg(n, 0.0), x_new(n);
  std::vector<double> q(m, 0.0), wx(m);
  std::vector<double> px(n, 0.0), py(n, 0.0), gx(n), gy(n);
  std::vector<double> wtq(n), gt(n);

  const Image zero(h, wd);
  const double initial = tv_objective(w, y, zero, config.lambda);
  if (trace) {
    trace->averaged_objective.clear();
    trace->operator_norm = w_norm;
    trace->initial_objective = initial;
  }

  for (int it = 1; it <= config.iterations; ++it) {
    // Dual ascent on the data block: prox of the conjugate of 0.5||. - y||^2.
    blas::gemv<double>(false, m, n, 1.0, w.data.data(), n, x_bar.data(), 0.0, wx.data());
    for (std::size_t i = 0; i < m; ++i) q[i] = (q[i] + sigma * (wx[i] - y[i])) / (1.0 + sigma);
    // Dual ascent on the TV block: projection onto the pointwise l2 ball.
    gradient(x_bar.data(), h, wd, gx.data(), gy.data());
    for (std::size_t i = 0; i < n; ++i) {
      const double ax = px[i] + sigma * mu * gx[i];
      const double ay = py[i] + sigma * mu * gy[i];
      const double mag = std::sqrt(ax * ax + ay * ay);
      const double shrink = mag > radius ? (radius > 0 ? radius / mag : 0.0) : 1.0;
      px[i] = ax * shrink;
      py[i] = ay * shrink;
    }
    // Primal descent.
    blas::gemv<double>(true, m, n, 1.0, w.data.data(), n, q.data(), 0.0, wtq.data());
    gradient_adjoint(px.data(), py.data(), h, wd, gt.data());
    for (std::size_t i = 0; i < n; ++i) {
      double v = x[i] - tau * (wtq[i] + mu * gt[i]);
      if (config.nonnegative && v < 0.0) v = 0.0;
      x_new[i] = v;
    }
    for (std::size_t i = 0; i < n; ++i) {
      x_bar[i] = 2.0 * x_new[i] - x[i];
      x[i] = x_new[i];
      x_avg[i] += (x[i] - x_avg[i]) / double(it);
    }

    if (it % 10 == 0 || it == config.iterations) {
      const Image current(h, wd, x);
      const double obj = tv_objective(w, y, current, config.lambda);
      if (!std::isfinite(obj) || obj > 1e3 * std::max(initial, 1e-300)) {
        fail(ErrorCode::Numeric,
             "tv_min: diverged at iteration " + std::to_string(it) +
                 " (objective grew beyond 1e3 x its initial value); try smaller steps");
      }
      if (trace && it % 10 == 0)
        trace->averaged_objective.push_back(
            tv_objective(w, y, Image(h, wd, x_avg), config.lambda));
    }
  }
  return Image(h, wd, std::move(x));
}

}  // namespace ghostkit::variational
