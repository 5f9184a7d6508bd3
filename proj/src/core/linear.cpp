#include "core/linear.hpp"

#include <cmath>
#include <numeric>

#include "core/blas.hpp"
#include "core/rng.hpp"

namespace ghostkit::linear {
namespace {

double norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

void matvec(const MatrixRef& w, std::span<const double> x, std::span<double> out) {
  blas::gemv<double>(false, w.rows, w.cols, 1.0, w.data.data(), w.cols, x.data(), 0.0, out.data());
}

void matvec_t(const MatrixRef& w, std::span<const double> r, std::span<double> out) {
  blas::gemv<double>(true, w.rows, w.cols, 1.0, w.data.data(), w.cols, r.data(), 0.0, out.data());
}

}  // namespace

CglsResult cgls(const MatrixRef& w, std::span<const double> y, const CglsConfig& config) {
  require(w.data.size() == w.rows * w.cols, ErrorCode::Shape, "cgls: matrix storage mismatch");
  require(y.size() == w.rows, ErrorCode::Shape,
          "cgls: " + std::to_string(y.size()) + " buckets for " + std::to_string(w.rows) +
              " realizations");
  require(config.max_iters >= 0 && config.tol >= 0, ErrorCode::InvalidArgument,
          "cgls: max_iters and tol must be nonnegative");
  for (double v : w.data)
    require(std::isfinite(v), ErrorCode::Numeric, "cgls: non-finite matrix entry");
  for (double v : y) require(std::isfinite(v), ErrorCode::Numeric, "cgls: non-finite bucket");

  CglsResult res;
  res.x.assign(w.cols, 0.0);
  std::vector<double> r(y.begin(), y.end());
  std::vector<double> s(w.cols), p(w.cols), q(w.rows);
  matvec_t(w, r, s);
  p = s;
  double gamma = std::inner_product(s.begin(), s.end(), s.begin(), 0.0);
  const double y_norm = norm(y);
  const double s0_norm = std::sqrt(gamma);
  res.residual_norms.push_back(y_norm);
  if (y_norm == 0.0 || s0_norm == 0.0) return res;

  for (int it = 0; it < config.max_iters; ++it) {
    matvec(w, p, q);
    const double qq = std::inner_product(q.begin(), q.end(), q.begin(), 0.0);
    if (qq == 0.0) break;
    const double alpha = gamma / qq;
    for (std::size_t i = 0; i < res.x.size(); ++i) res.x[i] += alpha * p[i];
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= alpha * q[i];
    matvec_t(w, r, s);
    const double gamma_new = std::inner_product(s.begin(), s.end(), s.begin(), 0.0);
    res.iterations = it + 1;
    const double r_norm = norm(r);
    res.residual_norms.push_back(r_norm);
    if (std::sqrt(gamma_new) <= config.tol * s0_norm || r_norm <= config.tol * y_norm) break;
    const double beta = gamma_new / gamma;
    gamma = gamma_new;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = s[i] + beta * p[i];
  }
  return res;
}

Image cgls_reconstruct(const MaskSet& w, std::span<const double> y, const CglsConfig& config) {
  auto res = cgls(MatrixRef::of(w), y, config);
  return Image(w.height, w.width, std::move(res.x));
}

std::vector<std::size_t> split_sizes(std::size_t m, std::size_t k) {
  require(k >= 1, ErrorCode::InvalidArgument, "need at least one split");
  require(k <= m, ErrorCode::InvalidArgument,
          "cannot cut " + std::to_string(m) + " realizations into " + std::to_string(k) + " splits");
  std::vector<std::size_t> sizes(k, m / k);
  for (std::size_t i = 0; i < m % k; ++i) ++sizes[i];
  return sizes;
}

PartitionPlan make_partition_plan(std::size_t m, std::size_t k, std::size_t p, std::uint64_t seed) {
  require(p >= 1, ErrorCode::InvalidArgument, "need at least one permutation");
  const auto sizes = split_sizes(m, k);
  PartitionPlan plan{m, k, p, seed, {}};
  Rng rng(seed, streams::kSplits);
  for (std::size_t perm = 0; perm < p; ++perm) {
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<std::vector<std::size_t>> splits;
    std::size_t offset = 0;
    for (auto sz : sizes) {
      splits.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(offset),
                          order.begin() + static_cast<std::ptrdiff_t>(offset + sz));
      offset += sz;
    }
    plan.indices.push_back(std::move(splits));
  }
  return plan;
}

SubDataset extract(const MaskSet& w, std::span<const double> y, std::span<const std::size_t> rows) {
  require(y.size() == w.count, ErrorCode::Shape, "extract: bucket/mask count mismatch");
  require(!rows.empty(), ErrorCode::InvalidArgument, "extract: empty subset");
  SubDataset sub;
  sub.masks.count = rows.size();
  sub.masks.height = w.height;
  sub.masks.width = w.width;
  sub.masks.normalization = w.normalization;
  sub.masks.values.reserve(rows.size() * w.pixels());
  for (auto r : rows) {
    require(r < w.count, ErrorCode::InvalidArgument, "extract: row index out of range");
    const auto m = w.mask(r);
    sub.masks.values.insert(sub.masks.values.end(), m.begin(), m.end());
    sub.buckets.push_back(y[r]);
  }
  sub.parent_indices.assign(rows.begin(), rows.end());
  return sub;
}

std::vector<SubDataset> split_realizations(const MaskSet& w, std::span<const double> y,
                                           std::size_t k, std::uint64_t seed) {
  return permuted_splits(w, y, k, 1, seed).subsets;
}

PermutedSplits permuted_splits(const MaskSet& w, std::span<const double> y, std::size_t k,
                               std::size_t p, std::uint64_t seed) {
  require(y.size() == w.count, ErrorCode::Shape, "permuted_splits: bucket/mask count mismatch");
  PermutedSplits out{make_partition_plan(w.count, k, p, seed), {}};
  for (const auto& perm : out.plan.indices)
    for (const auto& split : perm) out.subsets.push_back(extract(w, y, split));
  return out;
}

std::vector<Image> sub_reconstruct_all(const std::vector<SubDataset>& subsets,
                                       const CglsConfig& config) {
  std::vector<Image> out;
  out.reserve(subsets.size());
  for (const auto& s : subsets) out.push_back(cgls_reconstruct(s.masks, s.buckets, config));
  return out;
}

NoiseDecomposition nullspace_probe(const SubDataset& subset, const Image& sub_reconstruction,
                                   const Image& reference, double tolerance) {
  const auto& w = subset.masks;
  require(sub_reconstruction.height == w.height && sub_reconstruction.width == w.width &&
              reference.same_shape(sub_reconstruction),
          ErrorCode::Shape, "nullspace_probe: image and mask shapes differ");
  const MatrixRef wr = MatrixRef::of(w);
  std::vector<double> clean(w.count);
  matvec(wr, reference.pixels, clean);
  std::vector<double> eps(w.count);
  for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = subset.buckets[i] - clean[i];

  const CglsConfig tight{std::max<int>(1000, int(4 * w.pixels())), 1e-14};
  NoiseDecomposition d;
  d.base = reference;
  d.noise = Image(w.height, w.width, cgls(wr, eps, tight).x);
  d.nullspace = Image(w.height, w.width);
  for (std::size_t i = 0; i < d.nullspace.size(); ++i)
    d.nullspace.pixels[i] = sub_reconstruction.pixels[i] - reference.pixels[i] - d.noise.pixels[i];

  std::vector<double> wv(w.count);
  matvec(wr, d.nullspace.pixels, wv);
  const double v_norm = norm(d.nullspace.pixels);
  const double w_norm = norm(w.values);
  const double ref_scale = std::max(norm(sub_reconstruction.pixels), norm(reference.pixels));
  if (v_norm > 1e-12 * std::max(1.0, ref_scale)) {
    d.annihilation_ratio = norm(wv) / (w_norm * v_norm);
  }
  require(d.annihilation_ratio <= tolerance, ErrorCode::Numeric,
          "nullspace_probe: W_k v_k is not zero (ratio " + std::to_string(d.annihilation_ratio) +
              "); the sub-reconstruction is not a converged least-squares solution");
  return d;
}

}  // namespace ghostkit::linear
