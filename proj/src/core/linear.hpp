#pragma once

#include <cstdint>
#include <vector>

#include "core/image.hpp"

namespace ghostkit::linear {

struct CglsConfig {
  int max_iters = 100;
  // Stops once ||W^T r|| / ||W^T y|| or ||r|| / ||y|| falls below tol.
  double tol = 1e-8;
};

struct CglsResult {
  std::vector<double> x;
  int iterations = 0;
  // ||W x_i - y|| for i = 0 (x = 0) .. iterations.
  std::vector<double> residual_norms;
};

// Conjugate gradient on the normal equations from x = 0, which converges to
// the minimum-norm least-squares solution W^+ y.
CglsResult cgls(const MatrixRef& w, std::span<const double> y, const CglsConfig& config = {});

Image cgls_reconstruct(const MaskSet& w, std::span<const double> y, const CglsConfig& config = {});

struct SubDataset {
  MaskSet masks;
  std::vector<double> buckets;
  std::vector<std::size_t> parent_indices;
};

struct PartitionPlan {
  std::size_t realizations = 0;  // M
  std::size_t splits = 0;        // K
  std::size_t permutations = 0;  // P
  std::uint64_t seed = 0;
  // indices[p][k]: realizations in split k of permutation p.
  std::vector<std::vector<std::vector<std::size_t>>> indices;
};

// Sizes of K contiguous chunks of M items; earlier chunks take the remainder.
std::vector<std::size_t> split_sizes(std::size_t m, std::size_t k);

// P independent shuffles of 0..M-1, each cut into K contiguous chunks.
PartitionPlan make_partition_plan(std::size_t m, std::size_t k, std::size_t p, std::uint64_t seed);

SubDataset extract(const MaskSet& w, std::span<const double> y, std::span<const std::size_t> rows);

// One shuffle cut into K splits.
std::vector<SubDataset> split_realizations(const MaskSet& w, std::span<const double> y,
                                           std::size_t k, std::uint64_t seed);

struct PermutedSplits {
  PartitionPlan plan;
  std::vector<SubDataset> subsets;  // p-major: subsets[p*K + k]
};

PermutedSplits permuted_splits(const MaskSet& w, std::span<const double> y, std::size_t k,
                               std::size_t p, std::uint64_t seed);

// x_{p,k} = CGLS(W_{p,k}, y_{p,k}) in the same order as the subsets.
std::vector<Image> sub_reconstruct_all(const std::vector<SubDataset>& subsets,
                                       const CglsConfig& config = {});

struct NoiseDecomposition {
  Image base;        // reference x
  Image nullspace;   // v_k, in ker W_k
  Image noise;       // t_k = W_k^+ eps_k
  // ||W_k v_k|| / (||W_k||_F ||v_k||); zero when v_k vanishes.
  double annihilation_ratio = 0.0;
};

// Splits a sub-reconstruction x_k = x + v_k + t_k against a known reference,
// with eps_k = y_k - W_k x. Throws if W_k v_k is not numerically zero.
NoiseDecomposition nullspace_probe(const SubDataset& subset, const Image& sub_reconstruction,
                                   const Image& reference, double tolerance = 1e-8);

}  // namespace ghostkit::linear
