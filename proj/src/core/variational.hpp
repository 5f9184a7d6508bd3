#pragma once

#include <vector>

#include "core/image.hpp"

namespace ghostkit::variational {

struct VariationalConfig {
  double lambda = 1e-2;
  int iterations = 500;
  bool nonnegative = true;
  int power_iterations = 20;
  std::uint64_t seed = 0;  // power-iteration start vector
};

struct TvTrace {
  // Objective of the ergodic (averaged) iterate every `checkpoint_every` iterations.
  std::vector<double> averaged_objective;
  int checkpoint_every = 10;
  double operator_norm = 0.0;  // estimated ||W||
  double initial_objective = 0.0;
};

// 0.5 ||W x - y||^2 + lambda * TV_iso(x), forward differences, Neumann boundary.
double tv_objective(const MatrixRef& w, std::span<const double> y, const Image& x, double lambda);

// Isotropic TV (no smoothing).
double total_variation(const Image& x);

// Chambolle-Pock primal-dual iterations on min 0.5||Wx-y||^2 + lambda TV(x)
// (+ x >= 0). Returns the final iterate.
Image tv_min_reconstruct(const MaskSet& w, std::span<const double> y, const VariationalConfig& config,
                         TvTrace* trace = nullptr);

}  // namespace ghostkit::variational
