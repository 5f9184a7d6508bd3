#pragma once

#include <span>
#include <vector>

#include "core/image.hpp"

namespace gktest {

// Minimum-norm least-squares solution from the dense normal equations:
// (W^T W)^{-1} W^T y when W has full column rank, W^T (W W^T)^{-1} y otherwise.
std::vector<double> dense_min_norm(const ghostkit::MatrixRef& w, std::span<const double> y);

// W^+ y from a thin SVD, dropping singular values below a relative cutoff.
// Valid for rank-deficient W too.
std::vector<double> svd_min_norm(const ghostkit::MatrixRef& w, std::span<const double> y);

// ||P_ker(W) x|| / ||x|| with the null-space basis taken from an SVD.
double nullspace_fraction(const ghostkit::MatrixRef& w, std::span<const double> x);

double relative_difference(std::span<const double> a, std::span<const double> b);

}  // namespace gktest
