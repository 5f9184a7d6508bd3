#include "support/oracles.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace gktest {

namespace {

Eigen::MatrixXd to_eigen(const ghostkit::MatrixRef& w) {
  Eigen::MatrixXd m(w.rows, w.cols);
  for (std::size_t r = 0; r < w.rows; ++r)
    for (std::size_t c = 0; c < w.cols; ++c) m(r, c) = w.data[r * w.cols + c];
  return m;
}

}  // namespace

std::vector<double> dense_min_norm(const ghostkit::MatrixRef& w, std::span<const double> y) {
  const Eigen::MatrixXd m = to_eigen(w);
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(y.data(), Eigen::Index(y.size()));
  Eigen::VectorXd x;
  if (w.rows >= w.cols) {
    x = (m.transpose() * m).ldlt().solve(m.transpose() * b);
  } else {
    x = m.transpose() * (m * m.transpose()).ldlt().solve(b);
  }
  return {x.data(), x.data() + x.size()};
}

std::vector<double> svd_min_norm(const ghostkit::MatrixRef& w, std::span<const double> y) {
  const Eigen::MatrixXd m = to_eigen(w);
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(y.data(), Eigen::Index(y.size()));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cutoff = s.size() ? s(0) * 1e-10 * double(std::max(w.rows, w.cols)) : 0.0;
  Eigen::VectorXd coef = svd.matrixU().transpose() * b;
  for (Eigen::Index i = 0; i < s.size(); ++i) coef(i) = s(i) > cutoff ? coef(i) / s(i) : 0.0;
  const Eigen::VectorXd x = svd.matrixV() * coef;
  return {x.data(), x.data() + x.size()};
}

double nullspace_fraction(const ghostkit::MatrixRef& w, std::span<const double> x) {
  const Eigen::MatrixXd m = to_eigen(w);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cutoff = s.size() ? s(0) * 1e-10 * double(std::max(w.rows, w.cols)) : 0.0;
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cutoff) ++rank;
  const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x.data(), Eigen::Index(x.size()));
  const Eigen::MatrixXd null_basis = svd.matrixV().rightCols(Eigen::Index(w.cols) - rank);
  const double norm = v.norm();
  return norm > 0.0 ? (null_basis.transpose() * v).norm() / norm : 0.0;
}

double relative_difference(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    ref += b[i] * b[i];
  }
  return ref > 0.0 ? std::sqrt(diff / ref) : std::sqrt(diff);
}

}  // namespace gktest
