#include "core/blas.hpp"

#include <cblas.h>

#include <mutex>

extern "C" void openblas_set_num_threads(int);

namespace ghostkit::blas {
namespace {

void pin_threads() {
  static std::once_flag once;
  std::call_once(once, [] { openblas_set_num_threads(1); });
}

inline CBLAS_TRANSPOSE op(bool t) { return t ? CblasTrans : CblasNoTrans; }
inline int ld(std::size_t v) { return static_cast<int>(v); }

}  // namespace

template <>
void gemm<float>(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, float alpha,
                 const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta,
                 float* c, std::size_t ldc) {
  if (m == 0 || n == 0) return;
  pin_threads();
  cblas_sgemm(CblasRowMajor, op(ta), op(tb), ld(m), ld(n), ld(k), alpha, a, ld(lda), b, ld(ldb),
              beta, c, ld(ldc));
}

template <>
void gemm<double>(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
                  const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
                  double* c, std::size_t ldc) {
  if (m == 0 || n == 0) return;
  pin_threads();
  cblas_dgemm(CblasRowMajor, op(ta), op(tb), ld(m), ld(n), ld(k), alpha, a, ld(lda), b, ld(ldb),
              beta, c, ld(ldc));
}

template <>
void gemv<float>(bool trans, std::size_t rows, std::size_t cols, float alpha, const float* a,
                 std::size_t lda, const float* x, float beta, float* y) {
  if (rows == 0 || cols == 0) return;
  pin_threads();
  cblas_sgemv(CblasRowMajor, op(trans), ld(rows), ld(cols), alpha, a, ld(lda), x, 1, beta, y, 1);
}

template <>
void gemv<double>(bool trans, std::size_t rows, std::size_t cols, double alpha, const double* a,
                  std::size_t lda, const double* x, double beta, double* y) {
  if (rows == 0 || cols == 0) return;
  pin_threads();
  cblas_dgemv(CblasRowMajor, op(trans), ld(rows), ld(cols), alpha, a, ld(lda), x, 1, beta, y, 1);
}

}  // namespace ghostkit::blas
