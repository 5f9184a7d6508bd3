#pragma once

#include <cstddef>

namespace ghostkit::blas {

// Row-major C = alpha * op(A) * op(B) + beta * C, forwarded to OpenBLAS.
// The library is pinned to one internal thread so results never depend on
// the BLAS thread count.
template <typename T>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, T alpha,
          const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc);

// y = alpha * op(A) * x + beta * y, A row-major rows x cols.
template <typename T>
void gemv(bool trans, std::size_t rows, std::size_t cols, T alpha, const T* a, std::size_t lda,
          const T* x, T beta, T* y);

}  // namespace ghostkit::blas
