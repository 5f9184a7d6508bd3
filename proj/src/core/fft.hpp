#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace ghostkit::fft {

// In-place unnormalized 2D DFT of a row-major h x w array (FFTW sign
// convention: forward uses exp(-2 pi i k n / N)).
void dft2(std::vector<std::complex<double>>& data, std::size_t h, std::size_t w, bool forward);

// Signed frequency index of bin k in an n-point transform.
inline double signed_bin(std::size_t k, std::size_t n) {
  return k <= n / 2 ? double(k) : double(k) - double(n);
}

}  // namespace ghostkit::fft
