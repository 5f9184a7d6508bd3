#include "core/fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace ghostkit::fft {
namespace {

// FFTW planning is not thread safe; execution is.
std::mutex planner_mutex;

}  // namespace

void dft2(std::vector<std::complex<double>>& data, std::size_t h, std::size_t w, bool forward) {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex);
    plan = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), buf, buf,
                            forward ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex);
  fftw_destroy_plan(plan);
}

}  // namespace ghostkit::fft
