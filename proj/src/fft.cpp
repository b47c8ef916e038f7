#include "widedoa/fft.hpp"

#include <mutex>
#include <vector>

#include <fftw3.h>

#include "widedoa/errors.hpp"

namespace widedoa {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct RealFft::Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
  double* real_buf = nullptr;
  fftw_complex* complex_buf = nullptr;

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
    fftw_free(real_buf);
    fftw_free(complex_buf);
  }
};

RealFft::RealFft(std::size_t length) : length_(length), plans_(std::make_unique<Plans>()) {
  if (length == 0) throw DomainError("FFT length must be positive");
  const int n = static_cast<int>(length);
  std::lock_guard lock(planner_mutex());
  plans_->real_buf = fftw_alloc_real(length);
  plans_->complex_buf = fftw_alloc_complex(length / 2 + 1);
  plans_->forward =
      fftw_plan_dft_r2c_1d(n, plans_->real_buf, plans_->complex_buf, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans_->inverse =
      fftw_plan_dft_c2r_1d(n, plans_->complex_buf, plans_->real_buf, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plans_->forward || !plans_->inverse) throw NumericalError("FFTW planning failed");
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::forward(std::span<const double> in, std::span<Complex> out) const {
  if (in.size() != length_ || out.size() != num_bins()) {
    throw DomainError("forward FFT buffer size mismatch");
  }
  // Out-of-place r2c preserves its input.
  fftw_execute_dft_r2c(plans_->forward, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::inverse(std::span<const Complex> in, std::span<double> out) const {
  if (in.size() != num_bins() || out.size() != length_) {
    throw DomainError("inverse FFT buffer size mismatch");
  }
  std::vector<Complex> scratch(in.begin(), in.end());
  fftw_execute_dft_c2r(plans_->inverse, reinterpret_cast<fftw_complex*>(scratch.data()),
                       out.data());
}

}  // namespace widedoa
