#pragma once

#include <cstddef>
#include <memory>
#include <span>

#include "widedoa/linalg.hpp"

namespace widedoa {

// Real <-> half-complex transforms of a fixed length, backed by FFTW.
// Plans are created with FFTW_ESTIMATE so results do not depend on timing.
// Plan creation goes through a process-wide mutex; execution is reentrant.
class RealFft {
 public:
  explicit RealFft(std::size_t length);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t length() const noexcept { return length_; }
  std::size_t num_bins() const noexcept { return length_ / 2 + 1; }

  // Unnormalized forward transform; `out` must hold num_bins() values.
  void forward(std::span<const double> in, std::span<Complex> out) const;

  // Unnormalized inverse (no 1/N). The imaginary parts of the DC and, for
  // even lengths, Nyquist bins are ignored.
  void inverse(std::span<const Complex> in, std::span<double> out) const;

 private:
  struct Plans;
  std::size_t length_ = 0;
  std::unique_ptr<Plans> plans_;
};

}  // namespace widedoa
