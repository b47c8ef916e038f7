#include "widedoa/resample.hpp"

#include <cmath>
#include <numeric>

#include "widedoa/errors.hpp"
#include "widedoa/linalg.hpp"

namespace widedoa {
namespace {

constexpr double kKaiserBeta = 8.6;
constexpr long kZeroCrossings = 16;
constexpr double kCutoffFraction = 0.95;

double kaiser(double x, double beta) {
  // x in [-1, 1]
  const double arg = beta * std::sqrt(std::max(0.0, 1.0 - x * x));
  return std::cyl_bessel_i(0.0, arg) / std::cyl_bessel_i(0.0, beta);
}

long ceil_div(long a, long b) {
  // b > 0
  return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

}  // namespace

PolyphaseResampler::PolyphaseResampler(long input_rate, long output_rate) {
  if (input_rate <= 0 || output_rate <= 0) throw DomainError("sample rates must be positive");
  const long g = std::gcd(input_rate, output_rate);
  up_ = output_rate / g;
  down_ = input_rate / g;
  const long factor = std::max(up_, down_);
  half_length_ = kZeroCrossings * factor;
  const double cutoff = kCutoffFraction * 0.5 / static_cast<double>(factor);  // cycles/sample
  taps_.resize(static_cast<std::size_t>(2 * half_length_ + 1));
  for (long k = -half_length_; k <= half_length_; ++k) {
    const double x = static_cast<double>(k);
    const double sinc = k == 0 ? 2.0 * cutoff : std::sin(2.0 * kPi * cutoff * x) / (kPi * x);
    taps_[static_cast<std::size_t>(k + half_length_)] =
        up_ * sinc * kaiser(x / static_cast<double>(half_length_ + 1), kKaiserBeta);
  }
}

std::vector<double> PolyphaseResampler::process(std::span<const double> input) const {
  if (up_ == 1 && down_ == 1) return {input.begin(), input.end()};
  const long n_in = static_cast<long>(input.size());
  const long n_out = (n_in * up_ + down_ - 1) / down_;
  std::vector<double> out(static_cast<std::size_t>(n_out), 0.0);
  for (long m = 0; m < n_out; ++m) {
    // Output m sits at index t = m * down in the zero-stuffed input, where
    // only indices n * up carry samples.
    const long t = m * down_;
    const long n_lo = ceil_div(t - half_length_, up_);
    const long n_hi = (t + half_length_) / up_;
    double acc = 0.0;
    for (long n = std::max(0L, n_lo); n <= std::min(n_in - 1, n_hi); ++n) {
      const long k = t - n * up_;
      acc += taps_[static_cast<std::size_t>(k + half_length_)] * input[static_cast<std::size_t>(n)];
    }
    out[static_cast<std::size_t>(m)] = acc;
  }
  return out;
}

std::vector<double> resample(std::span<const double> input, double input_rate,
                             double output_rate) {
  const long in_rate = std::lround(input_rate);
  const long out_rate = std::lround(output_rate);
  if (std::abs(input_rate - static_cast<double>(in_rate)) > 1e-9 ||
      std::abs(output_rate - static_cast<double>(out_rate)) > 1e-9) {
    throw DomainError("resampling requires integer sample rates");
  }
  if (in_rate == out_rate) return {input.begin(), input.end()};
  return PolyphaseResampler(in_rate, out_rate).process(input);
}

}  // namespace widedoa
