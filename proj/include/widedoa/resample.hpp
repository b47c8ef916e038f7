#pragma once

#include <span>
#include <vector>

namespace widedoa {

// Rational-ratio polyphase resampler, rate ratio out/in reduced to L/M.
// Prototype low-pass: linear-phase Kaiser-windowed sinc (beta 8.6, 16 zero
// crossings per side at the lower rate, cutoff 0.95 of the lower Nyquist),
// evaluated only at taps that hit nonzero samples of the zero-stuffed input.
// Group delay is removed: output sample m aligns with input time m * M / L.
class PolyphaseResampler {
 public:
  PolyphaseResampler(long input_rate, long output_rate);

  long up() const { return up_; }
  long down() const { return down_; }

  std::vector<double> process(std::span<const double> input) const;

 private:
  long up_ = 1;
  long down_ = 1;
  long half_length_ = 0;  // taps on each side of the center, upsampled domain
  std::vector<double> taps_;
};

std::vector<double> resample(std::span<const double> input, double input_rate,
                             double output_rate);

}  // namespace widedoa
