#pragma once

#include <vector>

#include "widedoa/geometry.hpp"
#include "widedoa/synthesis.hpp"

namespace widedoa {

enum class WindowKind { kHann, kRectangular };

struct StftConfig {
  int frame_length = 1024;
  int hop = 512;
  WindowKind window = WindowKind::kHann;
  double sample_rate = 16000.0;

  void validate() const;
  int num_bins() const { return frame_length / 2 + 1; }
  double bin_spacing() const { return sample_rate / frame_length; }
  double bin_frequency(int bin) const { return bin * bin_spacing(); }
};

// Periodic window of the configured kind.
RVector make_window(WindowKind kind, int length);

struct MultichannelSpectrum {
  // frames[t] is P x B: column b holds the P-channel snapshot of bin b.
  std::vector<CMatrix> frames;
  std::vector<double> bin_frequencies;
  int hop = 0;
  int frame_length = 0;
  double sample_rate = 0.0;

  int num_frames() const { return static_cast<int>(frames.size()); }
  int num_bins() const { return static_cast<int>(bin_frequencies.size()); }
  int num_channels() const { return frames.empty() ? 0 : static_cast<int>(frames.front().rows()); }
  double frame_start_time(int t) const { return static_cast<double>(t) * hop / sample_rate; }
  double frame_end_time(int t) const {
    return (static_cast<double>(t) * hop + frame_length) / sample_rate;
  }
};

struct BinCovariance {
  int bin = 0;
  double frequency = 0.0;
  CMatrix matrix;  // P x P, Hermitian
  int snapshot_count = 0;

  int num_sensors() const { return static_cast<int>(matrix.rows()); }
};

// One-sided STFT: 1 + floor((N - frame_length) / hop) frames.
MultichannelSpectrum stft(const MultichannelSignal& signal, const StftConfig& cfg);

// Sample covariance (1/L) sum x x^H over frames [first, last) for every bin.
std::vector<BinCovariance> estimate_bin_covariances(const MultichannelSpectrum& spec, int first,
                                                    int last);

// Same as estimate_bin_covariances followed by band_select, without forming
// the covariances of bins outside the band.
std::vector<BinCovariance> estimate_bin_covariances_in_band(const MultichannelSpectrum& spec,
                                                            int first, int last, double f_low,
                                                            double f_high);

// Keeps bins with f_low <= f <= f_high. The DC bin never survives.
std::vector<BinCovariance> band_select(const std::vector<BinCovariance>& covs, double f_low,
                                       double f_high);

struct BandLimit {
  double f_low = 0.0;
  double f_high = 0.0;
  bool truncated = false;  // f_high was lowered to the aliasing limit
};

// Clamps the upper band edge to the array's lowest aliasing frequency and logs
// when that happens.
BandLimit limit_band_to_aliasing(const ArrayGeometry& geom, double f_low, double f_high);

}  // namespace widedoa
