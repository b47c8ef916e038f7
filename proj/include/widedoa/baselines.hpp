#pragma once

#include <span>
#include <vector>

#include "widedoa/esprit.hpp"

namespace widedoa {

struct HistogramConfig {
  double bin_width = 1.0;
  double min_peak_separation = 10.0;
  double range_min = -90.0;
  double range_max = 90.0;

  void validate() const;
};

struct PeakEstimate {
  std::vector<double> doas_deg;  // ascending, at most Q entries
  bool insufficient_peaks = false;
  int estimates_pooled = 0;
};

// Histogram peak picking: the Q fullest bins at least min_peak_separation
// apart, each refined to the mean of the estimates within +-bin_width of the
// bin center.
PeakEstimate histogram_peaks(std::span<const double> estimates_deg, int num_sources,
                             const HistogramConfig& cfg);

// Narrowband ESPRIT on every `bin_stride`-th bin, pooling the estimates that
// did not need clamping.
PeakEstimate hist_esprit(std::span<const BinCovariance> covs, int num_sources,
                         const ArrayGeometry& geom, const HistogramConfig& cfg = {},
                         LsSolver solver = LsSolver::kTotalLeastSquares, int bin_stride = 1);

struct CssConfig {
  double reference_frequency = 0.0;  // <= 0: highest bin
  double grid_resolution = 0.1;      // degrees
  std::vector<double> initial_doas;  // empty: automatic
  // Automatic initialization: hist-ESPRIT with a coarse histogram over a
  // decimated set of bins.
  double init_bin_width = 5.0;
  int init_bin_stride = 4;

  void validate() const;
};

// Unitary focusing matrix T = V W^H from the SVD V S W^H of
// A(f_ref) A(f)^H, evaluated at the given directions.
CMatrix focusing_matrix(const ArrayGeometry& geom, double reference_frequency, double frequency,
                        std::span<const double> doas_deg);

// sum_i T_i R_i T_i^H over the bins.
CMatrix css_focused_covariance(std::span<const BinCovariance> covs, const ArrayGeometry& geom,
                               double reference_frequency, std::span<const double> doas_deg);

// MUSIC pseudo-spectrum 1 / ||En^H a(theta)||^2 over a regular angle grid.
struct SpatialSpectrum {
  std::vector<double> angles_deg;
  std::vector<double> power;
};

SpatialSpectrum music_spectrum(const CMatrix& covariance, int num_sources,
                               const ArrayGeometry& geom, double frequency,
                               double grid_resolution);

// Q largest local maxima of the spectrum, ascending by angle.
PeakEstimate spectrum_peaks(const SpatialSpectrum& spectrum, int num_sources);

PeakEstimate css_localize(std::span<const BinCovariance> covs, int num_sources,
                          const ArrayGeometry& geom, const CssConfig& cfg = {});

}  // namespace widedoa
