#pragma once

#include <span>
#include <vector>

#include "widedoa/subspace.hpp"

namespace widedoa {

enum class LsSolver { kLeastSquares, kTotalLeastSquares };

enum class AccumulationMode { kBatch, kIterative };

struct EspritSolution {
  // doas_deg[q] was computed from psi_eigenvalues[q]; sorted by DOA.
  std::vector<Complex> psi_eigenvalues;
  std::vector<double> doas_deg;
  // Sine argument had to be clamped, or the frequency is above the array's
  // unambiguous limit so the phase may have wrapped.
  std::vector<bool> out_of_range;
  double frequency_used = 0.0;
  LsSolver solver = LsSolver::kTotalLeastSquares;
  double subspace_gap = 0.0;
  bool weak_gap = false;

  bool any_out_of_range() const;
  bool reliable() const { return !weak_gap && !any_out_of_range(); }
};

// Shift-invariance solve between the first and last P - 1 rows of Es, then
// theta = asin(-arg(lambda) c / (2 pi f d)). The returned gap is +infinity;
// callers that know the spectrum fill it in.
EspritSolution esprit_from_subspace(const CMatrix& signal_subspace, double frequency,
                                    const ArrayGeometry& geom,
                                    LsSolver solver = LsSolver::kTotalLeastSquares);

EspritSolution narrowband_esprit(const BinCovariance& cov, int num_sources,
                                 const ArrayGeometry& geom,
                                 LsSolver solver = LsSolver::kTotalLeastSquares);

// Single-source wideband pipeline: per-bin dominant eigenvector, rotated to
// f_ref, weighted by its eigenvalue and summed. f_ref <= 0 selects the
// highest bin.
EspritSolution wideband_esprit_single(std::span<const BinCovariance> covs,
                                      const ArrayGeometry& geom, double reference_frequency = 0.0,
                                      LsSolver solver = LsSolver::kTotalLeastSquares,
                                      const RotationOptions& rotation = {});

// Multi-source wideband pipeline over reconstructed covariances, referenced
// to the highest bin.
EspritSolution wideband_esprit_multi(std::span<const BinCovariance> covs, int num_sources,
                                     const ArrayGeometry& geom,
                                     AccumulationMode mode = AccumulationMode::kBatch,
                                     LsSolver solver = LsSolver::kTotalLeastSquares,
                                     const AccumulationOptions& opts = {});

}  // namespace widedoa
