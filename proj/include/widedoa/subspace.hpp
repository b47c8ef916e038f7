#pragma once

#include <span>

#include "widedoa/stft.hpp"

namespace widedoa {

// Eigen-split of one narrowband covariance into signal and noise parts.
struct SubspaceEstimate {
  double frequency = 0.0;
  CMatrix signal_vectors;  // P x Q, gauge-fixed
  CMatrix noise_vectors;   // P x (P - Q)
  RVector signal_values;   // descending
  RVector noise_values;    // descending

  int num_sensors() const { return static_cast<int>(signal_vectors.rows()); }
  int num_sources() const { return static_cast<int>(signal_vectors.cols()); }
};

// How sensor phases are lifted before being scaled by f_ref / f.
enum class PhaseBranch {
  // Phases are unwrapped along the sensor axis starting from sensor 0, so an
  // element carries its full inter-sensor phase progression. Exact for
  // steering-like vectors below the aliasing limit.
  kSensorUnwrapped,
  // Each element's principal argument in (-pi, pi] is scaled on its own.
  kPrincipal,
};

// Which vectors of the signal subspace the phase scaling acts on.
enum class RotationBasis {
  // The subspace is first re-expressed in its rotational-invariance basis
  // (the eigenvectors of the shift operator between the two subarrays), whose
  // columns are steering-like. Those columns are rotated and the mixing
  // between them is carried over. Exact for any number of sources in the
  // noiseless model.
  kInvariance,
  // Eigenvectors are rotated directly, element by element. Exact for one
  // source; for several sources the eigenvectors are mixtures of steering
  // vectors and the rotated span is only approximate.
  kEigenvector,
};

struct RotationOptions {
  RotationBasis basis = RotationBasis::kInvariance;
  PhaseBranch branch = PhaseBranch::kSensorUnwrapped;
};

// Signal subspace of one bin re-referenced to `reference_frequency`.
struct RotatedSubspace {
  double reference_frequency = 0.0;
  double source_frequency = 0.0;
  CMatrix vectors;  // P x Q
  RVector values;   // Q

  int num_sources() const { return static_cast<int>(vectors.cols()); }
};

enum class Reconstruction {
  // R' = U's Ls pinv(U's), rank Q.
  kSignalSubspace,
  // R' = U' L U'^-1 over all P eigenpairs, each eigenvector rotated element
  // by element (noise vectors included). Kept for comparison only.
  kFullRank,
};

struct AccumulationOptions {
  RotationOptions rotation;
  Reconstruction reconstruction = Reconstruction::kSignalSubspace;
};

struct WidebandCovariance {
  CMatrix matrix;  // P x P
  double reference_frequency = 0.0;
  int bins_accumulated = 0;
  int bins_skipped = 0;
  double total_weight = 0.0;  // sum of raw weights before normalization
};

struct WidebandSubspace {
  CMatrix vectors;  // P x Q, orthonormal
  RVector singular_values;  // all P, descending
  double gap = 0.0;         // sigma_Q / sigma_{Q+1}
  bool weak_gap = false;    // gap below kWeakGapRatio
};

inline constexpr double kWeakGapRatio = 1.5;
inline constexpr double kHermitianTolerance = 1e-10;
inline constexpr double kMaxConditionNumber = 1e12;

// Hermitian eigendecomposition sorted by descending eigenvalue (ties keep the
// solver's order), gauge-fixed, split into Q signal and P - Q noise pairs.
// Throws DomainError when Q is outside [1, P) or the matrix is not Hermitian.
SubspaceEstimate decompose(const CMatrix& matrix, double frequency, int num_sources);
SubspaceEstimate decompose(const BinCovariance& cov, int num_sources);

// Scales the phase of every element by `exponent`, keeping magnitudes.
CMatrix scale_phases(const CMatrix& vectors, double exponent, PhaseBranch branch);

RotatedSubspace rotate_subspace(const SubspaceEstimate& est, double reference_frequency,
                                const RotationOptions& opts = {});

// Bin reliability weight: sum of the signal eigenvalues.
double bin_weight(const SubspaceEstimate& est);

// Weighted sum of rotated single-source vectors, each gauge-fixed first,
// normalized to unit length. Throws DomainError for Q != 1, mismatched
// references, or weights that sum to zero.
CVector accumulate_single_source(std::span<const RotatedSubspace> rotated,
                                 std::span<const double> weights);

// R' = U' diag(values) pinv(U'). Throws DegenerateSubspaceError when the
// rotated vectors are numerically rank deficient.
CMatrix reconstruct_covariance(const RotatedSubspace& rotated);

// Literal full-rank variant: all P eigenvectors rotated element by element and
// recombined with the inverse eigenvector matrix.
CMatrix reconstruct_full_rank(const SubspaceEstimate& est, double reference_frequency,
                              PhaseBranch branch);

// Weighted sum of per-bin reconstructions referenced to f_ref. Weights are
// normalized to sum to one. Degenerate bins are skipped with a warning; throws
// DegenerateSubspaceError only if no bin survives.
WidebandCovariance accumulate_wideband(std::span<const BinCovariance> covs, int num_sources,
                                       double reference_frequency,
                                       const AccumulationOptions& opts = {});

// Sequential variant: the accumulator is carried from bin to bin with
// adjacent-frequency rotations, truncated to its dominant Q eigenpairs before
// each step. Bins must be strictly ascending; the result is referenced to the
// highest bin.
WidebandCovariance accumulate_iterative(std::span<const BinCovariance> covs, int num_sources,
                                        const AccumulationOptions& opts = {});

WidebandSubspace wideband_signal_subspace(const WidebandCovariance& wb, int num_sources);

}  // namespace widedoa
