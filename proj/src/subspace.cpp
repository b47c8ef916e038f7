#include "widedoa/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include <spdlog/spdlog.h>

#include "widedoa/errors.hpp"

namespace widedoa {
namespace {

// Wrapped phase difference arg(a conj(b)) in (-pi, pi]; zero if either is 0.
double phase_step(Complex a, Complex b) { return std::arg(a * std::conj(b)); }

struct SortedEigen {
  CMatrix vectors;
  RVector values;
};

// Hermitian eigendecomposition, descending, stable on ties, gauge-fixed.
SortedEigen sorted_eigen(const CMatrix& matrix) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(matrix);
  if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigendecomposition failed");
  const Eigen::Index n = matrix.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const auto& ev = es.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&ev](Eigen::Index a, Eigen::Index b) { return ev(a) > ev(b); });
  SortedEigen out;
  out.vectors.resize(n, n);
  out.values.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.vectors.col(k) = es.eigenvectors().col(order[static_cast<std::size_t>(k)]);
    out.values(k) = ev(order[static_cast<std::size_t>(k)]);
  }
  fix_column_gauge(out.vectors);
  return out;
}

// Pseudo-inverse of a full-column-rank matrix through its Gram matrix.
CMatrix column_pinv(const CMatrix& v) {
  const CMatrix gram = v.adjoint() * v;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(gram, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || std::sqrt(hi / lo) > kMaxConditionNumber) {
    throw DegenerateSubspaceError("rotated signal vectors are rank deficient");
  }
  return gram.ldlt().solve(v.adjoint());
}

// Invariance-basis rotation for Q >= 2: see RotationBasis::kInvariance.
RotatedSubspace rotate_invariance_basis(const SubspaceEstimate& est, double ratio,
                                        double reference_frequency, PhaseBranch branch) {
  const CMatrix& u = est.signal_vectors;
  const Eigen::Index p = u.rows();
  const Eigen::Index q = u.cols();

  const CMatrix psi = u.topRows(p - 1).colPivHouseholderQr().solve(u.bottomRows(p - 1));
  Eigen::ComplexEigenSolver<CMatrix> ces(psi);
  if (ces.info() != Eigen::Success) throw NumericalError("shift operator eigensolve failed");

  // Steering-like basis A = U V, each column scaled so its first entry is 1.
  CMatrix mix = ces.eigenvectors();
  CMatrix basis = u * mix;
  for (Eigen::Index k = 0; k < q; ++k) {
    const Complex head = basis(0, k);
    if (std::abs(head) <= 1e-8 * basis.col(k).norm()) {
      throw DegenerateSubspaceError("invariance basis vector vanishes at the reference sensor");
    }
    basis.col(k) /= head;
    mix.col(k) /= head;
  }
  // U = A mix^-1, so U L U^H = A S A^H with S = mix^-1 L mix^-H.
  Eigen::PartialPivLU<CMatrix> lu(mix);
  const CMatrix mix_inv = lu.inverse();
  if (!mix_inv.allFinite() || condition_number(mix) > kMaxConditionNumber) {
    throw DegenerateSubspaceError("invariance basis is ill-conditioned");
  }
  const CMatrix coupling =
      mix_inv * est.signal_values.cast<Complex>().asDiagonal() * mix_inv.adjoint();

  const CMatrix rotated = scale_phases(basis, ratio, branch);
  Eigen::HouseholderQR<CMatrix> qr(rotated);
  const CMatrix w = qr.householderQ() * CMatrix::Identity(p, q);
  const CMatrix r = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
  CMatrix inner = r * coupling * r.adjoint();
  inner = 0.5 * (inner + inner.adjoint()).eval();

  const SortedEigen eig = sorted_eigen(inner);
  RotatedSubspace out;
  out.reference_frequency = reference_frequency;
  out.source_frequency = est.frequency;
  out.vectors = w * eig.vectors;
  fix_column_gauge(out.vectors);
  out.values = eig.values.cwiseMax(0.0);
  // Carry the bin's signal power unchanged.
  const double power = est.signal_values.sum();
  const double carried = out.values.sum();
  if (carried > 0.0) out.values *= power / carried;
  return out;
}

void check_reference(double f) {
  if (!(f > 0.0)) throw DomainError("reference frequency must be positive");
}

}  // namespace

SubspaceEstimate decompose(const CMatrix& matrix, double frequency, int num_sources) {
  const Eigen::Index p = matrix.rows();
  if (matrix.cols() != p) throw DomainError("covariance must be square");
  if (num_sources < 1 || num_sources >= p) {
    throw DomainError("number of sources must lie in [1, P), got " + std::to_string(num_sources));
  }
  if (!matrix.allFinite()) throw DomainError("covariance has non-finite entries");
  if (!is_hermitian(matrix, kHermitianTolerance)) throw DomainError("covariance is not Hermitian");

  const SortedEigen eig = sorted_eigen(matrix);
  SubspaceEstimate est;
  est.frequency = frequency;
  est.signal_vectors = eig.vectors.leftCols(num_sources);
  est.noise_vectors = eig.vectors.rightCols(p - num_sources);
  est.signal_values = eig.values.head(num_sources);
  est.noise_values = eig.values.tail(p - num_sources);
  return est;
}

SubspaceEstimate decompose(const BinCovariance& cov, int num_sources) {
  return decompose(cov.matrix, cov.frequency, num_sources);
}

CMatrix scale_phases(const CMatrix& vectors, double exponent, PhaseBranch branch) {
  if (exponent == 1.0) return vectors;
  CMatrix out(vectors.rows(), vectors.cols());
  for (Eigen::Index k = 0; k < vectors.cols(); ++k) {
    double phase = 0.0;
    for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
      const Complex z = vectors(i, k);
      if (branch == PhaseBranch::kPrincipal || i == 0) {
        phase = std::arg(z);
      } else {
        phase += phase_step(z, vectors(i - 1, k));
      }
      out(i, k) = std::polar(std::abs(z), phase * exponent);
    }
  }
  return out;
}

RotatedSubspace rotate_subspace(const SubspaceEstimate& est, double reference_frequency,
                                const RotationOptions& opts) {
  if (!(est.frequency > 0.0)) throw DomainError("subspace frequency must be positive");
  check_reference(reference_frequency);
  const double ratio = reference_frequency / est.frequency;
  if (ratio == 1.0) {
    return {reference_frequency, est.frequency, est.signal_vectors, est.signal_values};
  }
  if (est.num_sources() >= 2 && opts.basis == RotationBasis::kInvariance) {
    return rotate_invariance_basis(est, ratio, reference_frequency, opts.branch);
  }
  return {reference_frequency, est.frequency, scale_phases(est.signal_vectors, ratio, opts.branch),
          est.signal_values};
}

double bin_weight(const SubspaceEstimate& est) {
  return std::max(0.0, est.signal_values.sum());
}

CVector accumulate_single_source(std::span<const RotatedSubspace> rotated,
                                 std::span<const double> weights) {
  if (rotated.empty() || rotated.size() != weights.size()) {
    throw DomainError("need one weight per rotated subspace, at least one of each");
  }
  const double f_ref = rotated.front().reference_frequency;
  const Eigen::Index p = rotated.front().vectors.rows();
  CVector acc = CVector::Zero(p);
  double total = 0.0;
  for (std::size_t i = 0; i < rotated.size(); ++i) {
    const auto& r = rotated[i];
    if (r.num_sources() != 1) throw DomainError("single-source accumulation needs Q = 1");
    if (r.vectors.rows() != p) throw DomainError("sensor counts differ between bins");
    if (std::abs(r.reference_frequency - f_ref) > 1e-9 * f_ref) {
      throw DomainError("rotated subspaces refer to different frequencies");
    }
    if (!(weights[i] >= 0.0)) throw DomainError("weights must be non-negative");
    CMatrix v = r.vectors;
    fix_column_gauge(v);
    acc += weights[i] * v.col(0);
    total += weights[i];
  }
  if (!(total > 0.0)) throw DomainError("all accumulation weights are zero");
  const double norm = acc.norm();
  if (!(norm > 0.0)) throw DegenerateSubspaceError("accumulated vector vanished");
  return acc / norm;
}

CMatrix reconstruct_covariance(const RotatedSubspace& rotated) {
  if (rotated.num_sources() < 1) throw DomainError("nothing to reconstruct");
  const CMatrix& v = rotated.vectors;
  return v * rotated.values.cast<Complex>().asDiagonal() * column_pinv(v);
}

CMatrix reconstruct_full_rank(const SubspaceEstimate& est, double reference_frequency,
                              PhaseBranch branch) {
  check_reference(reference_frequency);
  const Eigen::Index p = est.num_sensors();
  CMatrix u(p, p);
  u << est.signal_vectors, est.noise_vectors;
  RVector values(p);
  values << est.signal_values, est.noise_values;
  const CMatrix rotated = scale_phases(u, reference_frequency / est.frequency, branch);
  if (condition_number(rotated) > kMaxConditionNumber) {
    throw DegenerateSubspaceError("rotated eigenvector matrix is singular");
  }
  return rotated * values.cast<Complex>().asDiagonal() * rotated.partialPivLu().inverse();
}

namespace {

CMatrix bin_contribution(const SubspaceEstimate& est, double reference_frequency,
                         const AccumulationOptions& opts) {
  if (opts.reconstruction == Reconstruction::kFullRank) {
    return reconstruct_full_rank(est, reference_frequency, opts.rotation.branch);
  }
  return reconstruct_covariance(rotate_subspace(est, reference_frequency, opts.rotation));
}

void warn_skipped(double frequency, const std::exception& e) {
  spdlog::warn("skipping bin at {:.3f} Hz: {}", frequency, e.what());
}

}  // namespace

WidebandCovariance accumulate_wideband(std::span<const BinCovariance> covs, int num_sources,
                                       double reference_frequency,
                                       const AccumulationOptions& opts) {
  if (covs.empty()) throw DomainError("no bins to accumulate");
  check_reference(reference_frequency);
  for (const auto& c : covs) {
    if (c.frequency > reference_frequency * (1.0 + 1e-12)) {
      throw DomainError("bin above the reference frequency");
    }
  }
  const Eigen::Index p = covs.front().matrix.rows();
  WidebandCovariance wb;
  wb.reference_frequency = reference_frequency;
  wb.matrix = CMatrix::Zero(p, p);
  for (const auto& c : covs) {
    const SubspaceEstimate est = decompose(c, num_sources);
    const double beta = bin_weight(est);
    try {
      wb.matrix += beta * bin_contribution(est, reference_frequency, opts);
      wb.total_weight += beta;
      ++wb.bins_accumulated;
    } catch (const DegenerateSubspaceError& e) {
      warn_skipped(c.frequency, e);
      ++wb.bins_skipped;
    }
  }
  if (wb.bins_accumulated == 0 || !(wb.total_weight > 0.0)) {
    throw DegenerateSubspaceError("no bin contributed to the wideband covariance");
  }
  wb.matrix /= wb.total_weight;
  return wb;
}

WidebandCovariance accumulate_iterative(std::span<const BinCovariance> covs, int num_sources,
                                        const AccumulationOptions& opts) {
  if (covs.size() < 2) throw DomainError("iterative accumulation needs at least two bins");
  for (std::size_t i = 1; i < covs.size(); ++i) {
    if (!(covs[i].frequency > covs[i - 1].frequency)) {
      throw DomainError("bins must be strictly ascending in frequency");
    }
  }
  if (!(covs.front().frequency > 0.0)) throw DomainError("bin frequencies must be positive");

  std::vector<SubspaceEstimate> ests;
  ests.reserve(covs.size());
  double total = 0.0;
  for (const auto& c : covs) {
    ests.push_back(decompose(c, num_sources));
    total += bin_weight(ests.back());
  }
  if (!(total > 0.0)) throw DegenerateSubspaceError("all bins carry zero weight");

  WidebandCovariance wb;
  std::optional<CMatrix> acc;
  double acc_frequency = 0.0;
  double used = 0.0;

  auto add = [&](std::size_t i, double target) {
    const double beta = bin_weight(ests[i]);
    try {
      CMatrix c = (beta / total) * bin_contribution(ests[i], target, opts);
      acc = acc ? CMatrix(*acc + c) : c;
      used += beta;
      ++wb.bins_accumulated;
    } catch (const DegenerateSubspaceError& e) {
      warn_skipped(covs[i].frequency, e);
      ++wb.bins_skipped;
    }
  };

  // The first bin enters already rotated to the second bin's frequency.
  add(0, covs[1].frequency);
  acc_frequency = covs[1].frequency;
  for (std::size_t i = 1; i < covs.size(); ++i) {
    const double f = covs[i].frequency;
    if (acc && acc_frequency < f) {
      // Carry the accumulator one bin up through its dominant eigenpairs.
      const CMatrix hermitian = 0.5 * (*acc + acc->adjoint());
      const SubspaceEstimate carried = decompose(hermitian, acc_frequency, num_sources);
      acc = bin_contribution(carried, f, opts);
    }
    add(i, f);
    acc_frequency = f;
  }
  if (!acc || !(used > 0.0)) {
    throw DegenerateSubspaceError("no bin contributed to the wideband covariance");
  }
  wb.matrix = *acc * (total / used);
  wb.reference_frequency = covs.back().frequency;
  wb.total_weight = used;
  return wb;
}

WidebandSubspace wideband_signal_subspace(const WidebandCovariance& wb, int num_sources) {
  const Eigen::Index p = wb.matrix.rows();
  if (num_sources < 1 || num_sources >= p) throw DomainError("number of sources must lie in [1, P)");
  Eigen::JacobiSVD<CMatrix> svd(wb.matrix, Eigen::ComputeThinU);
  WidebandSubspace out;
  out.vectors = svd.matrixU().leftCols(num_sources);
  fix_column_gauge(out.vectors);
  out.singular_values = svd.singularValues();
  const double next = out.singular_values(num_sources);
  out.gap = next > 0.0 ? out.singular_values(num_sources - 1) / next
                       : std::numeric_limits<double>::infinity();
  out.weak_gap = out.gap < kWeakGapRatio;
  return out;
}

}  // namespace widedoa
