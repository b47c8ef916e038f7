#include "widedoa/esprit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "widedoa/errors.hpp"

namespace widedoa {
namespace {

CMatrix shift_operator(const CMatrix& es, LsSolver solver) {
  const Eigen::Index p = es.rows();
  const Eigen::Index q = es.cols();
  const CMatrix e1 = es.topRows(p - 1);
  const CMatrix e2 = es.bottomRows(p - 1);
  if (solver == LsSolver::kLeastSquares) return e1.colPivHouseholderQr().solve(e2);

  CMatrix stacked(p - 1, 2 * q);
  stacked << e1, e2;
  Eigen::JacobiSVD<CMatrix> svd(stacked, Eigen::ComputeFullV);
  const CMatrix& v = svd.matrixV();
  const CMatrix v12 = v.block(0, q, q, q);
  const CMatrix v22 = v.block(q, q, q, q);
  Eigen::FullPivLU<CMatrix> lu(v22);
  if (!lu.isInvertible()) throw NumericalError("total least squares block is singular");
  return -v12 * lu.inverse();
}

void check_band(std::span<const BinCovariance> covs, const ArrayGeometry& geom) {
  if (covs.empty()) throw DomainError("no frequency bins supplied");
  const double limit = lowest_aliasing_frequency(geom);
  for (const auto& c : covs) {
    if (!(c.frequency > 0.0)) throw DomainError("bin frequencies must be positive");
    if (c.frequency > limit * (1.0 + 1e-12)) {
      throw DomainError("bin at " + std::to_string(c.frequency) +
                        " Hz exceeds the lowest aliasing frequency " + std::to_string(limit));
    }
  }
}

double highest_frequency(std::span<const BinCovariance> covs) {
  double f = 0.0;
  for (const auto& c : covs) f = std::max(f, c.frequency);
  return f;
}

}  // namespace

bool EspritSolution::any_out_of_range() const {
  return std::any_of(out_of_range.begin(), out_of_range.end(), [](bool b) { return b; });
}

EspritSolution esprit_from_subspace(const CMatrix& signal_subspace, double frequency,
                                    const ArrayGeometry& geom, LsSolver solver) {
  geom.validate();
  const Eigen::Index p = signal_subspace.rows();
  const Eigen::Index q = signal_subspace.cols();
  if (p != geom.num_sensors) throw DomainError("subspace rows must equal the sensor count");
  if (q < 1 || p < q + 1) throw DomainError("need at least Q + 1 sensors");
  if (!(frequency > 0.0)) throw DomainError("frequency must be positive");
  if (!signal_subspace.allFinite()) throw NumericalError("signal subspace has non-finite entries");

  const CMatrix psi = shift_operator(signal_subspace, solver);
  Eigen::ComplexEigenSolver<CMatrix> ces(psi, false);
  if (ces.info() != Eigen::Success) throw NumericalError("shift operator eigensolve failed");

  const double scale = geom.sound_speed / (2.0 * kPi * frequency * geom.spacing);
  const bool ambiguous = frequency > lowest_aliasing_frequency(geom) * (1.0 + 1e-12);
  struct Root {
    Complex lambda;
    double doa;
    bool clamped;
  };
  std::vector<Root> roots;
  for (Eigen::Index k = 0; k < q; ++k) {
    const Complex lambda = ces.eigenvalues()(k);
    double s = -std::arg(lambda) * scale;
    const bool clamped = std::abs(s) > 1.0;
    s = std::clamp(s, -1.0, 1.0);
    roots.push_back({lambda, rad2deg(std::asin(s)), clamped || ambiguous});
  }
  std::stable_sort(roots.begin(), roots.end(),
                   [](const Root& a, const Root& b) { return a.doa < b.doa; });

  EspritSolution sol;
  sol.frequency_used = frequency;
  sol.solver = solver;
  sol.subspace_gap = std::numeric_limits<double>::infinity();
  for (const auto& r : roots) {
    sol.psi_eigenvalues.push_back(r.lambda);
    sol.doas_deg.push_back(r.doa);
    sol.out_of_range.push_back(r.clamped);
  }
  return sol;
}

EspritSolution narrowband_esprit(const BinCovariance& cov, int num_sources,
                                 const ArrayGeometry& geom, LsSolver solver) {
  const SubspaceEstimate est = decompose(cov, num_sources);
  EspritSolution sol = esprit_from_subspace(est.signal_vectors, cov.frequency, geom, solver);
  const double next = est.noise_values(0);
  sol.subspace_gap = next > 0.0 ? est.signal_values(num_sources - 1) / next
                                : std::numeric_limits<double>::infinity();
  sol.weak_gap = sol.subspace_gap < kWeakGapRatio;
  return sol;
}

EspritSolution wideband_esprit_single(std::span<const BinCovariance> covs,
                                      const ArrayGeometry& geom, double reference_frequency,
                                      LsSolver solver, const RotationOptions& rotation) {
  check_band(covs, geom);
  const double f_ref = reference_frequency > 0.0 ? reference_frequency : highest_frequency(covs);
  if (f_ref > lowest_aliasing_frequency(geom) * (1.0 + 1e-12)) {
    throw DomainError("reference frequency exceeds the lowest aliasing frequency");
  }

  std::vector<RotatedSubspace> rotated;
  std::vector<double> weights;
  rotated.reserve(covs.size());
  weights.reserve(covs.size());
  double signal_power = 0.0;
  double residual_power = 0.0;
  for (const auto& c : covs) {
    const SubspaceEstimate est = decompose(c, 1);
    rotated.push_back(rotate_subspace(est, f_ref, rotation));
    weights.push_back(bin_weight(est));
    signal_power += est.signal_values(0);
    residual_power += est.noise_values(0);
  }
  const CVector acc = accumulate_single_source(rotated, weights);
  EspritSolution sol = esprit_from_subspace(acc, f_ref, geom, solver);
  sol.subspace_gap = residual_power > 0.0 ? signal_power / residual_power
                                          : std::numeric_limits<double>::infinity();
  sol.weak_gap = sol.subspace_gap < kWeakGapRatio;
  return sol;
}

EspritSolution wideband_esprit_multi(std::span<const BinCovariance> covs, int num_sources,
                                     const ArrayGeometry& geom, AccumulationMode mode,
                                     LsSolver solver, const AccumulationOptions& opts) {
  check_band(covs, geom);
  const WidebandCovariance wb =
      mode == AccumulationMode::kBatch
          ? accumulate_wideband(covs, num_sources, highest_frequency(covs), opts)
          : accumulate_iterative(covs, num_sources, opts);
  const WidebandSubspace ws = wideband_signal_subspace(wb, num_sources);
  EspritSolution sol = esprit_from_subspace(ws.vectors, wb.reference_frequency, geom, solver);
  sol.subspace_gap = ws.gap;
  sol.weak_gap = ws.weak_gap;
  return sol;
}

}  // namespace widedoa
