#include "widedoa/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "widedoa/errors.hpp"

namespace widedoa {

void HistogramConfig::validate() const {
  if (!(bin_width > 0.0)) throw ValidationError("histogram bin width must be positive");
  if (!(range_max > range_min)) throw ValidationError("histogram range is empty");
  if (min_peak_separation < bin_width) {
    throw ValidationError("peak separation must be at least the bin width");
  }
}

void CssConfig::validate() const {
  if (!(grid_resolution > 0.0) || grid_resolution > 90.0) {
    throw ValidationError("CSS grid resolution must lie in (0, 90] degrees");
  }
  if (!(init_bin_width > 0.0)) throw ValidationError("CSS init bin width must be positive");
  if (init_bin_stride < 1) throw ValidationError("CSS init bin stride must be at least 1");
  for (double d : initial_doas) {
    if (!(d >= -90.0 && d <= 90.0)) throw ValidationError("CSS initial DOA outside [-90, 90]");
  }
}

PeakEstimate histogram_peaks(std::span<const double> estimates_deg, int num_sources,
                             const HistogramConfig& cfg) {
  cfg.validate();
  if (num_sources < 1) throw DomainError("number of sources must be positive");
  const int nbins =
      std::max(1, static_cast<int>(std::ceil((cfg.range_max - cfg.range_min) / cfg.bin_width - 1e-9)));
  std::vector<int> counts(static_cast<std::size_t>(nbins), 0);
  PeakEstimate out;
  for (double e : estimates_deg) {
    if (!std::isfinite(e) || e < cfg.range_min || e > cfg.range_max) continue;
    const int k = std::min(nbins - 1, static_cast<int>((e - cfg.range_min) / cfg.bin_width));
    ++counts[static_cast<std::size_t>(k)];
    ++out.estimates_pooled;
  }

  std::vector<int> order(static_cast<std::size_t>(nbins));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&counts](int a, int b) {
    return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)];
  });
  std::vector<double> centers;
  for (int k : order) {
    if (static_cast<int>(centers.size()) == num_sources) break;
    if (counts[static_cast<std::size_t>(k)] == 0) break;
    const double c = cfg.range_min + (k + 0.5) * cfg.bin_width;
    const bool clear = std::all_of(centers.begin(), centers.end(), [&](double o) {
      return std::abs(o - c) >= cfg.min_peak_separation;
    });
    if (clear) centers.push_back(c);
  }

  for (double c : centers) {
    double sum = 0.0;
    int n = 0;
    for (double e : estimates_deg) {
      if (std::isfinite(e) && std::abs(e - c) <= cfg.bin_width) {
        sum += e;
        ++n;
      }
    }
    out.doas_deg.push_back(n > 0 ? sum / n : c);
  }
  std::sort(out.doas_deg.begin(), out.doas_deg.end());
  out.insufficient_peaks = static_cast<int>(out.doas_deg.size()) < num_sources;
  return out;
}

PeakEstimate hist_esprit(std::span<const BinCovariance> covs, int num_sources,
                         const ArrayGeometry& geom, const HistogramConfig& cfg, LsSolver solver,
                         int bin_stride) {
  if (covs.empty()) throw DomainError("no frequency bins supplied");
  if (bin_stride < 1) throw DomainError("bin stride must be at least 1");
  std::vector<double> pool;
  pool.reserve(covs.size() * static_cast<std::size_t>(num_sources));
  for (std::size_t i = 0; i < covs.size(); i += static_cast<std::size_t>(bin_stride)) {
    EspritSolution sol;
    try {
      sol = narrowband_esprit(covs[i], num_sources, geom, solver);
    } catch (const NumericalError&) {
      continue;
    }
    for (std::size_t q = 0; q < sol.doas_deg.size(); ++q) {
      if (!sol.out_of_range[q]) pool.push_back(sol.doas_deg[q]);
    }
  }
  return histogram_peaks(pool, num_sources, cfg);
}

CMatrix focusing_matrix(const ArrayGeometry& geom, double reference_frequency, double frequency,
                        std::span<const double> doas_deg) {
  if (doas_deg.empty()) throw DomainError("focusing needs at least one direction");
  const CMatrix a_ref = steering_matrix(geom, reference_frequency, doas_deg);
  const CMatrix a_f = steering_matrix(geom, frequency, doas_deg);
  const Eigen::Index p = a_ref.rows();
  const Eigen::Index q = std::min<Eigen::Index>(a_ref.cols(), p);
  // With A_ref = Q1 R1 and A_f = Q2 R2 (full QR), A_ref A_f^H = Q1 (R1 R2^H) Q2^H and the
  // SVD X S Y^H of the leading q x q block extends to a full SVD by identity on the
  // complements, so T = Q1 diag(X Y^H, I) Q2^H.
  Eigen::HouseholderQR<CMatrix> qr_ref(a_ref);
  Eigen::HouseholderQR<CMatrix> qr_f(a_f);
  const CMatrix r_ref = qr_ref.matrixQR().topRows(q).triangularView<Eigen::Upper>();
  const CMatrix r_f = qr_f.matrixQR().topRows(q).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<CMatrix> svd(r_ref * r_f.adjoint(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  CMatrix middle = CMatrix::Identity(p, p);
  middle.topLeftCorner(q, q) = svd.matrixU() * svd.matrixV().adjoint();
  CMatrix t = middle * qr_f.householderQ().adjoint();
  return qr_ref.householderQ() * t;
}

CMatrix css_focused_covariance(std::span<const BinCovariance> covs, const ArrayGeometry& geom,
                               double reference_frequency, std::span<const double> doas_deg) {
  if (covs.empty()) throw DomainError("no frequency bins supplied");
  const Eigen::Index p = covs.front().matrix.rows();
  CMatrix sum = CMatrix::Zero(p, p);
  for (const auto& c : covs) {
    const CMatrix t = focusing_matrix(geom, reference_frequency, c.frequency, doas_deg);
    sum += t * c.matrix * t.adjoint();
  }
  return 0.5 * (sum + sum.adjoint());
}

SpatialSpectrum music_spectrum(const CMatrix& covariance, int num_sources,
                               const ArrayGeometry& geom, double frequency,
                               double grid_resolution) {
  if (!(grid_resolution > 0.0)) throw DomainError("grid resolution must be positive");
  if (!(frequency > 0.0)) throw DomainError("frequency must be positive");
  const CMatrix hermitian = 0.5 * (covariance + covariance.adjoint());
  const SubspaceEstimate est = decompose(hermitian, frequency, num_sources);
  const CMatrix en_h = est.noise_vectors.adjoint();
  const Eigen::Index p = en_h.cols();
  const int n = static_cast<int>(std::floor(180.0 / grid_resolution + 1e-9)) + 1;
  const double k = 2.0 * kPi * frequency * geom.spacing / geom.sound_speed;
  SpatialSpectrum s;
  s.angles_deg.reserve(static_cast<std::size_t>(n));
  s.power.reserve(static_cast<std::size_t>(n));
  CVector a(p);
  for (int i = 0; i < n; ++i) {
    const double angle = std::min(90.0, -90.0 + i * grid_resolution);
    const Complex w = std::polar(1.0, -k * std::sin(deg2rad(angle)));
    a(0) = 1.0;
    for (Eigen::Index m = 1; m < p; ++m) a(m) = a(m - 1) * w;
    const double d = (en_h * a).squaredNorm();
    s.angles_deg.push_back(angle);
    s.power.push_back(1.0 / std::max(d, 1e-300));
  }
  return s;
}

PeakEstimate spectrum_peaks(const SpatialSpectrum& spectrum, int num_sources) {
  if (num_sources < 1) throw DomainError("number of sources must be positive");
  const auto& p = spectrum.power;
  const std::size_t n = p.size();
  std::vector<std::size_t> maxima;
  for (std::size_t k = 0; k < n; ++k) {
    const bool left = k == 0 || p[k] > p[k - 1];
    const bool right = k + 1 == n || p[k] >= p[k + 1];
    if (left && right && n > 1) maxima.push_back(k);
  }
  std::stable_sort(maxima.begin(), maxima.end(),
                   [&p](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  PeakEstimate out;
  for (std::size_t i = 0; i < maxima.size() && static_cast<int>(i) < num_sources; ++i) {
    out.doas_deg.push_back(spectrum.angles_deg[maxima[i]]);
  }
  std::sort(out.doas_deg.begin(), out.doas_deg.end());
  out.insufficient_peaks = static_cast<int>(out.doas_deg.size()) < num_sources;
  return out;
}

PeakEstimate css_localize(std::span<const BinCovariance> covs, int num_sources,
                          const ArrayGeometry& geom, const CssConfig& cfg) {
  cfg.validate();
  if (covs.empty()) throw DomainError("no frequency bins supplied");
  double f_ref = cfg.reference_frequency;
  if (!(f_ref > 0.0)) {
    for (const auto& c : covs) f_ref = std::max(f_ref, c.frequency);
  }

  std::vector<double> init = cfg.initial_doas;
  if (init.empty()) {
    HistogramConfig coarse;
    coarse.bin_width = cfg.init_bin_width;
    coarse.min_peak_separation = std::max(coarse.min_peak_separation, cfg.init_bin_width);
    init = hist_esprit(covs, num_sources, geom, coarse, LsSolver::kTotalLeastSquares,
                       cfg.init_bin_stride)
               .doas_deg;
  }
  if (init.empty()) {
    for (int q = 0; q < num_sources; ++q) init.push_back(-90.0 + 180.0 * (q + 1) / (num_sources + 1));
  }

  const CMatrix focused = css_focused_covariance(covs, geom, f_ref, init);
  return spectrum_peaks(music_spectrum(focused, num_sources, geom, f_ref, cfg.grid_resolution),
                        num_sources);
}

}  // namespace widedoa
