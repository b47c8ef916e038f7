#include "widedoa/stft.hpp"

#include <bit>
#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "widedoa/errors.hpp"
#include "widedoa/fft.hpp"

namespace widedoa {

void StftConfig::validate() const {
  if (frame_length < 2 || !std::has_single_bit(static_cast<unsigned>(frame_length))) {
    throw ValidationError("frame_length must be a power of two >= 2");
  }
  if (hop < 1 || hop > frame_length) throw ValidationError("hop must lie in [1, frame_length]");
  if (!(sample_rate > 0.0)) throw ValidationError("STFT sample rate must be positive");
}

RVector make_window(WindowKind kind, int length) {
  RVector w(length);
  for (int n = 0; n < length; ++n) {
    w(n) = kind == WindowKind::kHann ? 0.5 * (1.0 - std::cos(2.0 * kPi * n / length)) : 1.0;
  }
  return w;
}

MultichannelSpectrum stft(const MultichannelSignal& signal, const StftConfig& cfg) {
  cfg.validate();
  if (signal.sample_rate != cfg.sample_rate) {
    throw DomainError("signal sample rate " + std::to_string(signal.sample_rate) +
                      " differs from STFT sample rate " + std::to_string(cfg.sample_rate));
  }
  const Eigen::Index n = signal.num_samples();
  if (n < cfg.frame_length) throw DomainError("signal shorter than one STFT frame");

  const int frames = 1 + static_cast<int>((n - cfg.frame_length) / cfg.hop);
  const int bins = cfg.num_bins();
  const int channels = signal.num_channels();
  const RVector window = make_window(cfg.window, cfg.frame_length);
  const RealFft fft(static_cast<std::size_t>(cfg.frame_length));

  MultichannelSpectrum spec;
  spec.hop = cfg.hop;
  spec.frame_length = cfg.frame_length;
  spec.sample_rate = cfg.sample_rate;
  spec.bin_frequencies.resize(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) spec.bin_frequencies[static_cast<std::size_t>(b)] = cfg.bin_frequency(b);
  spec.frames.assign(static_cast<std::size_t>(frames), CMatrix(channels, bins));

  RVector frame(cfg.frame_length);
  std::vector<Complex> out(static_cast<std::size_t>(bins));
  for (int t = 0; t < frames; ++t) {
    auto& dst = spec.frames[static_cast<std::size_t>(t)];
    const Eigen::Index start = static_cast<Eigen::Index>(t) * cfg.hop;
    for (int p = 0; p < channels; ++p) {
      frame = signal.samples.row(p).segment(start, cfg.frame_length).transpose().cwiseProduct(window);
      fft.forward(std::span<const double>(frame.data(), static_cast<std::size_t>(frame.size())), out);
      for (int b = 0; b < bins; ++b) dst(p, b) = out[static_cast<std::size_t>(b)];
    }
  }
  return spec;
}

namespace {

std::vector<BinCovariance> covariances_for_bins(const MultichannelSpectrum& spec, int first,
                                                int last, int bin_lo, int bin_hi) {
  if (first < 0 || last > spec.num_frames() || last - first < 1) {
    throw DomainError("covariance frame range is empty or out of bounds");
  }
  const int p = spec.num_channels();
  const double inv_l = 1.0 / (last - first);
  std::vector<BinCovariance> covs;
  covs.reserve(static_cast<std::size_t>(bin_hi - bin_lo + 1));
  for (int b = bin_lo; b <= bin_hi; ++b) {
    BinCovariance c;
    c.bin = b;
    c.frequency = spec.bin_frequencies[static_cast<std::size_t>(b)];
    c.snapshot_count = last - first;
    c.matrix = CMatrix::Zero(p, p);
    for (int t = first; t < last; ++t) {
      const auto x = spec.frames[static_cast<std::size_t>(t)].col(b);
      c.matrix.noalias() += x * x.adjoint();
    }
    c.matrix *= inv_l;
    c.matrix = 0.5 * (c.matrix + c.matrix.adjoint()).eval();
    covs.push_back(std::move(c));
  }
  return covs;
}

}  // namespace

std::vector<BinCovariance> estimate_bin_covariances(const MultichannelSpectrum& spec, int first,
                                                    int last) {
  return covariances_for_bins(spec, first, last, 0, spec.num_bins() - 1);
}

std::vector<BinCovariance> estimate_bin_covariances_in_band(const MultichannelSpectrum& spec,
                                                            int first, int last, double f_low,
                                                            double f_high) {
  if (!(f_low < f_high)) throw DomainError("band lower edge must be below the upper edge");
  int lo = spec.num_bins();
  int hi = -1;
  for (int b = 1; b < spec.num_bins(); ++b) {
    const double f = spec.bin_frequencies[static_cast<std::size_t>(b)];
    if (f >= f_low && f <= f_high) {
      lo = std::min(lo, b);
      hi = std::max(hi, b);
    }
  }
  if (hi < lo) throw DomainError("no STFT bin inside the requested band");
  return covariances_for_bins(spec, first, last, lo, hi);
}

std::vector<BinCovariance> band_select(const std::vector<BinCovariance>& covs, double f_low,
                                       double f_high) {
  if (!(f_low < f_high)) throw DomainError("band lower edge must be below the upper edge");
  std::vector<BinCovariance> out;
  for (const auto& c : covs) {
    if (c.bin == 0 || c.frequency <= 0.0) continue;
    if (c.frequency >= f_low && c.frequency <= f_high) out.push_back(c);
  }
  if (out.empty()) throw DomainError("no bin inside the requested band");
  return out;
}

BandLimit limit_band_to_aliasing(const ArrayGeometry& geom, double f_low, double f_high) {
  const double limit = lowest_aliasing_frequency(geom);
  BandLimit out{f_low, f_high, false};
  if (f_high > limit) {
    out.f_high = limit;
    out.truncated = true;
    spdlog::warn("analysis band upper edge {:.3f} Hz exceeds the spatial aliasing limit; "
                 "truncated to {:.3f} Hz",
                 f_high, limit);
  }
  return out;
}

}  // namespace widedoa
