#include "widedoa/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <set>
#include <string>

#include "widedoa/errors.hpp"
#include "widedoa/fft.hpp"
#include "widedoa/resample.hpp"
#include "widedoa/wav_io.hpp"

namespace widedoa {
namespace {

// Phase factors exp(-j 2 pi f_k tau) are advanced by complex multiplication
// and re-anchored with an exact evaluation every this many bins.
constexpr std::size_t kPhaseReanchor = 256;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

Eigen::Index sample_count(double duration, double sample_rate) {
  return static_cast<Eigen::Index>(std::llround(duration * sample_rate));
}

std::vector<double> white_noise(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (auto& v : x) v = normal(rng);
  return x;
}

// out += IFFT-domain contribution of a spectrum delayed by tau seconds.
void accumulate_delayed(std::span<const Complex> spectrum, double tau, double sample_rate,
                        std::size_t length, std::span<Complex> out) {
  const double step = -2.0 * kPi * sample_rate / static_cast<double>(length) * tau;
  const Complex w = std::polar(1.0, step);
  Complex factor(1.0, 0.0);
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    if (k % kPhaseReanchor == 0) factor = std::polar(1.0, step * static_cast<double>(k));
    Complex f = factor;
    if (length % 2 == 0 && k == length / 2) f = Complex(f.real(), 0.0);
    out[k] += spectrum[k] * f;
    factor *= w;
  }
}

double mean_square(const RMatrix& x, std::span<const bool> mask) {
  if (mask.empty()) return x.squaredNorm() / static_cast<double>(x.size());
  double acc = 0.0;
  std::size_t count = 0;
  for (Eigen::Index n = 0; n < x.cols(); ++n) {
    if (!mask[static_cast<std::size_t>(n)]) continue;
    acc += x.col(n).squaredNorm();
    count += static_cast<std::size_t>(x.rows());
  }
  return count == 0 ? 0.0 : acc / static_cast<double>(count);
}

void normalize_unit_power(std::vector<double>& x) {
  double ms = 0.0;
  for (double v : x) ms += v * v;
  ms /= std::max<std::size_t>(1, x.size());
  if (ms > 0.0) {
    const double g = 1.0 / std::sqrt(ms);
    for (auto& v : x) v *= g;
  }
}

std::vector<double> harmonic_source(Eigen::Index n, double fs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double f0_base = 100.0 + 80.0 * uni(rng);
  const double vib_phase = 2.0 * kPi * uni(rng);
  const double syl_phase = 2.0 * kPi * uni(rng);

  // Two-pole resonators standing in for the first two formants.
  struct Resonator {
    double a1, a2, gain, y1 = 0.0, y2 = 0.0;
    Resonator(double f, double bw, double fs) {
      const double r = std::exp(-kPi * bw / fs);
      a1 = 2.0 * r * std::cos(2.0 * kPi * f / fs);
      a2 = -r * r;
      gain = 1.0 - r;
    }
    double step(double x) {
      const double y = gain * x + a1 * y1 + a2 * y2;
      y2 = y1;
      y1 = y;
      return y;
    }
  };
  Resonator f1(650.0 + 150.0 * uni(rng), 90.0, fs);
  Resonator f2(1150.0 + 400.0 * uni(rng), 120.0, fs);

  std::vector<double> x(static_cast<std::size_t>(n));
  double phase = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double f0 = f0_base * (1.0 + 0.12 * std::sin(2.0 * kPi * 0.6 * t + vib_phase));
    phase += f0 / fs;
    double excitation = 0.0;
    if (phase >= 1.0) {
      phase -= 1.0;
      excitation = 1.0;
    }
    excitation += 0.02 * normal(rng);
    const double voiced = f1.step(excitation) + 0.6 * f2.step(excitation);
    const double syl = std::sin(2.0 * kPi * 3.0 * t + syl_phase);
    const double envelope = syl > 0.0 ? syl * syl : 0.0;
    x[static_cast<std::size_t>(i)] = voiced * envelope;
  }
  normalize_unit_power(x);
  return x;
}

std::vector<double> wav_source(const std::string& path, Eigen::Index n, double fs) {
  const WavData wav = read_wav(path);
  if (wav.num_channels() != 1) {
    throw IoError(path, "expected a mono WAV, found " + std::to_string(wav.num_channels()) +
                            " channels");
  }
  std::vector<double> mono(wav.samples.data(), wav.samples.data() + wav.num_frames());
  if (wav.sample_rate != fs) mono = resample(mono, wav.sample_rate, fs);
  if (mono.empty()) throw IoError(path, "WAV file holds no samples");
  normalize_unit_power(mono);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = mono[i % mono.size()];
  return x;
}

}  // namespace

MultichannelSignal apply_farfield_propagation(std::span<const double> source,
                                              const ArrayGeometry& geom, double doa_deg,
                                              double sample_rate) {
  geom.validate();
  if (source.empty()) throw DomainError("cannot propagate an empty signal");
  if (!(std::abs(doa_deg) <= 90.0)) throw DomainError("direction outside [-90, 90]");
  if (!(sample_rate > 0.0)) throw DomainError("sample rate must be positive");

  const std::size_t n = source.size();
  MultichannelSignal out;
  out.sample_rate = sample_rate;
  out.samples.resize(geom.num_sensors, static_cast<Eigen::Index>(n));

  RealFft fft(n);
  std::vector<Complex> spectrum(fft.num_bins());
  fft.forward(source, spectrum);
  std::vector<Complex> shifted(fft.num_bins());
  std::vector<double> channel(n);
  for (int p = 0; p < geom.num_sensors; ++p) {
    const double tau = geom.sensor_delay(p, doa_deg);
    if (tau == 0.0) {
      for (std::size_t i = 0; i < n; ++i) out.samples(p, static_cast<Eigen::Index>(i)) = source[i];
      continue;
    }
    std::fill(shifted.begin(), shifted.end(), Complex(0.0, 0.0));
    accumulate_delayed(spectrum, tau, sample_rate, n, shifted);
    fft.inverse(shifted, channel);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.samples(p, static_cast<Eigen::Index>(i)) = channel[i] * scale;
    }
  }
  return out;
}

MultichannelSignal generate_diffuse_noise(const ArrayGeometry& geom, double duration,
                                          double sample_rate, int num_directions,
                                          std::uint64_t seed) {
  geom.validate();
  if (num_directions < 8) throw DomainError("diffuse field needs at least 8 directions");
  if (!(duration > 0.0) || !(sample_rate > 0.0)) {
    throw DomainError("duration and sample rate must be positive");
  }
  const Eigen::Index n = sample_count(duration, sample_rate);
  if (n < 1) throw DomainError("diffuse field shorter than one sample");
  const auto len = static_cast<std::size_t>(n);

  // Each direction is propagated as in apply_farfield_propagation; by
  // linearity the per-channel sums are formed in the frequency domain.
  RealFft fft(len);
  std::vector<std::vector<Complex>> channel_spectra(
      static_cast<std::size_t>(geom.num_sensors), std::vector<Complex>(fft.num_bins()));
  std::vector<Complex> spectrum(fft.num_bins());
  for (int k = 0; k < num_directions; ++k) {
    const double doa = -90.0 + 180.0 * k / (num_directions - 1);
    const auto x = white_noise(n, derive_seed(seed, static_cast<std::uint64_t>(k)));
    fft.forward(x, spectrum);
    for (int p = 0; p < geom.num_sensors; ++p) {
      accumulate_delayed(spectrum, geom.sensor_delay(p, doa), sample_rate, len,
                         channel_spectra[static_cast<std::size_t>(p)]);
    }
  }

  MultichannelSignal out;
  out.sample_rate = sample_rate;
  out.samples.resize(geom.num_sensors, n);
  std::vector<double> channel(len);
  for (int p = 0; p < geom.num_sensors; ++p) {
    fft.inverse(channel_spectra[static_cast<std::size_t>(p)], channel);
    for (std::size_t i = 0; i < len; ++i) out.samples(p, static_cast<Eigen::Index>(i)) = channel[i];
  }
  const double ms = mean_square(out.samples, {});
  out.samples *= 1.0 / std::sqrt(ms);
  return out;
}

MultichannelSignal mix_at_snr(const MultichannelSignal& signal, const MultichannelSignal& noise,
                              double snr_db, std::span<const bool> active_mask) {
  if (signal.samples.rows() != noise.samples.rows() ||
      signal.samples.cols() != noise.samples.cols()) {
    throw DomainError("signal and noise shapes differ");
  }
  if (signal.sample_rate != noise.sample_rate) throw DomainError("sample rates differ");
  if (!active_mask.empty() &&
      active_mask.size() != static_cast<std::size_t>(signal.samples.cols())) {
    throw DomainError("activity mask length differs from signal length");
  }
  const double ps = mean_square(signal.samples, active_mask);
  const double pn = mean_square(noise.samples, active_mask);
  if (!(ps > 0.0)) throw DomainError("signal has zero power over the active samples");
  if (!(pn > 0.0)) throw DomainError("noise has zero power over the active samples");
  const double g = std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
  MultichannelSignal out;
  out.sample_rate = signal.sample_rate;
  out.samples = signal.samples + g * noise.samples;
  return out;
}

void ScenarioConfig::validate() const {
  try {
    geometry.validate();
  } catch (const DomainError& e) {
    throw ValidationError(e.what());
  }
  if (!(sample_rate > 0.0)) throw ValidationError("sample_rate must be positive");
  if (!(duration > 0.0)) throw ValidationError("duration must be positive");
  if (!std::isfinite(snr_db)) throw ValidationError("snr_db must be finite");
  if (diffuse_directions < 8) throw ValidationError("diffuse_directions must be at least 8");
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& s = sources[i];
    const std::string tag = "source " + std::to_string(i) + ": ";
    if (!(s.gain > 0.0)) throw ValidationError(tag + "gain must be positive");
    if (!(std::abs(s.doa_deg) <= 90.0)) throw ValidationError(tag + "doa outside [-90, 90]");
    if (s.kind == SourceKind::kWavFile && s.wav_path.empty()) {
      throw ValidationError(tag + "wav source needs a path");
    }
    auto intervals = s.activity;
    std::sort(intervals.begin(), intervals.end(),
              [](const TimeInterval& a, const TimeInterval& b) { return a.start < b.start; });
    for (std::size_t k = 0; k < intervals.size(); ++k) {
      const auto& iv = intervals[k];
      if (!(iv.start <= iv.end)) throw ValidationError(tag + "activity interval is reversed");
      if (iv.start < 0.0 || iv.end > duration + 1e-9) {
        throw ValidationError(tag + "activity interval outside the signal duration");
      }
      if (k > 0 && iv.start < intervals[k - 1].end) {
        throw ValidationError(tag + "activity intervals overlap");
      }
    }
  }
  for (const auto& seg : truth_timeline(sources, duration)) {
    if (static_cast<int>(seg.doas_deg.size()) >= geometry.num_sensors) {
      throw ValidationError("more simultaneously active sources than the array can resolve");
    }
  }
}

std::vector<double> render_source(const SourceSpec& spec, double duration, double sample_rate,
                                  std::uint64_t seed) {
  const Eigen::Index n = sample_count(duration, sample_rate);
  std::vector<double> x;
  switch (spec.kind) {
    case SourceKind::kWhiteNoise:
      x = white_noise(n, seed);
      break;
    case SourceKind::kHarmonic:
      x = harmonic_source(n, sample_rate, seed);
      break;
    case SourceKind::kWavFile:
      x = wav_source(spec.wav_path, n, sample_rate);
      break;
  }
  for (auto& v : x) v *= spec.gain;
  if (!spec.activity.empty()) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / sample_rate;
      const bool on = std::any_of(spec.activity.begin(), spec.activity.end(),
                                  [t](const TimeInterval& iv) { return iv.contains(t); });
      if (!on) x[static_cast<std::size_t>(i)] = 0.0;
    }
  }
  return x;
}

std::vector<TruthSegment> truth_timeline(const std::vector<SourceSpec>& sources,
                                         double duration) {
  std::set<double> cuts{0.0, duration};
  for (const auto& s : sources) {
    for (const auto& iv : s.activity) {
      if (iv.start > 0.0 && iv.start < duration) cuts.insert(iv.start);
      if (iv.end > 0.0 && iv.end < duration) cuts.insert(iv.end);
    }
  }
  std::vector<TruthSegment> out;
  for (auto it = cuts.begin(); std::next(it) != cuts.end(); ++it) {
    const double a = *it;
    const double b = *std::next(it);
    const double mid = 0.5 * (a + b);
    std::vector<double> doas;
    for (const auto& s : sources) {
      const bool on = s.activity.empty() ||
                      std::any_of(s.activity.begin(), s.activity.end(),
                                  [mid](const TimeInterval& iv) { return iv.contains(mid); });
      if (on) doas.push_back(s.doa_deg);
    }
    std::sort(doas.begin(), doas.end());
    if (!out.empty() && out.back().doas_deg == doas) {
      out.back().interval.end = b;
    } else {
      out.push_back({{a, b}, std::move(doas)});
    }
  }
  return out;
}

Scenario synthesize_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = sample_count(cfg.duration, cfg.sample_rate);
  const auto& geom = cfg.geometry;

  MultichannelSignal signal;
  signal.sample_rate = cfg.sample_rate;
  signal.samples = RMatrix::Zero(geom.num_sensors, n);
  for (std::size_t i = 0; i < cfg.sources.size(); ++i) {
    const auto& spec = cfg.sources[i];
    const auto mono = render_source(spec, cfg.duration, cfg.sample_rate,
                                    derive_seed(cfg.rng_seed, 1000 + i));
    signal.samples += apply_farfield_propagation(mono, geom, spec.doa_deg, cfg.sample_rate).samples;
  }

  MultichannelSignal noise = generate_diffuse_noise(geom, cfg.duration, cfg.sample_rate,
                                                    cfg.diffuse_directions,
                                                    derive_seed(cfg.rng_seed, 1));
  if (cfg.sensor_noise) {
    const double g = std::sqrt(std::pow(10.0, cfg.sensor_noise_db / 10.0));
    for (int p = 0; p < geom.num_sensors; ++p) {
      const auto w = white_noise(n, derive_seed(cfg.rng_seed, 100 + static_cast<std::uint64_t>(p)));
      for (Eigen::Index k = 0; k < n; ++k) noise.samples(p, k) += g * w[static_cast<std::size_t>(k)];
    }
  }

  Scenario out;
  out.truth = truth_timeline(cfg.sources, cfg.duration);
  for (const auto& seg : out.truth) {
    if (seg.doas_deg.empty()) continue;
    if (!out.active.empty() && out.active.back().end == seg.interval.start) {
      out.active.back().end = seg.interval.end;
    } else {
      out.active.push_back(seg.interval);
    }
  }

  if (cfg.sources.empty()) {
    out.signal = std::move(noise);
    return out;
  }
  auto mask = std::make_unique<bool[]>(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / cfg.sample_rate;
    mask[static_cast<std::size_t>(k)] =
        std::any_of(out.active.begin(), out.active.end(),
                    [t](const TimeInterval& iv) { return iv.contains(t); });
  }
  out.signal = mix_at_snr(signal, noise, cfg.snr_db,
                          std::span<const bool>(mask.get(), static_cast<std::size_t>(n)));
  return out;
}

}  // namespace widedoa
