#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "widedoa/geometry.hpp"

namespace widedoa {

struct MultichannelSignal {
  RMatrix samples;  // P x N
  double sample_rate = 0.0;

  int num_channels() const { return static_cast<int>(samples.rows()); }
  Eigen::Index num_samples() const { return samples.cols(); }
};

struct TimeInterval {
  double start = 0.0;
  double end = 0.0;

  bool contains(double t) const { return t >= start && t < end; }
  bool covers(double a, double b) const { return a >= start && b <= end; }
  bool overlaps(double a, double b) const { return a < end && b > start; }
};

enum class SourceKind {
  kWhiteNoise,
  kWavFile,
  // Synthetic voiced signal: a glottal-like pulse train with a drifting
  // fundamental, shaped by two resonances and a syllable-rate envelope. Used
  // as a spectrally sparse stand-in when no speech recording is supplied.
  kHarmonic,
};

struct SourceSpec {
  SourceKind kind = SourceKind::kWhiteNoise;
  std::string wav_path;
  double doa_deg = 0.0;
  double gain = 1.0;
  // Empty means active over the whole duration; a single zero-length
  // interval means never active.
  std::vector<TimeInterval> activity;
};

struct ScenarioConfig {
  std::string name = "scenario";
  ArrayGeometry geometry;
  std::vector<SourceSpec> sources;
  double snr_db = 10.0;
  double duration = 60.0;
  double sample_rate = 16000.0;
  std::uint64_t rng_seed = 1;
  int diffuse_directions = 22;
  // Mutually uncorrelated sensor noise, relative to the diffuse field power.
  bool sensor_noise = true;
  double sensor_noise_db = -40.0;

  // Throws ValidationError describing the first violated constraint.
  void validate() const;
};

struct TruthSegment {
  TimeInterval interval;
  std::vector<double> doas_deg;  // ascending
};

struct Scenario {
  MultichannelSignal signal;
  // Piecewise-constant set of active source directions, ordered in time and
  // covering [0, duration). Segments with no active source carry no DOAs.
  std::vector<TruthSegment> truth;
  // Union of source-active intervals, as used for the SNR definition.
  std::vector<TimeInterval> active;
};

// Delays channel p by p * d * sin(theta) / c seconds with a full-length FFT
// linear-phase shift (exact for the periodic extension). For even lengths the
// Nyquist bin takes the real part of its phase factor.
MultichannelSignal apply_farfield_propagation(std::span<const double> source,
                                              const ArrayGeometry& geom, double doa_deg,
                                              double sample_rate);

// Sum of `num_directions` independent Gaussian white plane waves from equally
// spaced directions spanning [-90, 90] degrees, scaled to unit mean power per
// channel. Bit-identical for equal seeds.
MultichannelSignal generate_diffuse_noise(const ArrayGeometry& geom, double duration,
                                          double sample_rate, int num_directions,
                                          std::uint64_t seed);

// Returns signal + g * noise with g chosen so that the channel-averaged power
// ratio over the samples flagged in `active_mask` (all samples when empty)
// equals snr_db.
MultichannelSignal mix_at_snr(const MultichannelSignal& signal, const MultichannelSignal& noise,
                              double snr_db, std::span<const bool> active_mask = {});

Scenario synthesize_scenario(const ScenarioConfig& cfg);

// Mono source waveform for one spec (unit power before gain for synthetic
// kinds, gated by the activity schedule).
std::vector<double> render_source(const SourceSpec& spec, double duration, double sample_rate,
                                  std::uint64_t seed);

// Piecewise-constant truth timeline for the sources' activity schedules.
std::vector<TruthSegment> truth_timeline(const std::vector<SourceSpec>& sources, double duration);

}  // namespace widedoa
