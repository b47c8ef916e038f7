#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "widedoa/errors.hpp"
#include "widedoa/stft.hpp"
#include "widedoa/synthesis.hpp"

using namespace widedoa;

namespace {

std::vector<double> gaussian(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  std::vector<double> x(n);
  for (auto& v : x) v = dist(rng);
  return x;
}

double power(const RMatrix& m, int row) { return m.row(row).squaredNorm() / m.cols(); }

std::vector<double> row(const RMatrix& m, int r) {
  std::vector<double> v(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index k = 0; k < m.cols(); ++k) v[static_cast<std::size_t>(k)] = m(r, k);
  return v;
}

const ArrayGeometry kArray{5, 0.044, 343.0};

}  // namespace

TEST(Propagation, BroadsideChannelsIdentical) {
  const auto x = gaussian(4000, 1);
  const auto sig = apply_farfield_propagation(x, kArray, 0.0, 16000.0);
  ASSERT_EQ(sig.num_channels(), 5);
  for (int p = 0; p < 5; ++p) {
    for (std::size_t k = 0; k < x.size(); ++k) {
      ASSERT_NEAR(sig.samples(p, static_cast<Eigen::Index>(k)), x[k], 1e-12);
    }
  }
}

TEST(Propagation, ReferenceChannelIsInput) {
  const auto x = gaussian(3001, 2);
  const auto sig = apply_farfield_propagation(x, kArray, 37.0, 16000.0);
  double err = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    err += std::pow(sig.samples(0, static_cast<Eigen::Index>(k)) - x[k], 2);
  }
  EXPECT_LT(std::sqrt(err / x.size()), 1e-9);
}

TEST(Propagation, EndfireDelayInSamples) {
  EXPECT_NEAR(kArray.sensor_delay(1, 90.0) * 16000.0, 0.044 / 343.0 * 16000.0, 1e-12);
  EXPECT_NEAR(0.044 / 343.0 * 16000.0, 2.0525, 1e-4);
}

TEST(Propagation, CrossCorrelationPeakLag) {
  const auto x = gaussian(8192, 3);
  for (double doa : {90.0, -90.0, 30.0, -45.0}) {
    const auto sig = apply_farfield_propagation(x, kArray, doa, 16000.0);
    const auto c0 = row(sig.samples, 0);
    const auto c1 = row(sig.samples, 1);
    const int expected =
        static_cast<int>(std::lround(16000.0 * 0.044 * std::sin(doa * kPi / 180.0) / 343.0));
    EXPECT_EQ(oracle::xcorr_peak_lag(c0, c1, 8), expected) << doa;
  }
}

TEST(Propagation, MatchesDftDelayOracle) {
  for (std::size_t n : {64u, 65u}) {
    const auto x = gaussian(n, 4);
    const auto sig = apply_farfield_propagation(x, kArray, -63.0, 16000.0);
    for (int p = 0; p < 5; ++p) {
      const double d = kArray.sensor_delay(p, -63.0) * 16000.0;
      const auto ref = oracle::dft_delay(x, d);
      for (std::size_t k = 0; k < n; ++k) {
        ASSERT_NEAR(sig.samples(p, static_cast<Eigen::Index>(k)), ref[k], 1e-10) << n << " " << p;
      }
    }
  }
}

TEST(Propagation, EnergyPreserving) {
  const auto x = gaussian(16001, 5);
  double px = 0.0;
  for (double v : x) px += v * v;
  px /= x.size();
  const auto sig = apply_farfield_propagation(x, kArray, 71.0, 16000.0);
  for (int p = 0; p < 5; ++p) EXPECT_NEAR(power(sig.samples, p) / px, 1.0, 1e-6);
}

TEST(Propagation, RejectsBadInput) {
  EXPECT_THROW(apply_farfield_propagation({}, kArray, 0.0, 16000.0), DomainError);
  const auto x = gaussian(10, 6);
  EXPECT_THROW(apply_farfield_propagation(x, kArray, 95.0, 16000.0), DomainError);
}

TEST(DiffuseNoise, UnitPowerPerChannel) {
  const auto n = generate_diffuse_noise(kArray, 4.0, 16000.0, 22, 7);
  for (int p = 0; p < 5; ++p) EXPECT_NEAR(power(n.samples, p), 1.0, 0.01);
}

TEST(DiffuseNoise, Deterministic) {
  const auto a = generate_diffuse_noise(kArray, 1.0, 16000.0, 22, 11);
  const auto b = generate_diffuse_noise(kArray, 1.0, 16000.0, 22, 11);
  const auto c = generate_diffuse_noise(kArray, 1.0, 16000.0, 22, 12);
  EXPECT_TRUE((a.samples.array() == b.samples.array()).all());
  EXPECT_FALSE((a.samples.array() == c.samples.array()).all());
}

TEST(DiffuseNoise, CoherenceApproachesIdealField) {
  const auto n = generate_diffuse_noise(kArray, 30.0, 16000.0, 181, 13);
  StftConfig cfg;
  const auto spec = stft(n, cfg);
  const auto covs = estimate_bin_covariances(spec, 0, spec.num_frames());
  for (int bin : {32, 64, 128}) {  // 500, 1000, 2000 Hz
    const auto& r = covs[static_cast<std::size_t>(bin)].matrix;
    const double coh = (r(0, 1) / std::sqrt(r(0, 0).real() * r(1, 1).real())).real();
    const double ideal = oracle::planar_diffuse_coherence(bin * 15.625, 0.044, 343.0);
    EXPECT_NEAR(coh, ideal, 0.1) << bin;
  }
}

TEST(DiffuseNoise, RequiresEnoughDirections) {
  EXPECT_THROW(generate_diffuse_noise(kArray, 1.0, 16000.0, 7, 1), DomainError);
}

TEST(MixAtSnr, PowerRatios) {
  MultichannelSignal s{RMatrix::Random(5, 8000), 16000.0};
  MultichannelSignal n{RMatrix::Random(5, 8000) * 3.0, 16000.0};
  for (double snr : {0.0, 10.0, -5.0}) {
    const auto mixed = mix_at_snr(s, n, snr);
    const RMatrix noise_part = mixed.samples - s.samples;
    const double ps = s.samples.squaredNorm();
    const double pn = noise_part.squaredNorm();
    EXPECT_NEAR(10.0 * std::log10(ps / pn), snr, 0.01);
  }
  const auto m10 = mix_at_snr(s, n, 10.0);
  EXPECT_NEAR((m10.samples - s.samples).squaredNorm() / s.samples.squaredNorm(), 0.1, 1e-9);
}

TEST(MixAtSnr, UsesOnlyActiveSamples) {
  RMatrix sig = RMatrix::Zero(2, 1000);
  sig.rightCols(500).setConstant(2.0);
  MultichannelSignal s{sig, 1000.0};
  MultichannelSignal n{RMatrix::Ones(2, 1000), 1000.0};
  bool mask[1000];
  for (int i = 0; i < 1000; ++i) mask[i] = i >= 500;
  const auto mixed = mix_at_snr(s, n, 0.0, std::span<const bool>(mask, 1000));
  // Active-sample signal power is 4, so the noise is scaled to power 4.
  EXPECT_NEAR(mixed.samples(0, 0), 2.0, 1e-12);
}

TEST(MixAtSnr, Deterministic) {
  MultichannelSignal s{RMatrix::Random(3, 100), 16000.0};
  MultichannelSignal n{RMatrix::Random(3, 100), 16000.0};
  EXPECT_TRUE((mix_at_snr(s, n, 10.0).samples.array() == mix_at_snr(s, n, 10.0).samples.array()).all());
}

TEST(MixAtSnr, RejectsDegenerateInput) {
  MultichannelSignal s{RMatrix::Random(3, 100), 16000.0};
  MultichannelSignal z{RMatrix::Zero(3, 100), 16000.0};
  MultichannelSignal other{RMatrix::Random(3, 99), 16000.0};
  EXPECT_THROW(mix_at_snr(s, z, 0.0), DomainError);
  EXPECT_THROW(mix_at_snr(z, s, 0.0), DomainError);
  EXPECT_THROW(mix_at_snr(s, other, 0.0), DomainError);
}

TEST(Scenario, AlternatingTimeline) {
  ScenarioConfig cfg;
  cfg.duration = 8.0;
  SourceSpec a;
  a.doa_deg = 45.0;
  a.activity = {{0.0, 2.0}, {4.0, 6.0}};
  SourceSpec b;
  b.doa_deg = -45.0;
  b.activity = {{2.0, 4.0}, {6.0, 8.0}};
  cfg.sources = {a, b};
  const auto truth = truth_timeline(cfg.sources, cfg.duration);
  ASSERT_EQ(truth.size(), 4u);
  const double expected[] = {45.0, -45.0, 45.0, -45.0};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(truth[i].interval.start, 2.0 * i);
    EXPECT_DOUBLE_EQ(truth[i].interval.end, 2.0 * (i + 1));
    ASSERT_EQ(truth[i].doas_deg.size(), 1u);
    EXPECT_EQ(truth[i].doas_deg[0], expected[i]);
  }
}

TEST(Scenario, TwoSimultaneousSources) {
  ScenarioConfig cfg;
  cfg.duration = 2.0;
  SourceSpec a;
  a.doa_deg = 45.0;
  SourceSpec b;
  b.doa_deg = -45.0;
  cfg.sources = {a, b};
  const auto sc = synthesize_scenario(cfg);
  ASSERT_EQ(sc.truth.size(), 1u);
  EXPECT_EQ(sc.truth[0].doas_deg, (std::vector<double>{-45.0, 45.0}));
  EXPECT_DOUBLE_EQ(sc.truth[0].interval.start, 0.0);
  EXPECT_DOUBLE_EQ(sc.truth[0].interval.end, 2.0);
  EXPECT_EQ(sc.signal.num_samples(), 32000);
  EXPECT_TRUE(sc.signal.samples.allFinite());
}

TEST(Scenario, EmptySourceListIsPureNoise) {
  ScenarioConfig cfg;
  cfg.duration = 1.0;
  const auto sc = synthesize_scenario(cfg);
  for (const auto& seg : sc.truth) EXPECT_TRUE(seg.doas_deg.empty());
  EXPECT_TRUE(sc.active.empty());
  EXPECT_EQ(sc.signal.num_channels(), 5);
}

TEST(Scenario, SameSeedSameSignal) {
  ScenarioConfig cfg;
  cfg.duration = 1.0;
  SourceSpec a;
  a.doa_deg = 20.0;
  cfg.sources = {a};
  const auto x = synthesize_scenario(cfg);
  const auto y = synthesize_scenario(cfg);
  EXPECT_TRUE((x.signal.samples.array() == y.signal.samples.array()).all());
  cfg.rng_seed = 99;
  const auto z = synthesize_scenario(cfg);
  EXPECT_FALSE((x.signal.samples.array() == z.signal.samples.array()).all());
  EXPECT_EQ(x.truth.size(), z.truth.size());
}

TEST(Scenario, SnrOverActiveIntervals) {
  ScenarioConfig cfg;
  cfg.duration = 4.0;
  cfg.snr_db = 10.0;
  cfg.sensor_noise = false;
  SourceSpec a;
  a.doa_deg = 0.0;
  a.activity = {{1.0, 3.0}};
  cfg.sources = {a};
  const auto sc = synthesize_scenario(cfg);
  // Broadside: every channel carries the same source waveform, which is zero
  // outside [1, 3). Channel 0 minus channel 1 cancels the source.
  const auto src = render_source(a, cfg.duration, cfg.sample_rate, 0);
  EXPECT_EQ(src.size(), 64000u);
  double noise_power = 0.0;
  for (Eigen::Index k = 0; k < 16000; ++k) noise_power += std::pow(sc.signal.samples(0, k), 2);
  noise_power /= 16000;
  double active_power = 0.0;
  for (Eigen::Index k = 16000; k < 48000; ++k) active_power += std::pow(sc.signal.samples(0, k), 2);
  active_power /= 32000;
  // active = signal + noise (uncorrelated), so signal ~ active - noise.
  EXPECT_NEAR(10.0 * std::log10((active_power - noise_power) / noise_power), 10.0, 0.5);
}

TEST(Scenario, Validation) {
  ScenarioConfig cfg;
  cfg.duration = 0.0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg.duration = 1.0;
  SourceSpec a;
  a.gain = 0.0;
  cfg.sources = {a};
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg.sources[0].gain = 1.0;
  cfg.sources[0].activity = {{0.0, 0.6}, {0.5, 0.9}};
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg.sources[0].activity = {{0.2, 1.5}};
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg.sources.assign(5, SourceSpec{});
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Scenario, MissingWavIsIoError) {
  ScenarioConfig cfg;
  cfg.duration = 1.0;
  SourceSpec a;
  a.kind = SourceKind::kWavFile;
  a.wav_path = (std::filesystem::temp_directory_path() / "widedoa_no_such_file.wav").string();
  cfg.sources = {a};
  try {
    synthesize_scenario(cfg);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_EQ(e.path(), a.wav_path);
  }
}

TEST(Scenario, HarmonicSourceIsUnitPower) {
  SourceSpec a;
  a.kind = SourceKind::kHarmonic;
  const auto x = render_source(a, 2.0, 16000.0, 5);
  double p = 0.0;
  for (double v : x) p += v * v;
  EXPECT_NEAR(p / x.size(), 1.0, 1e-6);
}
