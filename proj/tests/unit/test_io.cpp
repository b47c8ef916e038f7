#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "widedoa/errors.hpp"
#include "widedoa/fft.hpp"
#include "widedoa/resample.hpp"
#include "widedoa/wav_io.hpp"

using namespace widedoa;
namespace fs = std::filesystem;

namespace {
fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "widedoa_tests";
  fs::create_directories(dir);
  return dir / name;
}
}  // namespace

TEST(Wav, FloatRoundTrip) {
  RMatrix x = RMatrix::Random(5, 1234) * 0.9;
  const auto path = temp_file("float.wav").string();
  write_wav(path, x, 16000.0);
  const auto w = read_wav(path);
  EXPECT_EQ(w.sample_rate, 16000.0);
  ASSERT_EQ(w.num_channels(), 5);
  ASSERT_EQ(w.num_frames(), 1234);
  EXPECT_LT((w.samples - x).cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_FALSE(fs::exists(path + ".tmp"));
}

TEST(Wav, Pcm16RoundTrip) {
  RMatrix x = RMatrix::Random(1, 500) * 0.5;
  const auto path = temp_file("pcm16.wav").string();
  write_wav(path, x, 8000.0, WavSampleFormat::kPcm16);
  const auto w = read_wav(path);
  EXPECT_EQ(w.sample_rate, 8000.0);
  EXPECT_LT((w.samples - x).cwiseAbs().maxCoeff(), 1.0 / 32768.0 + 1e-12);
}

TEST(Wav, MissingFileNamesPath) {
  const auto path = temp_file("absent.wav").string();
  fs::remove(path);
  try {
    read_wav(path);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_EQ(e.path(), path);
  }
}

TEST(Wav, GarbageIsIoError) {
  const auto path = temp_file("garbage.wav").string();
  std::ofstream(path) << "definitely not RIFF";
  EXPECT_THROW(read_wav(path), IoError);
}

TEST(Wav, UnwritableDirectory) {
  RMatrix x = RMatrix::Zero(1, 10);
  EXPECT_THROW(write_wav("/nonexistent_dir_widedoa/x.wav", x, 16000.0), IoError);
}

TEST(Resample, ReducesRatio) {
  PolyphaseResampler r(44100, 16000);
  EXPECT_EQ(r.up(), 160);
  EXPECT_EQ(r.down(), 441);
}

TEST(Resample, PreservesInBandTone) {
  const double fin = 44100.0;
  const double fout = 16000.0;
  std::vector<double> x(44100);
  for (std::size_t n = 0; n < x.size(); ++n) x[n] = std::sin(2.0 * kPi * 1000.0 * n / fin);
  const auto y = resample(x, fin, fout);
  EXPECT_NEAR(static_cast<double>(y.size()), 16000.0, 1.0);
  // Away from the edges the output is the same tone sampled at 16 kHz.
  double err = 0.0;
  for (std::size_t m = 1000; m < 15000; ++m) {
    err = std::max(err, std::abs(y[m] - std::sin(2.0 * kPi * 1000.0 * m / fout)));
  }
  EXPECT_LT(err, 1e-3);
}

TEST(Resample, RejectsOutOfBandTone) {
  const double fin = 48000.0;
  std::vector<double> x(48000);
  for (std::size_t n = 0; n < x.size(); ++n) x[n] = std::sin(2.0 * kPi * 12000.0 * n / fin);
  const auto y = resample(x, fin, 16000.0);
  double p = 0.0;
  for (std::size_t m = 1000; m < 15000; ++m) p += y[m] * y[m];
  EXPECT_LT(p / 14000.0, 1e-6);
}

TEST(Resample, IdentityRate) {
  std::vector<double> x{1.0, -2.0, 3.5};
  EXPECT_EQ(resample(x, 16000.0, 16000.0), x);
}

TEST(Fft, RoundTrip) {
  for (std::size_t n : {8u, 9u, 1024u}) {
    RealFft fft(n);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::cos(0.3 * i) + 0.1 * i;
    std::vector<Complex> spec(fft.num_bins());
    fft.forward(x, spec);
    std::vector<double> back(n);
    fft.inverse(spec, back);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(back[i] / n, x[i], 1e-12);
  }
}
