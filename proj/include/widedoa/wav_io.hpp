#pragma once

#include <string>

#include "widedoa/linalg.hpp"

namespace widedoa {

enum class WavSampleFormat { kPcm16, kFloat32 };

struct WavData {
  RMatrix samples;  // channels x frames, nominal range [-1, 1]
  double sample_rate = 0.0;

  int num_channels() const { return static_cast<int>(samples.rows()); }
  Eigen::Index num_frames() const { return samples.cols(); }
};

// Reads RIFF/WAVE with PCM 16-bit, PCM 24/32-bit or IEEE float 32-bit data,
// including WAVE_FORMAT_EXTENSIBLE headers. Throws IoError naming the path.
WavData read_wav(const std::string& path);

// Writes channels x frames samples. Written through a temporary file that is
// renamed into place, so readers never observe a partial file.
void write_wav(const std::string& path, const RMatrix& samples, double sample_rate,
               WavSampleFormat format = WavSampleFormat::kFloat32);

}  // namespace widedoa
