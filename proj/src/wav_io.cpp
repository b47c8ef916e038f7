#include "widedoa/wav_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <vector>

#include "widedoa/errors.hpp"

namespace widedoa {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}
void put32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}
void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

struct FormatChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open WAV file");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw IoError(path, "not a RIFF/WAVE file");
  }

  std::optional<FormatChunk> fmt;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || avail < 16) throw IoError(path, "truncated fmt chunk");
      FormatChunk f;
      f.format = le16(chunk + 8);
      f.channels = le16(chunk + 10);
      f.sample_rate = le32(chunk + 12);
      f.bits = le16(chunk + 22);
      if (f.format == kFormatExtensible) {
        if (size < 40 || avail < 40) throw IoError(path, "truncated extensible fmt chunk");
        // Sub-format GUID starts with the plain format tag.
        f.format = le16(chunk + 8 + 24);
      }
      fmt = f;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = std::min<std::size_t>(size, avail);
    }
    pos = body + size + (size & 1u);
  }
  if (!fmt) throw IoError(path, "missing fmt chunk");
  if (!data) throw IoError(path, "missing data chunk");
  if (fmt->channels == 0) throw IoError(path, "zero channels");
  if (fmt->sample_rate == 0) throw IoError(path, "zero sample rate");

  const bool is_float = fmt->format == kFormatFloat;
  if (!(fmt->format == kFormatPcm || is_float)) {
    throw IoError(path, "unsupported WAV format tag " + std::to_string(fmt->format));
  }
  if (is_float && fmt->bits != 32) throw IoError(path, "only 32-bit float WAV is supported");
  if (!is_float && fmt->bits != 16 && fmt->bits != 24 && fmt->bits != 32) {
    throw IoError(path, "unsupported PCM bit depth " + std::to_string(fmt->bits));
  }

  const std::size_t bytes_per_sample = fmt->bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt->channels;
  const std::size_t frames = data_size / frame_bytes;

  WavData wav;
  wav.sample_rate = fmt->sample_rate;
  wav.samples.resize(fmt->channels, static_cast<Eigen::Index>(frames));
  for (std::size_t n = 0; n < frames; ++n) {
    for (std::size_t c = 0; c < fmt->channels; ++c) {
      const unsigned char* s = data + n * frame_bytes + c * bytes_per_sample;
      double v = 0.0;
      if (is_float) {
        float f;
        std::uint32_t raw = le32(s);
        std::memcpy(&f, &raw, sizeof f);
        v = f;
      } else if (fmt->bits == 16) {
        v = static_cast<std::int16_t>(le16(s)) / 32768.0;
      } else if (fmt->bits == 24) {
        std::int32_t raw = static_cast<std::int32_t>((s[0] << 8) | (s[1] << 16) |
                                                     (static_cast<std::uint32_t>(s[2]) << 24));
        v = (raw >> 8) / 8388608.0;
      } else {
        v = static_cast<std::int32_t>(le32(s)) / 2147483648.0;
      }
      wav.samples(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(n)) = v;
    }
  }
  return wav;
}

void write_wav(const std::string& path, const RMatrix& samples, double sample_rate,
               WavSampleFormat format) {
  if (samples.rows() < 1) throw DomainError("WAV output needs at least one channel");
  const auto channels = static_cast<std::uint16_t>(samples.rows());
  const auto frames = static_cast<std::uint32_t>(samples.cols());
  const std::uint16_t bits = format == WavSampleFormat::kFloat32 ? 32 : 16;
  const std::uint16_t tag = format == WavSampleFormat::kFloat32 ? kFormatFloat : kFormatPcm;
  const std::uint32_t block_align = channels * bits / 8;
  const std::uint32_t data_bytes = frames * block_align;
  const auto rate = static_cast<std::uint32_t>(std::lround(sample_rate));

  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put32(out, 16);
  put16(out, tag);
  put16(out, channels);
  put32(out, rate);
  put32(out, rate * block_align);
  put16(out, static_cast<std::uint16_t>(block_align));
  put16(out, bits);
  put_tag(out, "data");
  put32(out, data_bytes);
  for (std::uint32_t n = 0; n < frames; ++n) {
    for (std::uint16_t c = 0; c < channels; ++c) {
      const double v = samples(c, n);
      if (format == WavSampleFormat::kFloat32) {
        const float f = static_cast<float>(v);
        std::uint32_t raw;
        std::memcpy(&raw, &f, sizeof raw);
        put32(out, raw);
      } else {
        const double clipped = std::clamp(v, -1.0, 32767.0 / 32768.0);
        put16(out, static_cast<std::uint16_t>(
                       static_cast<std::int16_t>(std::lround(clipped * 32768.0))));
      }
    }
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(path, "cannot open for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError(path, "write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(path, "rename failed: " + ec.message());
}

}  // namespace widedoa
