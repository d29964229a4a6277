#pragma once

// RIFF/WAVE reading and writing.  PCM 8/16/24/32-bit and IEEE float32 are
// accepted; multichannel input is averaged down to mono.

#include <spmp/types.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spmp {

/// I/O and format failures (distinct from argument errors).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WavData {
  Signal signal;
  std::uint32_t sample_rate = 0;
  std::uint16_t channels = 0;
  std::uint16_t bits_per_sample = 0;
  bool is_float = false;
};

namespace detail {

inline std::uint32_t le32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
inline std::uint16_t le16(const unsigned char* p) { return std::uint16_t(p[0] | p[1] << 8); }

inline void put32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
inline void put16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

inline double decode_sample(const unsigned char* p, std::uint16_t bits, bool is_float) {
  if (is_float) {
    float f;
    const std::uint32_t u = le32(p);
    std::memcpy(&f, &u, 4);
    return f;
  }
  switch (bits) {
    case 8: return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16: return static_cast<std::int16_t>(le16(p)) / 32768.0;
    case 24: {
      std::int32_t v = std::int32_t(p[0]) | std::int32_t(p[1]) << 8 | std::int32_t(p[2]) << 16;
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    case 32: return static_cast<std::int32_t>(le32(p)) / 2147483648.0;
  }
  return 0.0;
}

}  // namespace detail

inline WavData parse_wav(std::span<const unsigned char> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw IoError("wav: not a RIFF/WAVE file");
  }
  WavData out;
  bool have_fmt = false;
  std::uint16_t format = 0, block_align = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* h = bytes.data() + pos;
    const std::uint32_t size = detail::le32(h + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = bytes.size() - body;
    if (std::memcmp(h, "fmt ", 4) == 0) {
      if (size < 16 || size > avail) throw IoError("wav: truncated fmt chunk");
      const unsigned char* f = bytes.data() + body;
      format = detail::le16(f);
      out.channels = detail::le16(f + 2);
      out.sample_rate = detail::le32(f + 4);
      block_align = detail::le16(f + 12);
      out.bits_per_sample = detail::le16(f + 14);
      if (format == 0xFFFE) {
        if (size < 40) throw IoError("wav: truncated extensible fmt chunk");
        format = detail::le16(f + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(h, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = std::min<std::size_t>(size, avail);  // tolerate writers that leave size unset
    }
    pos = body + size + (size & 1u);
    if (data && have_fmt) break;
  }
  if (!have_fmt) throw IoError("wav: missing fmt chunk");
  if (!data) throw IoError("wav: missing data chunk");
  if (format == 3) {
    if (out.bits_per_sample != 32) throw IoError("wav: unsupported float width " + std::to_string(out.bits_per_sample));
    out.is_float = true;
  } else if (format == 1) {
    const auto b = out.bits_per_sample;
    if (b != 8 && b != 16 && b != 24 && b != 32) throw IoError("wav: unsupported PCM width " + std::to_string(b));
  } else {
    throw IoError("wav: unsupported encoding " + std::to_string(format));
  }
  if (out.channels == 0) throw IoError("wav: zero channels");
  const std::size_t width = out.bits_per_sample / 8;
  if (block_align != width * out.channels) throw IoError("wav: inconsistent block alignment");
  const std::size_t frames = data_size / block_align;
  if (frames == 0) throw IoError("wav: no samples");
  std::vector<double> mono(frames);
  for (std::size_t n = 0; n < frames; ++n) {
    double s = 0.0;
    for (std::size_t c = 0; c < out.channels; ++c) {
      s += detail::decode_sample(data + n * block_align + c * width, out.bits_per_sample, out.is_float);
    }
    mono[n] = s / out.channels;
  }
  out.signal = Signal(std::move(mono));
  return out;
}

inline WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.empty()) throw IoError("wav: empty file " + path);
  return parse_wav(bytes);
}

enum class WavEncoding { Pcm16, Float32 };

inline std::vector<unsigned char> encode_wav(std::span<const double> samples, std::uint32_t sample_rate,
                                             WavEncoding enc = WavEncoding::Pcm16) {
  const std::uint16_t bits = enc == WavEncoding::Pcm16 ? 16 : 32;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * (bits / 8));
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  detail::put32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  detail::put32(out, 16);
  detail::put16(out, enc == WavEncoding::Pcm16 ? 1 : 3);
  detail::put16(out, 1);
  detail::put32(out, sample_rate);
  detail::put32(out, sample_rate * (bits / 8));
  detail::put16(out, bits / 8);
  detail::put16(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  detail::put32(out, data_bytes);
  for (double v : samples) {
    if (enc == WavEncoding::Pcm16) {
      const double q = std::nearbyint(std::clamp(v, -1.0, 32767.0 / 32768.0) * 32768.0);
      detail::put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    } else {
      const float f = static_cast<float>(v);
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      detail::put32(out, u);
    }
  }
  return out;
}

inline void write_wav(const std::string& path, std::span<const double> samples, std::uint32_t sample_rate,
                      WavEncoding enc = WavEncoding::Pcm16) {
  const auto bytes = encode_wav(samples, sample_rate, enc);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace spmp
