// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "finsep/wav.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "finsep/errors.hpp"

namespace finsep::audio {

namespace {

uint16_t get_u16(const uint8_t* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }
uint32_t get_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

float bits_to_float(uint32_t u) {
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}
uint32_t float_to_bits(float f) {
  uint32_t u;
  std::memcpy(&u, &f, 4);
  return u;
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const uint8_t* p = reinterpret_cast<const uint8_t*>(bytes.data());
  const size_t n = bytes.size();

  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw IoError("corrupt container: " + path + " is not a RIFF/WAVE file");

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  uint32_t rate = 0;
  size_t data_off = 0, data_size = 0;
  bool have_data = false;

  size_t off = 12;
  while (off + 8 <= n) {
    const uint8_t* id = p + off;
    uint32_t size = get_u32(p + off + 4);
    size_t body = off + 8;
    if (body + size > n) throw IoError("corrupt container: truncated chunk in " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) throw IoError("corrupt container: short fmt chunk in " + path);
      format = get_u16(p + body);
      channels = get_u16(p + body + 2);
      rate = get_u32(p + body + 4);
      block_align = get_u16(p + body + 12);
      bits = get_u16(p + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_off = body;
      data_size = size;
      have_data = true;
    }
    off = body + size + (size & 1);  // chunks are word-aligned
  }

  if (!have_fmt || !have_data)
    throw IoError("corrupt container: missing fmt/data chunk in " + path);
  if (rate == 0) throw IoError("corrupt container: zero sample rate in " + path);

  const bool pcm16 = (format == 1 && bits == 16);
  const bool f32 = (format == 3 && bits == 32);
  if (!pcm16 && !f32)
    throw IoError("unsupported format: " + path + " (need PCM-16 or IEEE float-32)");
  if (channels != 1 && channels != 2)
    throw IoError("unsupported format: " + path + " has " + std::to_string(channels) +
                  " channels (need 1 or 2)");

  const size_t bytes_per_sample = bits / 8;
  if (block_align == 0) block_align = static_cast<uint16_t>(bytes_per_sample * channels);
  if (block_align != bytes_per_sample * channels)
    throw IoError("corrupt container: bad block alignment in " + path);
  if (data_size % block_align != 0)
    throw IoError("corrupt container: data size not frame-aligned in " + path);

  const size_t frames = data_size / block_align;
  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.resize(frames);
  const uint8_t* d = p + data_off;
  for (size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (uint16_t c = 0; c < channels; ++c) {
      const uint8_t* s = d + (i * channels + c) * bytes_per_sample;
      if (pcm16) {
        int16_t v = static_cast<int16_t>(get_u16(s));
        acc += static_cast<double>(v) / 32768.0;
      } else {
        float v = bits_to_float(get_u32(s));
        if (!std::isfinite(v))
          throw IoError("corrupt container: non-finite sample in " + path);
        acc += static_cast<double>(v);
      }
    }
    w.samples[i] = acc / channels;
  }
  return w;
}

void write_wav(const Waveform& w, const std::string& path, WavEncoding encoding) {
  const bool pcm = encoding == WavEncoding::pcm16;
  const uint32_t n = static_cast<uint32_t>(w.samples.size());
  const uint32_t bytes_per = pcm ? 2 : 4;
  const uint32_t data_size = n * bytes_per;

  std::string out;
  out.reserve(64 + data_size);
  out += "RIFF";
  const uint32_t fact_size = pcm ? 0 : 12;
  put_u32(out, 4 + 24 + fact_size + 8 + data_size);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, pcm ? 1 : 3);
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<uint32_t>(w.sample_rate));
  put_u32(out, static_cast<uint32_t>(w.sample_rate) * bytes_per);
  put_u16(out, static_cast<uint16_t>(bytes_per));
  put_u16(out, static_cast<uint16_t>(8 * bytes_per));
  if (!pcm) {
    out += "fact";
    put_u32(out, 4);
    put_u32(out, n);
  }
  out += "data";
  put_u32(out, data_size);
  for (double x : w.samples) {
    if (pcm) {
      double v = x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x);
      long q = std::lround(v * 32768.0);
      if (q > 32767) q = 32767;
      if (q < -32768) q = -32768;
      put_u16(out, static_cast<uint16_t>(static_cast<int16_t>(q)));
    } else {
      put_u32(out, float_to_bits(static_cast<float>(x)));
    }
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("cannot write " + path);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write " + path + ": " + ec.message());
}

}  // namespace finsep::audio
