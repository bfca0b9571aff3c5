// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "finsep/stft.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "finsep/errors.hpp"

namespace finsep::audio {

namespace {
constexpr double kPi = 3.14159265358979323846;

bool is_pow2(int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

void check_window(int64_t window, int64_t hop) {
  if (!is_pow2(window)) throw std::invalid_argument("stft: window must be a power of two");
  if (hop < 1 || hop > window) throw std::invalid_argument("stft: hop must be in [1, window]");
}
}  // namespace

void fft(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  if (!is_pow2(static_cast<int64_t>(n))) throw std::invalid_argument("fft: size must be a power of two");
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t j = 0; j < len / 2; ++j) {
        std::complex<double> u = a[i + j];
        std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

std::vector<double> hann_window(int64_t size) {
  std::vector<double> w(static_cast<size_t>(size));
  for (int64_t n = 0; n < size; ++n)
    w[static_cast<size_t>(n)] = 0.5 - 0.5 * std::cos(2.0 * kPi * n / static_cast<double>(size));
  return w;
}

Stft stft(const std::vector<double>& x, int64_t window, int64_t hop) {
  check_window(window, hop);
  const int64_t len = static_cast<int64_t>(x.size());
  if (len < window) throw std::runtime_error("stft: input shorter than one window");

  Stft out;
  out.window = window;
  out.hop = hop;
  out.frames = (len - window) / hop + 1;
  out.bins = window / 2 + 1;
  out.data.resize(static_cast<size_t>(out.frames * out.bins));

  const std::vector<double> w = hann_window(window);
  std::vector<std::complex<double>> buf(static_cast<size_t>(window));
  for (int64_t f = 0; f < out.frames; ++f) {
    const int64_t start = f * hop;
    for (int64_t n = 0; n < window; ++n)
      buf[static_cast<size_t>(n)] = x[static_cast<size_t>(start + n)] * w[static_cast<size_t>(n)];
    fft(buf, false);
    for (int64_t k = 0; k < out.bins; ++k) out.at(f, k) = buf[static_cast<size_t>(k)];
  }
  return out;
}

NoiseProfile estimate_noise_profile(const Waveform& w, int64_t window, int64_t hop) {
  const Stft s = stft(w.samples, window, hop);
  NoiseProfile p;
  p.window = window;
  p.hop = hop;
  p.mean.assign(static_cast<size_t>(s.bins), 0.0);
  p.stddev.assign(static_cast<size_t>(s.bins), 0.0);
  for (int64_t k = 0; k < s.bins; ++k) {
    double sum = 0.0, sum2 = 0.0;
    for (int64_t f = 0; f < s.frames; ++f) {
      const double m = std::abs(s.at(f, k));
      sum += m;
      sum2 += m * m;
    }
    const double mean = sum / static_cast<double>(s.frames);
    const double var = std::max(0.0, sum2 / static_cast<double>(s.frames) - mean * mean);
    p.mean[static_cast<size_t>(k)] = mean;
    p.stddev[static_cast<size_t>(k)] = std::sqrt(var);
  }
  return p;
}

Waveform denoise(const Waveform& w, const NoiseProfile& profile, double threshold_sigmas,
                 double reduction_db) {
  const int64_t window = profile.window;
  const int64_t hop = profile.hop;
  check_window(window, hop);
  if (static_cast<int64_t>(profile.mean.size()) != window / 2 + 1)
    throw std::invalid_argument("denoise: profile bin count does not match its window");

  const int64_t len = w.size();
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.assign(static_cast<size_t>(len), 0.0);
  if (len == 0) return out;

  // centered framing: pad by one window each side so every input sample has
  // full analysis coverage, then trim
  int64_t padded = len + 2 * window;
  if ((padded - window) % hop != 0) padded += hop - (padded - window) % hop;
  std::vector<double> x(static_cast<size_t>(padded), 0.0);
  for (int64_t i = 0; i < len; ++i) x[static_cast<size_t>(window + i)] = w.samples[static_cast<size_t>(i)];

  const std::vector<double> win = hann_window(window);
  const int64_t frames = (padded - window) / hop + 1;
  const int64_t bins = window / 2 + 1;
  const double gate_gain = std::pow(10.0, -reduction_db / 20.0);

  std::vector<double> acc(static_cast<size_t>(padded), 0.0);
  std::vector<double> cov(static_cast<size_t>(padded), 0.0);
  std::vector<std::complex<double>> buf(static_cast<size_t>(window));

  for (int64_t f = 0; f < frames; ++f) {
    const int64_t start = f * hop;
    for (int64_t n = 0; n < window; ++n)
      buf[static_cast<size_t>(n)] = x[static_cast<size_t>(start + n)] * win[static_cast<size_t>(n)];
    fft(buf, false);
    for (int64_t k = 0; k < bins; ++k) {
      const double mag = std::abs(buf[static_cast<size_t>(k)]);
      const double gate = profile.mean[static_cast<size_t>(k)] +
                          threshold_sigmas * profile.stddev[static_cast<size_t>(k)];
      if (mag < gate) {
        buf[static_cast<size_t>(k)] *= gate_gain;
        if (k > 0 && k < window / 2) buf[static_cast<size_t>(window - k)] *= gate_gain;
      }
    }
    fft(buf, true);
    for (int64_t n = 0; n < window; ++n) {
      acc[static_cast<size_t>(start + n)] += buf[static_cast<size_t>(n)].real() * win[static_cast<size_t>(n)];
      cov[static_cast<size_t>(start + n)] += win[static_cast<size_t>(n)] * win[static_cast<size_t>(n)];
    }
  }
  for (int64_t i = 0; i < len; ++i) {
    const double c = cov[static_cast<size_t>(window + i)];
    out.samples[static_cast<size_t>(i)] = c > 1e-12 ? acc[static_cast<size_t>(window + i)] / c : 0.0;
  }
  return out;
}

Spectrogram spectrogram(const Waveform& w, int64_t window, int64_t hop, double floor_db) {
  const Stft s = stft(w.samples, window, hop);
  Spectrogram out;
  out.window = window;
  out.hop = hop;
  out.frames = s.frames;
  out.bins = s.bins;
  out.floor_db = floor_db;
  out.db.resize(static_cast<size_t>(s.frames * s.bins));
  // full scale: a unit-amplitude bin-centered sine has magnitude sum(w)/2
  const std::vector<double> win = hann_window(window);
  double wsum = 0.0;
  for (double v : win) wsum += v;
  const double ref = wsum / 2.0;
  for (int64_t f = 0; f < s.frames; ++f)
    for (int64_t k = 0; k < s.bins; ++k) {
      const double mag = std::abs(s.at(f, k));
      double db = mag > 0.0 ? 20.0 * std::log10(mag / ref) : floor_db;
      out.db[static_cast<size_t>(f * s.bins + k)] = std::max(db, floor_db);
    }
  return out;
}

void write_spectrogram_pgm(const Spectrogram& s, const std::string& path) {
  std::string out = "P5\n" + std::to_string(s.frames) + " " + std::to_string(s.bins) + "\n255\n";
  out.reserve(out.size() + static_cast<size_t>(s.frames * s.bins));
  for (int64_t row = 0; row < s.bins; ++row) {
    const int64_t bin = s.bins - 1 - row;  // top row = highest frequency
    for (int64_t f = 0; f < s.frames; ++f) {
      const double v = (s.at(f, bin) - s.floor_db) / (0.0 - s.floor_db);
      int g = static_cast<int>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
      out.push_back(static_cast<char>(g));
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

void write_spectrogram_csv(const Spectrogram& s, const std::string& path) {
  std::string out;
  char buf[32];
  for (int64_t f = 0; f < s.frames; ++f) {
    for (int64_t k = 0; k < s.bins; ++k) {
      std::snprintf(buf, sizeof(buf), "%.6f", s.at(f, k));
      if (k) out.push_back(',');
      out += buf;
    }
    out.push_back('\n');
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
