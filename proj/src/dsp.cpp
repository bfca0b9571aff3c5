// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "finsep/dsp.hpp"

#include <algorithm>
#include <stdexcept>

namespace finsep::audio {

Waveform peak_normalize(const Waveform& w, double target_db) {
  if (w.samples.empty()) throw std::runtime_error("silent signal: empty waveform");
  double peak = 0.0;
  for (double x : w.samples) peak = std::max(peak, std::fabs(x));
  if (peak == 0.0) throw std::runtime_error("silent signal: all-zero waveform");
  const double gain = db_to_linear(target_db) / peak;
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.resize(w.samples.size());
  for (size_t i = 0; i < w.samples.size(); ++i) out.samples[i] = w.samples[i] * gain;
  return out;
}

namespace {

// Blackman-windowed sinc, cutoff c in (0, 1] of the source Nyquist,
// half-width hw source samples.
double kernel(double d, double c, double hw) {
  if (std::fabs(d) >= hw) return 0.0;
  const double pi = 3.14159265358979323846;
  double s = (d == 0.0) ? c : std::sin(pi * c * d) / (pi * d);
  double u = d / hw;  // in (-1, 1)
  double win = 0.42 + 0.5 * std::cos(pi * u) + 0.08 * std::cos(2.0 * pi * u);
  return s * win;
}

}  // namespace

Waveform resample(const Waveform& w, int to_rate) {
  if (to_rate <= 0) throw std::invalid_argument("resample: to_rate must be positive");
  if (to_rate == w.sample_rate) return w;

  const int64_t len = w.size();
  const int64_t out_len =
      static_cast<int64_t>(std::llround(static_cast<double>(len) * to_rate / w.sample_rate));
  Waveform out;
  out.sample_rate = to_rate;
  out.samples.resize(static_cast<size_t>(out_len), 0.0);
  if (len == 0 || out_len == 0) {
    out.samples.clear();
    return out;
  }

  const double c = std::min(1.0, static_cast<double>(to_rate) / w.sample_rate);
  const double hw = 32.0 / c;  // keep the zero-crossing count when downsampling
  const double step = static_cast<double>(w.sample_rate) / to_rate;

  for (int64_t n = 0; n < out_len; ++n) {
    const double t = n * step;
    const int64_t lo = std::max<int64_t>(0, static_cast<int64_t>(std::ceil(t - hw)));
    const int64_t hi = std::min<int64_t>(len - 1, static_cast<int64_t>(std::floor(t + hw)));
    double acc = 0.0, wsum = 0.0;
    for (int64_t j = lo; j <= hi; ++j) {
      const double k = kernel(j - t, c, hw);
      acc += k * w.samples[static_cast<size_t>(j)];
      wsum += k;
    }
    // normalizing by the in-range kernel mass keeps DC exact and avoids
    // edge tapering
    out.samples[static_cast<size_t>(n)] = wsum != 0.0 ? acc / wsum : 0.0;
  }
  return out;
}

std::vector<std::vector<double>> chunk(const Waveform& w, const ChunkSpec& spec) {
  if (!spec.valid()) throw std::invalid_argument("chunk: invalid chunk spec");
  const int64_t len = w.size();
  if (len == 0) return {};
  const int64_t hop = spec.hop();
  const int64_t count =
      len <= spec.length ? 1 : (len - spec.length + hop - 1) / hop + 1;  // ceil
  std::vector<std::vector<double>> frames(static_cast<size_t>(count));
  for (int64_t i = 0; i < count; ++i) {
    auto& f = frames[static_cast<size_t>(i)];
    f.assign(static_cast<size_t>(spec.length), 0.0);
    const int64_t start = i * hop;
    const int64_t take = std::min(spec.length, len - start);
    for (int64_t j = 0; j < take; ++j) f[static_cast<size_t>(j)] = w.samples[static_cast<size_t>(start + j)];
  }
  return frames;
}

Waveform overlap_add(const std::vector<std::vector<double>>& frames, const ChunkSpec& spec,
                     int64_t original_len, int sample_rate) {
  if (!spec.valid()) throw std::invalid_argument("overlap_add: invalid chunk spec");
  for (const auto& f : frames)
    if (static_cast<int64_t>(f.size()) != spec.length)
      throw std::invalid_argument("overlap_add: inconsistent frame lengths");

  Waveform out;
  out.sample_rate = sample_rate;
  out.samples.assign(static_cast<size_t>(original_len), 0.0);
  if (frames.empty() || original_len == 0) return out;

  std::vector<double> coverage(static_cast<size_t>(original_len), 0.0);
  const int64_t hop = spec.hop();
  for (size_t i = 0; i < frames.size(); ++i) {
    const int64_t start = static_cast<int64_t>(i) * hop;
    for (int64_t j = 0; j < spec.length; ++j) {
      const int64_t pos = start + j;
      if (pos >= original_len) break;
      out.samples[static_cast<size_t>(pos)] += frames[i][static_cast<size_t>(j)];
      coverage[static_cast<size_t>(pos)] += 1.0;
    }
  }
  for (int64_t i = 0; i < original_len; ++i)
    if (coverage[static_cast<size_t>(i)] > 0.0)
      out.samples[static_cast<size_t>(i)] /= coverage[static_cast<size_t>(i)];
  return out;
}

}  // namespace finsep::audio
