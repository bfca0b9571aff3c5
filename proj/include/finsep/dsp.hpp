// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "finsep/wav.hpp"

namespace finsep::audio {

inline double db_to_linear(double db) { return std::pow(10.0, db / 20.0); }
inline double linear_to_db(double a) { return 20.0 * std::log10(a); }

// Fixed-length framing of a waveform. hop = round(length * (1 - overlap)).
struct ChunkSpec {
  int64_t length = 44160;
  double overlap = 0.25;

  int64_t hop() const { return static_cast<int64_t>(std::llround(length * (1.0 - overlap))); }
  bool valid() const { return length >= 1 && overlap >= 0.0 && overlap < 1.0 && hop() >= 1 && hop() <= length; }
};

// Scales the signal so that max |sample| equals 10^(target_db/20).
// Pure gain; throws on an all-zero ("silent signal") or empty input.
Waveform peak_normalize(const Waveform& w, double target_db = -1.0);

// Band-limited rate conversion (windowed-sinc, per-output normalization).
// Output length = round(len * to_rate / from_rate). Identity when the rates
// already match.
Waveform resample(const Waveform& w, int to_rate);

// Splits w into frames of spec.length every spec.hop() samples; the final
// frame is zero-padded. Empty input yields an empty list.
std::vector<std::vector<double>> chunk(const Waveform& w, const ChunkSpec& spec);

// Inverse of chunk: per-sample coverage-normalized overlap-add, trimmed to
// original_len. overlap_add(chunk(w, s), s, w.size()) == w within 1e-6.
Waveform overlap_add(const std::vector<std::vector<double>>& frames, const ChunkSpec& spec,
                     int64_t original_len, int sample_rate);

}  // namespace finsep::audio
