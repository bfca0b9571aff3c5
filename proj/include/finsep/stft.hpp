// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "finsep/wav.hpp"

namespace finsep::audio {

// In-place radix-2 FFT; size must be a power of two. The inverse transform
// scales by 1/n.
void fft(std::vector<std::complex<double>>& a, bool inverse);

// Periodic Hann window of the given size.
std::vector<double> hann_window(int64_t size);

// Hann-windowed short-time Fourier transform. Frames start at i*hop for
// i in [0, frames); frames = floor((len - window)/hop) + 1. No padding, so
// the input must be at least one window long. window must be a power of two.
struct Stft {
  int64_t window = 0;
  int64_t hop = 0;
  int64_t frames = 0;
  int64_t bins = 0;  // window/2 + 1
  std::vector<std::complex<double>> data;  // frames x bins, row-major

  std::complex<double>& at(int64_t frame, int64_t bin) { return data[frame * bins + bin]; }
  const std::complex<double>& at(int64_t frame, int64_t bin) const { return data[frame * bins + bin]; }
};

Stft stft(const std::vector<double>& x, int64_t window, int64_t hop);

// Per-bin magnitude statistics of a noise recording, used by the spectral
// gate. bins = window/2 + 1.
struct NoiseProfile {
  int64_t window = 0;
  int64_t hop = 0;
  std::vector<double> mean;  // linear magnitude
  std::vector<double> stddev;
};

NoiseProfile estimate_noise_profile(const Waveform& w, int64_t window = 1024, int64_t hop = 256);

// Spectral gate: STFT bins with magnitude below mean + threshold_sigmas*std
// are attenuated by reduction_db, then the signal is rebuilt with a
// coverage-normalized inverse STFT. Output length equals input length.
Waveform denoise(const Waveform& w, const NoiseProfile& profile,
                 double threshold_sigmas = 1.5, double reduction_db = 12.0);

// Magnitude spectrogram in dB relative to full scale (a unit-amplitude
// bin-centered sine reads 0 dB), clamped at floor_db.
struct Spectrogram {
  int64_t window = 0;
  int64_t hop = 0;
  int64_t frames = 0;
  int64_t bins = 0;
  double floor_db = -120.0;
  std::vector<double> db;  // frames x bins, row-major

  double at(int64_t frame, int64_t bin) const { return db[frame * bins + bin]; }
};

Spectrogram spectrogram(const Waveform& w, int64_t window = 1024, int64_t hop = 256,
                        double floor_db = -120.0);

// 8-bit binary PGM (P5): columns = frames, rows = bins (top row = highest
// frequency); floor_db maps to 0 and 0 dB to 255.
void write_spectrogram_pgm(const Spectrogram& s, const std::string& path);

// CSV matrix, one frame per row.
void write_spectrogram_csv(const Spectrogram& s, const std::string& path);

}  // namespace finsep::audio
