// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace finsep::audio {

// Mono sample buffer plus its rate. Samples are nominally in [-1, 1]; the
// container tolerates excursions (pcm16 export clips them) but never NaN/Inf.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 44100;

  int64_t size() const { return static_cast<int64_t>(samples.size()); }
  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
};

enum class WavEncoding { pcm16, float32 };

// Reads a RIFF/WAVE file. PCM-16 and IEEE float-32, 1 or 2 channels; stereo
// frames are averaged to mono. PCM value v maps to v/32768.
Waveform read_wav(const std::string& path);

// Writes a mono RIFF/WAVE file. float32 round-trips bit-exactly; pcm16
// clips to [-1, 1] and quantizes to 1/32768 steps.
void write_wav(const Waveform& w, const std::string& path,
               WavEncoding encoding = WavEncoding::float32);

}  // namespace finsep::audio
