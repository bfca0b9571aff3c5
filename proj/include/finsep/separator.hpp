// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <utility>

#include "finsep/checkpoint.hpp"
#include "finsep/dsp.hpp"
#include "finsep/params.hpp"
#include "finsep/wav.hpp"

namespace finsep {

// Common surface of the two separation networks: a named parameter store
// plus a differentiable graph from one mixture chunk to the two estimated
// source chunks.
class GraphSeparator {
 public:
  virtual ~GraphSeparator() = default;

  virtual const std::string& arch() const = 0;
  virtual numcore::ParamStore& params() = 0;
  virtual const numcore::ParamStore& params() const = 0;

  // Builds (fish, background) estimates for one mixture chunk [T]. Both
  // outputs are [T] on the same tape.
  virtual std::pair<numcore::Var, numcore::Var> build_graph(
      numcore::Tape& tape, const numcore::VarMap& vars,
      const numcore::Tensor& mixture_chunk) const = 0;

  // Architecture + hyperparameters + seed for the checkpoint header.
  virtual numcore::Checkpoint to_checkpoint(const std::string& dtype = "f32") const = 0;

  int sample_rate = 44100;  // rate the model was trained at
};

// Full-signal inference: chunk the mixture, run the model per chunk, and
// coverage-normalized overlap-add the results. Outputs match the input
// length and rate.
std::pair<audio::Waveform, audio::Waveform> separate_waveform(
    const GraphSeparator& model, const audio::Waveform& mixture,
    const audio::ChunkSpec& spec);

}  // namespace finsep
