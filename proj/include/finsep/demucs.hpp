// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "finsep/separator.hpp"

namespace finsep::demucs {

// Synthesis-based separator: strided conv encoder with channel doubling, a
// 2-layer BiLSTM bottleneck with a linear reduction, and a mirrored
// transposed-conv decoder with U-net skip sums.
struct DemucsConfig {
  int64_t depth = 3;            // B (paper scale 6, desk 3)
  int64_t channels = 8;         // C1, first-layer output channels (paper 100)
  int64_t kernel = 8;           // K of the strided convs
  int64_t stride = 4;           // S
  int64_t context = 3;          // decoder conv kernel (stride 1, length-preserving)
  int64_t audio_channels = 1;   // A, mono
  int64_t n_sources = 2;
  int64_t lstm_layers = 2;

  // Encoder layer i (1-based) emits channels * 2^(i-1) channels; the LSTM
  // hidden size equals the deepest layer's channel count.
  int64_t layer_channels(int64_t i) const { return channels << (i - 1); }
  int64_t lstm_hidden() const { return layer_channels(depth); }
  void validate() const;
};

// Smallest L_pad >= L that survives depth strided layers and their mirrored
// transposed layers unchanged. forward() zero-pads to this length and trims
// after decoding.
int64_t valid_length(int64_t L, const DemucsConfig& cfg);

class DemucsModel : public GraphSeparator {
 public:
  DemucsModel(DemucsConfig cfg, uint64_t seed);

  const std::string& arch() const override { return arch_; }
  numcore::ParamStore& params() override { return params_; }
  const numcore::ParamStore& params() const override { return params_; }
  const DemucsConfig& config() const { return cfg_; }
  uint64_t seed() const { return seed_; }

  std::pair<numcore::Var, numcore::Var> build_graph(
      numcore::Tape& tape, const numcore::VarMap& vars,
      const numcore::Tensor& mixture_chunk) const override;

  // Graph stages, exposed for tests. x is [1, A, L].
  struct Encoded {
    numcore::Var latent;
    std::vector<numcore::Var> skips;  // skips[i] = encoder layer i+1 output
  };
  Encoded encode_graph(numcore::Tape& tape, const numcore::VarMap& vars,
                       numcore::Var x) const;
  numcore::Var bottleneck_graph(numcore::Tape& tape, const numcore::VarMap& vars,
                                numcore::Var latent) const;
  numcore::Var decode_graph(numcore::Tape& tape, const numcore::VarMap& vars,
                            numcore::Var latent, const std::vector<numcore::Var>& skips) const;

  // Sets every bias tensor to zero (zero input then maps to zero output).
  void zero_biases();

  numcore::Checkpoint to_checkpoint(const std::string& dtype = "f32") const override;

 private:
  DemucsConfig cfg_;
  uint64_t seed_ = 0;
  std::string arch_ = "demucs";
  numcore::ParamStore params_;
};

std::unique_ptr<DemucsModel> from_checkpoint(const numcore::Checkpoint& c);

// --- plain-tensor views of the stages ---

struct EncodedTensors {
  numcore::Tensor latent;
  std::vector<numcore::Tensor> skips;
};

// Accepts any length whose whole schedule stays >= kernel; skip shapes only
// pair up with the decoder when the input length is a valid_length.
EncodedTensors encode(const numcore::Tensor& x, const DemucsModel& m);
numcore::Tensor bottleneck(const numcore::Tensor& latent, const DemucsModel& m);
numcore::Tensor decode(const numcore::Tensor& latent,
                       const std::vector<numcore::Tensor>& skips, const DemucsModel& m);

std::pair<audio::Waveform, audio::Waveform> forward(const audio::Waveform& mixture,
                                                    const DemucsModel& m,
                                                    const audio::ChunkSpec& spec);

}  // namespace finsep::demucs
