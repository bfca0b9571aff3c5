// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "finsep/separator.hpp"

namespace finsep::tasnet {

// Mask-based time-domain separator: learned encoder basis, dilated-conv mask
// estimator, masked-feature transposed-conv decoder. Encoder frames overlap
// 50% (stride = frame_len / 2).
struct TasNetConfig {
  int64_t frame_len = 40;       // L, samples per encoder frame
  int64_t basis_size = 128;     // M, latent features per frame
  int64_t bottleneck = 64;      // B, channels entering the conv blocks
  int64_t block_channels = 128; // H, channels inside a block
  int64_t kernel = 3;           // P, depthwise kernel (odd)
  int64_t blocks_per_repeat = 6;  // X; block x dilates by 2^x
  int64_t repeats = 2;          // R
  int64_t n_sources = 2;
  std::string mask_nonlinearity = "sigmoid";
  std::string norm = "gln";     // "gln" | "none"

  int64_t stride() const { return frame_len / 2; }
  void validate() const;
};

// Influence span of the mask estimator in encoder frames:
// 1 + sum over repeats and blocks of (P-1)*2^x.
int64_t receptive_field(const TasNetConfig& cfg);

class TasNetModel : public GraphSeparator {
 public:
  TasNetModel(TasNetConfig cfg, uint64_t seed);

  const std::string& arch() const override { return arch_; }
  numcore::ParamStore& params() override { return params_; }
  const numcore::ParamStore& params() const override { return params_; }
  const TasNetConfig& config() const { return cfg_; }
  uint64_t seed() const { return seed_; }

  std::pair<numcore::Var, numcore::Var> build_graph(
      numcore::Tape& tape, const numcore::VarMap& vars,
      const numcore::Tensor& mixture_chunk) const override;

  // Pre-sigmoid mask logits [1, n_sources*M, N] for an encoded sequence
  // z [1, M, N]; exposed for the receptive-field measurement.
  numcore::Var mask_logits(numcore::Tape& tape, const numcore::VarMap& vars,
                           numcore::Var z) const;

  numcore::Checkpoint to_checkpoint(const std::string& dtype = "f32") const override;

 private:
  TasNetConfig cfg_;
  uint64_t seed_ = 0;
  std::string arch_ = "tasnet";
  numcore::ParamStore params_;
};

std::unique_ptr<TasNetModel> from_checkpoint(const numcore::Checkpoint& c);

// --- single-frame / plain-tensor views of the network stages ---

// z = relu(x . S) for one frame x [L]; z [M] is non-negative.
numcore::Tensor encode(const TasNetModel& m, const numcore::Tensor& frame);

// Masks [n_sources, N, M] in (0, 1) for an encoded sequence [N, M].
numcore::Tensor estimate_masks(const TasNetModel& m, const numcore::Tensor& z_seq);

// b = z (element-wise *) mask; any matching shapes.
numcore::Tensor apply_mask(const numcore::Tensor& z, const numcore::Tensor& mask);

// Frame reconstruction b [M] -> [L] through the decoder basis.
numcore::Tensor decode(const TasNetModel& m, const numcore::Tensor& features);

// Full-signal separation (chunking + overlap-add).
std::pair<audio::Waveform, audio::Waveform> forward(const audio::Waveform& mixture,
                                                    const TasNetModel& m,
                                                    const audio::ChunkSpec& spec);

}  // namespace finsep::tasnet
