// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "finsep/rng.hpp"

namespace finsep::mixgen {

using Frame = std::vector<double>;

// Gains applied when a fish chunk and a background chunk are combined:
//   s0 = k_f * alpha_f * fish,  s1 = (1 + k_b) * background.
struct MixCoefficients {
  double k_f = 1.0;
  double k_b = 0.0;
  double alpha_f = 0.1;
};

// One supervised item: the mixture, both ground-truth sources, and the
// provenance of the draw. mixture[i] == source_fish[i] + source_background[i]
// exactly, in the working precision.
struct MixtureSample {
  Frame mixture;
  Frame source_fish;
  Frame source_background;
  MixCoefficients coeffs;
  int64_t fish_id = -1;
  int64_t background_id = -1;
  int64_t epoch = 0;
};

struct DatasetSplit {
  std::vector<int64_t> train_ids;
  std::vector<int64_t> test_ids;
  double ratio = 0.8;
  uint64_t seed = 0;
};

// Inclusive range for the uniform k_f / k_b draws.
struct KRange {
  double lo = 0.0;
  double hi = 1.0;
};

MixtureSample make_sample(const Frame& fish_chunk, const Frame& bg_chunk,
                          const MixCoefficients& coeffs);

// Seeded shuffle; |train| = round(ratio * count). Deterministic per seed.
DatasetSplit split_dataset(int64_t item_count, double ratio = 0.8, uint64_t seed = 0);

// Draws the background index and (k_f, k_b) from an RNG keyed by
// (seed, epoch, fish_index): the same key yields a bit-identical sample no
// matter when or where it is evaluated.
MixtureSample epoch_sample(int64_t epoch, int64_t fish_index,
                           const std::vector<Frame>& fish_chunks,
                           const std::vector<Frame>& bg_chunks, uint64_t rng_seed,
                           const KRange& k_range = {}, double alpha_f = 0.1);

// Deterministic synthetic test set: item i uses fish chunk i mod pool size
// and a seeded random background. The background pool is expected to be
// disjoint from the training backgrounds (held out by the manifest split).
std::vector<MixtureSample> build_testset(const std::vector<Frame>& test_fish_chunks,
                                         const std::vector<Frame>& held_out_backgrounds,
                                         int64_t count, uint64_t seed,
                                         const KRange& k_range = {}, double alpha_f = 0.1);

// Line-oriented dataset manifest, one record per file:
//   <role> <split> <path>     role: fish|background, split: train|test
// '#' starts a comment.
struct ManifestEntry {
  std::string role;
  std::string split;
  std::string path;
};

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& path);

}  // namespace finsep::mixgen
