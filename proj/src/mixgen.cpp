// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "finsep/mixgen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "finsep/errors.hpp"

namespace finsep::mixgen {

MixtureSample make_sample(const Frame& fish_chunk, const Frame& bg_chunk,
                          const MixCoefficients& coeffs) {
  if (fish_chunk.size() != bg_chunk.size())
    throw std::invalid_argument("make_sample: chunk length mismatch");
  if (coeffs.k_f < 0.0 || coeffs.k_b < 0.0 || coeffs.alpha_f <= 0.0)
    throw std::invalid_argument("make_sample: invalid coefficients");

  MixtureSample s;
  s.coeffs = coeffs;
  const size_t n = fish_chunk.size();
  s.source_fish.resize(n);
  s.source_background.resize(n);
  s.mixture.resize(n);
  const double gf = coeffs.k_f * coeffs.alpha_f;
  const double gb = 1.0 + coeffs.k_b;
  for (size_t i = 0; i < n; ++i) {
    s.source_fish[i] = gf * fish_chunk[i];
    s.source_background[i] = gb * bg_chunk[i];
    s.mixture[i] = s.source_fish[i] + s.source_background[i];
  }
  return s;
}

DatasetSplit split_dataset(int64_t item_count, double ratio, uint64_t seed) {
  if (item_count <= 0) throw std::invalid_argument("split_dataset: empty dataset");
  if (!(ratio > 0.0) || ratio > 1.0)
    throw std::invalid_argument("split_dataset: ratio must be in (0, 1]");

  std::vector<int64_t> ids(static_cast<size_t>(item_count));
  for (int64_t i = 0; i < item_count; ++i) ids[static_cast<size_t>(i)] = i;
  Rng rng(seed);
  for (int64_t i = item_count - 1; i > 0; --i) {
    const int64_t j = static_cast<int64_t>(rng.below(static_cast<uint64_t>(i + 1)));
    std::swap(ids[static_cast<size_t>(i)], ids[static_cast<size_t>(j)]);
  }
  const int64_t n_train = std::llround(ratio * static_cast<double>(item_count));

  DatasetSplit split;
  split.ratio = ratio;
  split.seed = seed;
  split.train_ids.assign(ids.begin(), ids.begin() + n_train);
  split.test_ids.assign(ids.begin() + n_train, ids.end());
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

namespace {

// Draw order is fixed (background, k_f, k_b) and keyed per item, so samples
// are identical no matter which worker evaluates them.
MixtureSample keyed_sample(uint64_t key, int64_t fish_index, const Frame& fish,
                           const std::vector<Frame>& bg_chunks, const KRange& k_range,
                           double alpha_f, int64_t epoch) {
  Rng rng(key);
  const int64_t bg_id = static_cast<int64_t>(rng.below(bg_chunks.size()));
  MixCoefficients c;
  c.k_f = rng.uniform(k_range.lo, k_range.hi);
  c.k_b = rng.uniform(k_range.lo, k_range.hi);
  c.alpha_f = alpha_f;
  MixtureSample s = make_sample(fish, bg_chunks[static_cast<size_t>(bg_id)], c);
  s.fish_id = fish_index;
  s.background_id = bg_id;
  s.epoch = epoch;
  return s;
}

constexpr uint64_t kTestsetStream = 0x7e57ULL;

}  // namespace

MixtureSample epoch_sample(int64_t epoch, int64_t fish_index,
                           const std::vector<Frame>& fish_chunks,
                           const std::vector<Frame>& bg_chunks, uint64_t rng_seed,
                           const KRange& k_range, double alpha_f) {
  if (fish_chunks.empty()) throw std::invalid_argument("epoch_sample: empty fish pool");
  if (bg_chunks.empty()) throw std::invalid_argument("epoch_sample: empty background pool");
  if (fish_index < 0 || fish_index >= static_cast<int64_t>(fish_chunks.size()))
    throw std::invalid_argument("epoch_sample: fish index out of range");
  const uint64_t key =
      mix_key(rng_seed, static_cast<uint64_t>(epoch), static_cast<uint64_t>(fish_index));
  return keyed_sample(key, fish_index, fish_chunks[static_cast<size_t>(fish_index)], bg_chunks,
                      k_range, alpha_f, epoch);
}

std::vector<MixtureSample> build_testset(const std::vector<Frame>& test_fish_chunks,
                                         const std::vector<Frame>& held_out_backgrounds,
                                         int64_t count, uint64_t seed, const KRange& k_range,
                                         double alpha_f) {
  if (count == 0) return {};
  if (test_fish_chunks.empty()) throw std::invalid_argument("build_testset: empty fish pool");
  if (held_out_backgrounds.empty())
    throw std::invalid_argument("build_testset: empty background pool");

  std::vector<MixtureSample> out;
  out.reserve(static_cast<size_t>(count));
  for (int64_t i = 0; i < count; ++i) {
    const int64_t fish_id = i % static_cast<int64_t>(test_fish_chunks.size());
    const uint64_t key = mix_key(seed, kTestsetStream, static_cast<uint64_t>(i));
    out.push_back(keyed_sample(key, fish_id, test_fish_chunks[static_cast<size_t>(fish_id)],
                               held_out_backgrounds, k_range, alpha_f, 0));
  }
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    ManifestEntry e;
    if (!(ss >> e.role)) continue;  // blank line
    if (!(ss >> e.split) || !std::getline(ss, e.path))
      throw IoError("corrupt manifest " + path + " line " + std::to_string(line_no));
    const size_t start = e.path.find_first_not_of(" \t");
    if (start == std::string::npos)
      throw IoError("corrupt manifest " + path + " line " + std::to_string(line_no));
    e.path = e.path.substr(start);
    while (!e.path.empty() && (e.path.back() == '\r' || e.path.back() == ' ')) e.path.pop_back();
    if (e.role != "fish" && e.role != "background")
      throw IoError("corrupt manifest " + path + " line " + std::to_string(line_no) +
                    ": role must be fish|background");
    if (e.split != "train" && e.split != "test")
      throw IoError("corrupt manifest " + path + " line " + std::to_string(line_no) +
                    ": split must be train|test");
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& path) {
  std::string out;
  for (const auto& e : entries) out += e.role + " " + e.split + " " + e.path + "\n";
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write " + path + ": " + ec.message());
}

}  // namespace finsep::mixgen
