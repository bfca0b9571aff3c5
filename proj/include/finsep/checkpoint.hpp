// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "finsep/tensor.hpp"

namespace finsep::numcore {

// Versioned checkpoint container: a line-oriented ASCII header (format
// version, architecture name, metadata, tensor declarations) followed by the
// raw little-endian tensor payloads in declaration order. Model exports use
// f32 arrays; training-state checkpoints use f64 so a resumed run continues
// bit-exactly. Byte-level layout is documented in the README.
struct CheckpointArray {
  std::string name;
  std::string dtype;  // "f32" | "f64"
  std::vector<int64_t> shape;
  std::vector<double> data;
};

struct Checkpoint {
  int version = 1;
  std::string arch;
  std::vector<std::pair<std::string, std::string>> meta;  // ordered key/value
  std::vector<CheckpointArray> arrays;

  bool has_meta(const std::string& key) const;
  const std::string& meta_at(const std::string& key) const;
  void set_meta(const std::string& key, const std::string& value);
  const CheckpointArray* find(const std::string& name) const;
};

// Atomic write (temp file + rename).
void save_checkpoint(const Checkpoint& c, const std::string& path);

// Throws finsep::IoError with a "corrupt checkpoint" message on malformed
// input.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace finsep::numcore
