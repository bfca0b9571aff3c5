// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <stdexcept>
#include <string>

namespace finsep {

// File and container problems (missing paths, bad WAV headers, corrupt
// checkpoints). The CLI maps these to exit code 2; everything else that
// escapes a subcommand maps to exit code 1.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace finsep
