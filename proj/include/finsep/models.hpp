// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <memory>
#include <string>

#include "finsep/demucs.hpp"
#include "finsep/separator.hpp"
#include "finsep/tasnet.hpp"

namespace finsep {

// Instantiates the architecture named in the checkpoint and loads its
// parameters. Throws IoError on unknown architectures or shape mismatches.
std::unique_ptr<GraphSeparator> load_separator(const std::string& path);

void save_separator(const GraphSeparator& model, const std::string& path,
                    const std::string& dtype = "f32");

}  // namespace finsep
