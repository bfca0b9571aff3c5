// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "finsep/models.hpp"

#include "finsep/errors.hpp"

namespace finsep {

std::unique_ptr<GraphSeparator> load_separator(const std::string& path) {
  const numcore::Checkpoint c = numcore::load_checkpoint(path);
  if (c.arch == "tasnet") return tasnet::from_checkpoint(c);
  if (c.arch == "demucs") return demucs::from_checkpoint(c);
  throw IoError("corrupt checkpoint: unknown architecture '" + c.arch + "' in " + path);
}

void save_separator(const GraphSeparator& model, const std::string& path,
                    const std::string& dtype) {
  numcore::save_checkpoint(model.to_checkpoint(dtype), path);
}

}  // namespace finsep
