// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "finsep/rng.hpp"
#include "finsep/tape.hpp"

namespace finsep::numcore {

using VarMap = std::unordered_map<std::string, Var>;

// Ordered collection of named parameter tensors. Insertion order defines the
// checkpoint serialization order.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor init);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) > 0; }

  const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
  std::vector<std::pair<std::string, Tensor>>& items() { return items_; }
  size_t size() const { return items_.size(); }
  int64_t total_elements() const;

  // Registers every parameter as a tape leaf.
  VarMap leaves(Tape& tape, bool requires_grad = true) const;

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
  std::unordered_map<std::string, size_t> index_;
};

// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) fill.
void init_uniform_fan_in(Tensor& t, int64_t fan_in, Rng& rng);

}  // namespace finsep::numcore
