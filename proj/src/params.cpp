// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "finsep/params.hpp"

#include <cmath>
#include <stdexcept>

namespace finsep::numcore {

Tensor& ParamStore::add(const std::string& name, Tensor init) {
  if (index_.count(name)) throw std::invalid_argument("params: duplicate name " + name);
  index_[name] = items_.size();
  items_.emplace_back(name, std::move(init));
  return items_.back().second;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("params: unknown name " + name);
  return items_[it->second].second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("params: unknown name " + name);
  return items_[it->second].second;
}

int64_t ParamStore::total_elements() const {
  int64_t n = 0;
  for (const auto& [name, t] : items_) n += t.numel();
  return n;
}

VarMap ParamStore::leaves(Tape& tape, bool requires_grad) const {
  VarMap vars;
  vars.reserve(items_.size());
  for (const auto& [name, t] : items_) vars.emplace(name, tape.leaf(t, requires_grad));
  return vars;
}

void init_uniform_fan_in(Tensor& t, int64_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in < 1 ? 1 : fan_in));
  for (double& v : t.vec()) v = rng.uniform(-bound, bound);
}

}  // namespace finsep::numcore
