// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "finsep/tensor.hpp"

namespace finsep::numcore {

class Tape;

// Handle to a value recorded on a tape. Cheap to copy.
struct Var {
  Tape* tape = nullptr;
  int32_t id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
};

// Reverse-mode autodiff tape. Operations append records in topological
// order; backward() walks them exactly once in reverse. A tape is confined
// to one logical thread and supports a single backward pass.
class Tape {
 public:
  using BackFn = std::function<void(Tape&, int32_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Enters a leaf value. Parameters use requires_grad = true; inputs and
  // constants use false.
  Var leaf(Tensor value, bool requires_grad = false);

  // Records an op result. requires_grad is inherited from the parents; the
  // backward closure is dropped when no parent tracks gradients.
  Var record(Tensor value, const std::vector<Var>& parents, BackFn backward);

  const Tensor& val(Var v) const { return nodes_[check(v)].value; }

  // Accumulated gradient of a leaf/op output after backward(); zeros if the
  // node never influenced the loss.
  Tensor grad(Var v) const;

  // Seeds d(loss)/d(loss) = 1 and propagates. loss must be scalar and must
  // depend on at least one requires_grad leaf.
  void backward(Var loss);

  bool requires_grad(Var v) const { return nodes_[check(v)].requires_grad; }
  size_t size() const { return nodes_.size(); }

  // --- used by op implementations ---
  Tensor& grad_buf(int32_t id);           // lazily allocated, zero-initialized
  bool grad_wanted(int32_t id) const { return nodes_[id].requires_grad; }
  bool grad_present(int32_t id) const { return !nodes_[id].grad.vec().empty() || nodes_[id].value.numel() == 0; }
  const Tensor& val_of(int32_t id) const { return nodes_[id].value; }
  const std::vector<int32_t>& parents_of(int32_t id) const { return nodes_[id].parents; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // empty until touched
    std::vector<int32_t> parents;
    BackFn backward;
    bool requires_grad = false;
  };

  int32_t check(Var v) const;

  // deque: node references stay valid while later ops append records
  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace finsep::numcore
