// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "finsep/tape.hpp"

#include <stdexcept>

namespace finsep::numcore {

int32_t Tape::check(Var v) const {
  if (v.tape != this || v.id < 0 || v.id >= static_cast<int32_t>(nodes_.size()))
    throw std::invalid_argument("tape: var does not belong to this tape");
  return v.id;
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int32_t>(nodes_.size() - 1)};
}

Var Tape::record(Tensor value, const std::vector<Var>& parents, BackFn backward) {
  Node n;
  n.value = std::move(value);
  n.parents.reserve(parents.size());
  bool wants = false;
  for (Var p : parents) {
    const int32_t id = check(p);
    n.parents.push_back(id);
    wants = wants || nodes_[id].requires_grad;
  }
  n.requires_grad = wants;
  if (wants) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int32_t>(nodes_.size() - 1)};
}

Tensor& Tape::grad_buf(int32_t id) {
  Node& n = nodes_[id];
  if (n.grad.vec().empty() && n.value.numel() > 0) n.grad = Tensor::zeros(n.value.shape());
  return n.grad;
}

Tensor Tape::grad(Var v) const {
  const int32_t id = check(v);
  const Node& n = nodes_[id];
  if (n.grad.vec().empty()) return Tensor::zeros(n.value.shape());
  return n.grad;
}

void Tape::backward(Var loss) {
  const int32_t loss_id = check(loss);
  if (backward_done_) throw std::runtime_error("tape: backward already ran");
  if (nodes_[loss_id].value.numel() != 1)
    throw std::invalid_argument("backward: loss must be scalar");
  if (!nodes_[loss_id].requires_grad)
    throw std::invalid_argument("backward: detached graph (no gradient-tracked inputs)");
  backward_done_ = true;

  grad_buf(loss_id)[0] = 1.0;
  for (int32_t id = loss_id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.backward) continue;
    if (n.grad.vec().empty()) continue;  // not on any path to the loss
    n.backward(*this, id);
  }
}

}  // namespace finsep::numcore
