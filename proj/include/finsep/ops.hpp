// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <optional>
#include <vector>

#include "finsep/tape.hpp"

namespace finsep::numcore {

// Sequence tensors are [batch, channels, time] throughout. There is no
// implicit broadcasting; the only shape-bending ops are the explicit
// reshape/slice views below and per-channel bias/affine terms inside layers.

// ---- elementwise / structural ----

Var add(Var a, Var b);        // same shape
Var sub(Var a, Var b);        // same shape
Var mul(Var a, Var b);        // same shape, element product
Var divide(Var a, Var b);     // same shape, element quotient
Var scale(Var a, double c);
Var add_const(Var a, double c);
Var neg(Var a);
Var mul_scalar(Var a, Var s);  // tensor times scalar var
Var sum_all(Var a);            // -> scalar [1]
Var mean_all(Var a);           // -> scalar [1]
Var abs_val(Var a);            // subgradient 0 at 0
Var log_val(Var a);            // natural log, elementwise
Var clamp(Var a, double lo, double hi);  // pass-through gradient inside
Var reshape(Var a, std::vector<int64_t> shape);
Var slice_channels(Var a, int64_t from, int64_t count);  // [B, C, L] view
Var slice_time(Var a, int64_t from, int64_t count);      // [B, C, L] view

// ---- activations ----

Var relu(Var a);
Var prelu(Var a, Var slope);  // slope: scalar [1] parameter
Var sigmoid(Var a);
// Gated linear unit over the channel axis: [B, 2C, L] -> [B, C, L],
// first half content, second half gate.
Var glu(Var a);

// ---- layers ----

struct Conv1dOpts {
  int64_t stride = 1;
  int64_t dilation = 1;
  int64_t groups = 1;
  int64_t padding = 0;
};

// Cross-correlation. x: [B, Ci, L], w: [Co, Ci/groups, k] ->
// [B, Co, floor((L + 2p - d*(k-1) - 1)/stride) + 1].
Var conv1d(Var x, Var w, std::optional<Var> bias, const Conv1dOpts& opts = {});

// Adjoint of conv1d (groups = 1). x: [B, Ci, L], w: [Ci, Co, k] ->
// [B, Co, (L-1)*stride + k - 2*padding].
Var conv1d_transpose(Var x, Var w, std::optional<Var> bias, int64_t stride = 1,
                     int64_t padding = 0);

// Normalizes over (channels, time) per batch item, then applies a
// per-channel affine. gain/bias: [C].
Var global_layer_norm(Var x, Var gain, Var bias, double eps = 1e-8);

// Pointwise channel map. x: [B, Ci, L], w: [Co, Ci] -> [B, Co, L].
Var linear(Var x, Var w, std::optional<Var> bias);

// ---- bidirectional LSTM ----

struct LstmDirParams {
  Var w_ih;  // [4H, input]
  Var w_hh;  // [4H, H]
  Var b_ih;  // [4H]
  Var b_hh;  // [4H]
};

struct BiLstmParams {
  // layers[l][0] runs forward in time, layers[l][1] backward.
  std::vector<std::array<LstmDirParams, 2>> layers;
  int64_t hidden = 0;
};

// x: [B, C, L] -> [B, 2*hidden, L]. Gate order (i, f, g, o); states start
// at zero. Layer l > 0 consumes the previous layer's 2H-channel output.
Var bilstm(Var x, const BiLstmParams& params);

// ---- non-tape helpers ----

// Output length of conv1d for the given geometry; throws if < 1.
int64_t conv1d_out_len(int64_t L, int64_t k, const Conv1dOpts& opts);

bool all_finite(const Tensor& t);

}  // namespace finsep::numcore
