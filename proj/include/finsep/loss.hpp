// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "finsep/ops.hpp"

namespace finsep::train {

// Negated scale-invariant SNR in dB, clamped to [-60, +60]. The target is a
// constant; with a silent target the loss falls back to an estimate-energy
// penalty 10*log10(|estimate|^2 + eps) so it never produces NaN.
numcore::Var si_snr_loss(numcore::Var estimate, const numcore::Tensor& target);

// Mean absolute error against a constant target.
numcore::Var l1_loss(numcore::Var estimate, const numcore::Tensor& target);

// Plain (non-differentiable) SI-SNR in dB, unclamped except for the zero
// cases: returns +inf for an exact reconstruction, -inf for a zero estimate
// or silent target.
double si_snr_db(const std::vector<double>& estimate, const std::vector<double>& target);

double l1_error(const std::vector<double>& estimate, const std::vector<double>& target);

}  // namespace finsep::train
