// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "finsep/loss.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace finsep::train {

using numcore::Tensor;
using numcore::Var;

namespace {
constexpr double kClampDb = 60.0;
constexpr double kTiny = 1e-30;       // keeps the log finite at exact reconstruction
constexpr double kEnergyEps = 1e-8;   // silent-target fallback floor
constexpr double kTenOverLn10 = 4.342944819032518;  // 10 / ln(10)
}  // namespace

Var si_snr_loss(Var estimate, const Tensor& target) {
  numcore::Tape& tape = *estimate.tape;
  const Tensor& ev = tape.val(estimate);
  if (ev.rank() != 1 || target.rank() != 1 || ev.numel() != target.numel())
    throw std::invalid_argument("si_snr_loss: estimate/target length mismatch");

  double tt = 0.0;
  for (double v : target.vec()) tt += v * v;

  if (tt == 0.0) {
    // silent target: penalize estimate energy instead of a scale match
    Var pe = numcore::sum_all(numcore::mul(estimate, estimate));
    Var loss = numcore::scale(numcore::log_val(numcore::add_const(pe, kEnergyEps)), kTenOverLn10);
    return numcore::clamp(loss, -kClampDb, kClampDb);
  }

  Var t = tape.leaf(target, false);
  Var dot = numcore::sum_all(numcore::mul(estimate, t));
  Var alpha = numcore::scale(dot, 1.0 / tt);
  Var s_target = numcore::mul_scalar(t, alpha);
  Var e = numcore::sub(estimate, s_target);
  Var ps = numcore::sum_all(numcore::mul(s_target, s_target));
  Var pe = numcore::sum_all(numcore::mul(e, e));
  Var snr = numcore::scale(
      numcore::sub(numcore::log_val(numcore::add_const(ps, kTiny)),
                   numcore::log_val(numcore::add_const(pe, kTiny))),
      kTenOverLn10);
  return numcore::clamp(numcore::neg(snr), -kClampDb, kClampDb);
}

Var l1_loss(Var estimate, const Tensor& target) {
  numcore::Tape& tape = *estimate.tape;
  const Tensor& ev = tape.val(estimate);
  if (ev.numel() != target.numel())
    throw std::invalid_argument("l1_loss: estimate/target length mismatch");
  Var t = tape.leaf(target, false);
  return numcore::mean_all(numcore::abs_val(numcore::sub(estimate, t)));
}

double si_snr_db(const std::vector<double>& estimate, const std::vector<double>& target) {
  if (estimate.size() != target.size())
    throw std::invalid_argument("si_snr_db: length mismatch");
  double tt = 0.0, dot = 0.0;
  for (size_t i = 0; i < target.size(); ++i) {
    tt += target[i] * target[i];
    dot += estimate[i] * target[i];
  }
  const double inf = std::numeric_limits<double>::infinity();
  if (tt == 0.0) return -inf;
  const double alpha = dot / tt;
  double ps = 0.0, pe = 0.0;
  for (size_t i = 0; i < target.size(); ++i) {
    const double s = alpha * target[i];
    const double e = estimate[i] - s;
    ps += s * s;
    pe += e * e;
  }
  if (ps == 0.0) return -inf;
  if (pe == 0.0) return inf;
  return 10.0 * std::log10(ps / pe);
}

double l1_error(const std::vector<double>& estimate, const std::vector<double>& target) {
  if (estimate.size() != target.size()) throw std::invalid_argument("l1_error: length mismatch");
  if (estimate.empty()) return 0.0;
  double acc = 0.0;
  for (size_t i = 0; i < estimate.size(); ++i) acc += std::fabs(estimate[i] - target[i]);
  return acc / static_cast<double>(estimate.size());
}

}  // namespace finsep::train
