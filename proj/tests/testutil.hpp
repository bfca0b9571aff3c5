// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "finsep/ops.hpp"
#include "finsep/rng.hpp"
#include "finsep/tape.hpp"

namespace testutil {

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    static std::atomic<uint64_t> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("finsep_" + tag + "_" + std::to_string(counter.fetch_add(1)) + "_" +
            std::to_string(static_cast<uint64_t>(
                std::hash<std::string>{}(std::filesystem::current_path().string()))));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

// ---- signal fixtures ----

inline std::vector<double> sine(int64_t len, double freq, double rate, double amp = 1.0,
                                double phase = 0.0) {
  std::vector<double> x(static_cast<size_t>(len));
  const double w = 2.0 * 3.14159265358979323846 * freq / rate;
  for (int64_t i = 0; i < len; ++i) x[static_cast<size_t>(i)] = amp * std::sin(w * i + phase);
  return x;
}

inline std::vector<double> gaussian_noise(int64_t len, uint64_t seed, double amp = 1.0) {
  finsep::Rng rng(seed);
  std::vector<double> x(static_cast<size_t>(len));
  for (auto& v : x) v = amp * rng.next_gaussian();
  return x;
}

inline double energy_of(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

// ---- independent spectral oracle (direct DFT, no shared FFT code) ----

// |DFT| of x at every bin k in [0, n/2]; O(n^2), use on short segments.
inline std::vector<double> naive_dft_magnitudes(const std::vector<double>& x) {
  const int64_t n = static_cast<int64_t>(x.size());
  std::vector<double> mags(static_cast<size_t>(n / 2 + 1));
  const double step = 2.0 * 3.14159265358979323846 / static_cast<double>(n);
  for (int64_t k = 0; k <= n / 2; ++k) {
    double re = 0.0, im = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      const double a = step * static_cast<double>(k) * static_cast<double>(i);
      re += x[static_cast<size_t>(i)] * std::cos(a);
      im -= x[static_cast<size_t>(i)] * std::sin(a);
    }
    mags[static_cast<size_t>(k)] = std::hypot(re, im);
  }
  return mags;
}

inline int64_t peak_bin(const std::vector<double>& mags, int64_t skip_dc = 1) {
  int64_t best = skip_dc;
  for (int64_t k = skip_dc; k < static_cast<int64_t>(mags.size()); ++k)
    if (mags[static_cast<size_t>(k)] > mags[static_cast<size_t>(best)]) best = k;
  return best;
}

// ---- finite-difference gradient harness ----

// Builds a graph from leaves created over `inputs` and returns the op output
// (any shape). The harness reduces it with fixed random weights and compares
// reverse-mode gradients against central differences.
using GraphBuilder = std::function<finsep::numcore::Var(
    finsep::numcore::Tape&, const std::vector<finsep::numcore::Var>&)>;

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_input;
};

inline GradCheckResult finite_difference_check(const std::vector<finsep::numcore::Tensor>& inputs,
                                               const GraphBuilder& build, uint64_t weight_seed,
                                               double h = 1e-5) {
  using finsep::numcore::Tape;
  using finsep::numcore::Tensor;
  using finsep::numcore::Var;

  auto eval = [&](const std::vector<Tensor>& xs) -> std::pair<double, std::vector<Tensor>> {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(xs.size());
    for (const auto& x : xs) leaves.push_back(tape.leaf(x, true));
    Var out = build(tape, leaves);
    const Tensor& ov = tape.val(out);
    finsep::Rng wr(weight_seed);
    Tensor w(ov.shape());
    for (double& v : w.vec()) v = wr.uniform(-1.0, 1.0);
    Var loss = finsep::numcore::sum_all(finsep::numcore::mul(out, tape.leaf(w, false)));
    const double value = tape.val(loss)[0];
    tape.backward(loss);
    std::vector<Tensor> grads;
    for (Var l : leaves) grads.push_back(tape.grad(l));
    return {value, grads};
  };

  const auto [value0, ad_grads] = eval(inputs);
  (void)value0;

  GradCheckResult result;
  for (size_t i = 0; i < inputs.size(); ++i) {
    double max_abs = 1e-3;
    double max_diff = 0.0;
    for (int64_t j = 0; j < inputs[i].numel(); ++j) {
      std::vector<Tensor> xs = inputs;
      xs[i][j] = inputs[i][j] + h;
      const double fp = eval(xs).first;
      xs[i][j] = inputs[i][j] - h;
      const double fm = eval(xs).first;
      const double fd = (fp - fm) / (2.0 * h);
      const double ad = ad_grads[i][j];
      max_diff = std::max(max_diff, std::fabs(fd - ad));
      max_abs = std::max({max_abs, std::fabs(fd), std::fabs(ad)});
    }
    const double rel = max_diff / max_abs;
    if (rel > result.max_rel_err) {
      result.max_rel_err = rel;
      result.worst_input = "input " + std::to_string(i);
    }
  }
  return result;
}

// Random tensor with entries bounded away from zero (keeps piecewise-linear
// activations off their kinks during finite differencing).
inline finsep::numcore::Tensor random_tensor(std::vector<int64_t> shape, finsep::Rng& rng,
                                             double lo_mag = 0.1, double hi_mag = 1.0) {
  finsep::numcore::Tensor t(std::move(shape));
  for (double& v : t.vec()) {
    const double mag = rng.uniform(lo_mag, hi_mag);
    v = rng.next_double() < 0.5 ? -mag : mag;
  }
  return t;
}

}  // namespace testutil
