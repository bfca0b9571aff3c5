// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "finsep/ops.hpp"
#include "finsep/parallel.hpp"
#include "finsep/params.hpp"
#include "testutil.hpp"

using namespace finsep;
using numcore::Conv1dOpts;
using numcore::Tape;
using numcore::Tensor;
using numcore::Var;
using testutil::finite_difference_check;
using testutil::random_tensor;

namespace {

Tensor t3(std::vector<double> v, int64_t c, int64_t l) { return Tensor({1, c, l}, std::move(v)); }

std::vector<double> run_conv(const Tensor& x, const Tensor& w, const Conv1dOpts& opts) {
  Tape tape;
  Var out = numcore::conv1d(tape.leaf(x), tape.leaf(w), std::nullopt, opts);
  return tape.val(out).vec();
}

}  // namespace

TEST_CASE("conv1d hand-computed values") {
  SUBCASE("kernel [1] is identity") {
    const auto y = run_conv(t3({1.0, -2.0, 3.0}, 1, 3), Tensor({1, 1, 1}, {1.0}), {});
    CHECK(y == std::vector<double>{1.0, -2.0, 3.0});
  }
  SUBCASE("kernel [1,1] stride 1") {
    const auto y = run_conv(t3({1.0, 2.0, 3.0}, 1, 3), Tensor({1, 1, 2}, {1.0, 1.0}), {});
    CHECK(y == std::vector<double>{3.0, 5.0});
  }
  SUBCASE("dilation 2") {
    Conv1dOpts opts;
    opts.dilation = 2;
    const auto y = run_conv(t3({1.0, 2.0, 3.0, 4.0}, 1, 4), Tensor({1, 1, 2}, {1.0, 1.0}), opts);
    CHECK(y == std::vector<double>{4.0, 6.0});
  }
  SUBCASE("stride 2 with padding") {
    Conv1dOpts opts;
    opts.stride = 2;
    opts.padding = 1;
    // padded signal: 0 1 2 3 0 ; kernel [1,1] at starts {0, 2}
    const auto y = run_conv(t3({1.0, 2.0, 3.0}, 1, 3), Tensor({1, 1, 2}, {1.0, 1.0}), opts);
    CHECK(y == std::vector<double>{1.0, 5.0});
  }
  SUBCASE("grouped = depthwise") {
    Conv1dOpts opts;
    opts.groups = 2;
    Tensor x({1, 2, 3}, {1.0, 2.0, 3.0, 10.0, 20.0, 30.0});
    Tensor w({2, 1, 2}, {1.0, 1.0, 1.0, -1.0});
    const auto y = run_conv(x, w, opts);
    CHECK(y == std::vector<double>{3.0, 5.0, -10.0, -10.0});
  }
}

TEST_CASE("conv1d_transpose hand-computed values") {
  SUBCASE("kernel [1] stride 1 is identity") {
    Tape tape;
    Var out = numcore::conv1d_transpose(tape.leaf(t3({2.0, -3.0}, 1, 2)),
                                        tape.leaf(Tensor({1, 1, 1}, {1.0})), std::nullopt, 1);
    CHECK(tape.val(out).vec() == std::vector<double>{2.0, -3.0});
  }
  SUBCASE("length formula: L_in=5 k=8 stride=4 -> 24") {
    Tape tape;
    Tensor x({1, 1, 5}, std::vector<double>(5, 1.0));
    Tensor w({1, 1, 8}, std::vector<double>(8, 0.5));
    Var out = numcore::conv1d_transpose(tape.leaf(x), tape.leaf(w), std::nullopt, 4);
    CHECK(tape.val(out).dim(2) == 24);
  }
  SUBCASE("upsample-convolve by hand") {
    Tape tape;
    Var out = numcore::conv1d_transpose(tape.leaf(t3({1.0, 0.0}, 1, 2)),
                                        tape.leaf(Tensor({1, 1, 2}, {1.0, 2.0})), std::nullopt, 2);
    CHECK(tape.val(out).vec() == std::vector<double>{1.0, 2.0, 0.0, 0.0});
  }
}

TEST_CASE("activation values") {
  Tape tape;
  Var x = tape.leaf(Tensor({1, 2, 2}, {-1.0, 2.0, -4.0, 0.5}));
  CHECK(tape.val(numcore::relu(x)).vec() == std::vector<double>{0.0, 2.0, 0.0, 0.5});

  Var slope = tape.leaf(Tensor::full({1}, 0.25));
  CHECK(tape.val(numcore::prelu(x, slope)).vec() == std::vector<double>{-0.25, 2.0, -1.0, 0.5});

  const auto sig = tape.val(numcore::sigmoid(x)).vec();
  for (double v : sig) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  CHECK(sig[3] == doctest::Approx(1.0 / (1.0 + std::exp(-0.5))).epsilon(1e-12));
}

TEST_CASE("glu") {
  SUBCASE("zero gate halves the content") {
    Tape tape;
    Var x = tape.leaf(Tensor({1, 2, 3}, {1.0, 2.0, 3.0, 0.0, 0.0, 0.0}));
    const auto y = tape.val(numcore::glu(x)).vec();
    CHECK(y == std::vector<double>{0.5, 1.0, 1.5});
  }
  SUBCASE("odd channel count rejected") {
    Tape tape;
    Var x = tape.leaf(Tensor({1, 3, 1}, {1.0, 2.0, 3.0}));
    CHECK_THROWS_AS((void)numcore::glu(x), std::invalid_argument);
  }
}

TEST_CASE("global layer norm") {
  Tape tape;
  Var gain = tape.leaf(Tensor::full({2}, 1.0));
  Var bias = tape.leaf(Tensor::zeros({2}));

  SUBCASE("constant input maps to zero") {
    Var x = tape.leaf(Tensor::full({1, 2, 3}, 5.0));
    for (double v : tape.val(numcore::global_layer_norm(x, gain, bias)).vec())
      CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("already normalized input passes through") {
    // mean 0, variance 1 over the 4 elements
    Var x = tape.leaf(Tensor({1, 2, 2}, {1.0, -1.0, 1.0, -1.0}));
    const auto y = tape.val(numcore::global_layer_norm(x, gain, bias)).vec();
    CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(y[1] == doctest::Approx(-1.0).epsilon(1e-6));
  }
  SUBCASE("affine applies after normalization") {
    Var g2 = tape.leaf(Tensor::full({2}, 2.0));
    Var b1 = tape.leaf(Tensor::full({2}, 1.0));
    Var x = tape.leaf(Tensor({1, 2, 2}, {1.0, -1.0, 1.0, -1.0}));
    const auto y = tape.val(numcore::global_layer_norm(x, g2, b1)).vec();
    CHECK(y[0] == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(y[1] == doctest::Approx(-1.0).epsilon(1e-6));
  }
}

namespace {

numcore::BiLstmParams lstm_leaves(Tape& tape, const std::vector<Tensor>& flat, int64_t layers,
                                  int64_t hidden, bool requires_grad = false) {
  numcore::BiLstmParams p;
  p.hidden = hidden;
  size_t idx = 0;
  for (int64_t l = 0; l < layers; ++l) {
    std::array<numcore::LstmDirParams, 2> layer;
    for (int d = 0; d < 2; ++d) {
      layer[static_cast<size_t>(d)].w_ih = tape.leaf(flat[idx++], requires_grad);
      layer[static_cast<size_t>(d)].w_hh = tape.leaf(flat[idx++], requires_grad);
      layer[static_cast<size_t>(d)].b_ih = tape.leaf(flat[idx++], requires_grad);
      layer[static_cast<size_t>(d)].b_hh = tape.leaf(flat[idx++], requires_grad);
    }
    p.layers.push_back(layer);
  }
  return p;
}

std::vector<Tensor> lstm_param_tensors(int64_t layers, int64_t hidden, int64_t in_ch,
                                       finsep::Rng* rng) {
  std::vector<Tensor> flat;
  for (int64_t l = 0; l < layers; ++l) {
    const int64_t in_size = l == 0 ? in_ch : 2 * hidden;
    for (int d = 0; d < 2; ++d) {
      if (rng) {
        flat.push_back(random_tensor({4 * hidden, in_size}, *rng, 0.05, 0.4));
        flat.push_back(random_tensor({4 * hidden, hidden}, *rng, 0.05, 0.4));
        flat.push_back(random_tensor({4 * hidden}, *rng, 0.05, 0.3));
        flat.push_back(random_tensor({4 * hidden}, *rng, 0.05, 0.3));
      } else {
        flat.push_back(Tensor::zeros({4 * hidden, in_size}));
        flat.push_back(Tensor::zeros({4 * hidden, hidden}));
        flat.push_back(Tensor::zeros({4 * hidden}));
        flat.push_back(Tensor::zeros({4 * hidden}));
      }
    }
  }
  return flat;
}

}  // namespace

TEST_CASE("bilstm") {
  SUBCASE("zero weights give zero output") {
    Tape tape;
    auto flat = lstm_param_tensors(2, 3, 2, nullptr);
    auto params = lstm_leaves(tape, flat, 2, 3);
    finsep::Rng rng(7);
    Var x = tape.leaf(random_tensor({1, 2, 5}, rng));
    const auto y = tape.val(numcore::bilstm(x, params)).vec();
    for (double v : y) CHECK(v == 0.0);
  }
  SUBCASE("output shape [1, 2*hidden, L]") {
    Tape tape;
    finsep::Rng rng(9);
    auto flat = lstm_param_tensors(2, 4, 3, &rng);
    auto params = lstm_leaves(tape, flat, 2, 4);
    Var x = tape.leaf(random_tensor({1, 3, 7}, rng));
    const Tensor& y = tape.val(numcore::bilstm(x, params));
    CHECK(y.shape() == std::vector<int64_t>{1, 8, 7});
  }
  SUBCASE("palindromic input with shared direction weights is time-symmetric") {
    Tape tape;
    finsep::Rng rng(11);
    const int64_t H = 3, C = 2, T = 3;
    const Tensor wih = random_tensor({4 * H, C}, rng, 0.1, 0.5);
    const Tensor whh = random_tensor({4 * H, H}, rng, 0.1, 0.5);
    const Tensor bih = random_tensor({4 * H}, rng, 0.05, 0.2);
    const Tensor bhh = random_tensor({4 * H}, rng, 0.05, 0.2);
    auto params = lstm_leaves(tape, {wih, whh, bih, bhh, wih, whh, bih, bhh}, 1, H);
    // x_t == x_{T-1-t}
    Tensor x({1, C, T}, {0.3, 0.7, 0.3, -0.5, 0.2, -0.5});
    const Tensor& y = tape.val(numcore::bilstm(tape.leaf(x), params));
    for (int64_t j = 0; j < H; ++j)
      for (int64_t t = 0; t < T; ++t)
        CHECK(y.at3(0, j, t) == doctest::Approx(y.at3(0, H + j, T - 1 - t)).epsilon(1e-12));
  }
}

TEST_CASE("backward basics") {
  SUBCASE("d/dx sum(relu(x)) at x=3 is 1") {
    Tape tape;
    Var x = tape.leaf(Tensor::scalar(3.0), true);
    Var loss = numcore::sum_all(numcore::relu(x));
    tape.backward(loss);
    CHECK(tape.grad(x)[0] == 1.0);
  }
  SUBCASE("unused parameter has zero gradient") {
    Tape tape;
    Var x = tape.leaf(Tensor::scalar(3.0), true);
    Var unused = tape.leaf(Tensor::full({4}, 2.0), true);
    Var loss = numcore::sum_all(numcore::mul(x, x));
    tape.backward(loss);
    const Tensor g = tape.grad(unused);
    for (double v : g.vec()) CHECK(v == 0.0);
    CHECK(tape.grad(x)[0] == 6.0);
  }
  SUBCASE("non-scalar loss rejected") {
    Tape tape;
    Var x = tape.leaf(Tensor::full({3}, 1.0), true);
    Var y = numcore::scale(x, 2.0);
    CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);
  }
  SUBCASE("detached graph rejected") {
    Tape tape;
    Var x = tape.leaf(Tensor::scalar(1.0), false);
    Var loss = numcore::sum_all(x);
    CHECK_THROWS_AS(tape.backward(loss), std::invalid_argument);
  }
  SUBCASE("second backward rejected") {
    Tape tape;
    Var x = tape.leaf(Tensor::scalar(1.0), true);
    Var loss = numcore::sum_all(x);
    tape.backward(loss);
    CHECK_THROWS_AS(tape.backward(loss), std::runtime_error);
  }
}

TEST_CASE("adjoint pair: conv1d vs conv1d_transpose") {
  finsep::Rng rng(42);
  for (int trial = 0; trial < 30; ++trial) {
    const int64_t stride = 1 + static_cast<int64_t>(rng.below(4));
    const int64_t pad = static_cast<int64_t>(rng.below(3));
    const int64_t k = 2 * pad + 1 + static_cast<int64_t>(rng.below(5));
    const int64_t lout = 1 + static_cast<int64_t>(rng.below(6));
    const int64_t lx = (lout - 1) * stride + k - 2 * pad;
    const int64_t ci = 1 + static_cast<int64_t>(rng.below(3));
    const int64_t co = 1 + static_cast<int64_t>(rng.below(3));
    const int64_t batch = 1 + static_cast<int64_t>(rng.below(2));

    Tensor x = random_tensor({batch, ci, lx}, rng);
    Tensor w = random_tensor({co, ci, k}, rng);
    Tensor y = random_tensor({batch, co, lout}, rng);

    Conv1dOpts opts;
    opts.stride = stride;
    opts.padding = pad;

    Tape tape;
    const Tensor cx = tape.val(numcore::conv1d(tape.leaf(x), tape.leaf(w), std::nullopt, opts));
    const Tensor ty =
        tape.val(numcore::conv1d_transpose(tape.leaf(y), tape.leaf(w), std::nullopt, stride, pad));
    REQUIRE(cx.shape() == y.shape());
    REQUIRE(ty.shape() == x.shape());

    double lhs = 0.0, rhs = 0.0;
    for (int64_t i = 0; i < cx.numel(); ++i) lhs += cx[i] * y[i];
    for (int64_t i = 0; i < ty.numel(); ++i) rhs += ty[i] * x[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("determinism: identical inputs give bit-identical outputs") {
  finsep::Rng rng(5);
  Tensor x = random_tensor({2, 4, 9}, rng);
  Tensor w = random_tensor({6, 4, 3}, rng);
  Tensor b = random_tensor({6}, rng);
  auto run = [&]() {
    Tape tape;
    Conv1dOpts opts;
    opts.padding = 1;
    Var y = numcore::conv1d(tape.leaf(x), tape.leaf(w), tape.leaf(b), opts);
    return tape.val(numcore::sigmoid(y)).vec();
  };
  CHECK(run() == run());
}

TEST_CASE("finite-difference spot checks per layer") {
  finsep::Rng rng(123);

  SUBCASE("conv1d strided/dilated/grouped") {
    for (int trial = 0; trial < 5; ++trial) {
      const int64_t groups = 1 + static_cast<int64_t>(rng.below(2));
      const int64_t cig = 1 + static_cast<int64_t>(rng.below(2));
      const int64_t ocpg = 1 + static_cast<int64_t>(rng.below(2));
      Conv1dOpts opts;
      opts.stride = 1 + static_cast<int64_t>(rng.below(2));
      opts.dilation = 1 + static_cast<int64_t>(rng.below(2));
      opts.groups = groups;
      opts.padding = static_cast<int64_t>(rng.below(2));
      const int64_t k = 1 + static_cast<int64_t>(rng.below(3));
      const int64_t L = opts.dilation * (k - 1) + 3 + static_cast<int64_t>(rng.below(4));
      auto r = finite_difference_check(
          {random_tensor({1, groups * cig, L}, rng), random_tensor({groups * ocpg, cig, k}, rng),
           random_tensor({groups * ocpg}, rng)},
          [opts](Tape&, const std::vector<Var>& v) {
            return numcore::conv1d(v[0], v[1], v[2], opts);
          },
          rng.next_u64());
      CHECK(r.max_rel_err < 1e-4);
    }
  }
  SUBCASE("conv1d_transpose") {
    for (int trial = 0; trial < 5; ++trial) {
      const int64_t stride = 1 + static_cast<int64_t>(rng.below(3));
      const int64_t pad = static_cast<int64_t>(rng.below(2));
      const int64_t k = 2 * pad + 1 + static_cast<int64_t>(rng.below(4));
      auto r = finite_difference_check(
          {random_tensor({1, 2, 4}, rng), random_tensor({2, 3, k}, rng), random_tensor({3}, rng)},
          [stride, pad](Tape&, const std::vector<Var>& v) {
            return numcore::conv1d_transpose(v[0], v[1], v[2], stride, pad);
          },
          rng.next_u64());
      CHECK(r.max_rel_err < 1e-4);
    }
  }
  SUBCASE("glu + sigmoid + prelu chain") {
    auto r = finite_difference_check(
        {random_tensor({1, 4, 5}, rng), random_tensor({1}, rng)},
        [](Tape&, const std::vector<Var>& v) {
          return numcore::prelu(numcore::glu(numcore::sigmoid(v[0])), v[1]);
        },
        rng.next_u64());
    CHECK(r.max_rel_err < 1e-4);
  }
  SUBCASE("global layer norm") {
    auto r = finite_difference_check(
        {random_tensor({2, 3, 4}, rng), random_tensor({3}, rng), random_tensor({3}, rng)},
        [](Tape&, const std::vector<Var>& v) {
          return numcore::global_layer_norm(v[0], v[1], v[2]);
        },
        rng.next_u64());
    CHECK(r.max_rel_err < 1e-4);
  }
  SUBCASE("linear") {
    auto r = finite_difference_check(
        {random_tensor({2, 3, 4}, rng), random_tensor({2, 3}, rng), random_tensor({2}, rng)},
        [](Tape&, const std::vector<Var>& v) { return numcore::linear(v[0], v[1], v[2]); },
        rng.next_u64());
    CHECK(r.max_rel_err < 1e-4);
  }
  SUBCASE("bilstm") {
    const int64_t H = 2, C = 2, T = 4, layers = 2;
    std::vector<Tensor> inputs{random_tensor({1, C, T}, rng)};
    auto flat = lstm_param_tensors(layers, H, C, &rng);
    for (auto& tensor : flat) inputs.push_back(tensor);
    auto r = finite_difference_check(
        inputs,
        [layers, H](Tape&, const std::vector<Var>& v) {
          numcore::BiLstmParams p;
          p.hidden = H;
          size_t idx = 1;
          for (int64_t l = 0; l < layers; ++l) {
            std::array<numcore::LstmDirParams, 2> layer;
            for (int d = 0; d < 2; ++d) {
              layer[static_cast<size_t>(d)] = {v[idx], v[idx + 1], v[idx + 2], v[idx + 3]};
              idx += 4;
            }
            p.layers.push_back(layer);
          }
          return numcore::bilstm(v[0], p);
        },
        rng.next_u64());
    CHECK(r.max_rel_err < 1e-4);
  }
  SUBCASE("slice + reshape + elementwise composition") {
    auto r = finite_difference_check(
        {random_tensor({1, 4, 6}, rng), random_tensor({1, 2, 3}, rng)},
        [](Tape&, const std::vector<Var>& v) {
          Var a = numcore::slice_channels(v[0], 1, 2);
          a = numcore::slice_time(a, 2, 3);
          return numcore::mul(numcore::abs_val(a), v[1]);
        },
        rng.next_u64());
    CHECK(r.max_rel_err < 1e-4);
  }
}

TEST_CASE("parallel_for respects FINSEP_THREADS and index addressing") {
  setenv("FINSEP_THREADS", "2", 1);
  CHECK(finsep::worker_count(100) <= 2);
  std::vector<double> out(64, 0.0);
  finsep::parallel_for(64, [&](int64_t i) { out[static_cast<size_t>(i)] = 3.0 * i; });
  for (int64_t i = 0; i < 64; ++i) CHECK(out[static_cast<size_t>(i)] == 3.0 * i);

  setenv("FINSEP_THREADS", "1", 1);
  CHECK(finsep::worker_count(100) == 1);
  unsetenv("FINSEP_THREADS");
}

TEST_CASE("param store leaves and init") {
  numcore::ParamStore store;
  finsep::Rng rng(3);
  Tensor w({4, 4});
  numcore::init_uniform_fan_in(w, 16, rng);
  store.add("w", w);
  for (double v : store.at("w").vec()) CHECK(std::fabs(v) <= 0.25);
  CHECK_THROWS_AS(store.add("w", Tensor::zeros({1})), std::invalid_argument);

  Tape tape;
  auto vars = store.leaves(tape, true);
  CHECK(tape.val(vars.at("w")).vec() == store.at("w").vec());
}
