// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "finsep/errors.hpp"
#include "finsep/models.hpp"
#include "testutil.hpp"

using namespace finsep;
using numcore::Tensor;
using testutil::TempDir;

namespace {

tasnet::TasNetConfig small_tasnet() {
  tasnet::TasNetConfig cfg;
  cfg.frame_len = 8;
  cfg.basis_size = 6;
  cfg.bottleneck = 4;
  cfg.block_channels = 6;
  cfg.kernel = 3;
  cfg.blocks_per_repeat = 2;
  cfg.repeats = 1;
  return cfg;
}

demucs::DemucsConfig small_demucs() {
  demucs::DemucsConfig cfg;
  cfg.depth = 2;
  cfg.channels = 3;
  return cfg;
}

audio::Waveform wave_of(std::vector<double> s, int rate = 44100) {
  audio::Waveform w;
  w.samples = std::move(s);
  w.sample_rate = rate;
  return w;
}

void zero_params_with_prefix(numcore::ParamStore& store, const std::string& a,
                             const std::string& b) {
  for (auto& [name, t] : store.items())
    if (name.rfind(a, 0) == 0 || name.rfind(b, 0) == 0)
      for (double& v : t.vec()) v = 0.0;
}

}  // namespace

TEST_CASE("tasnet encode") {
  SUBCASE("hand case: z = relu(x S)") {
    auto cfg = small_tasnet();
    cfg.frame_len = 2;
    cfg.basis_size = 2;
    tasnet::TasNetModel m(cfg, 1);
    // S = [[1,-1],[1,-1]] as weight[m][0][l] = S[l][m]
    m.params().at("encoder.weight") = Tensor({2, 1, 2}, {1.0, 1.0, -1.0, -1.0});
    const Tensor z = tasnet::encode(m, Tensor::from_vector({1.0, 1.0}));
    CHECK(z.vec() == std::vector<double>{2.0, 0.0});
  }
  SUBCASE("zero frame encodes to zero") {
    tasnet::TasNetModel m(small_tasnet(), 2);
    const Tensor z = tasnet::encode(m, Tensor::zeros({8}));
    for (double v : z.vec()) CHECK(v == 0.0);
  }
  SUBCASE("encoder output is non-negative") {
    tasnet::TasNetModel m(small_tasnet(), 3);
    finsep::Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
      const Tensor z = tasnet::encode(m, testutil::random_tensor({8}, rng));
      for (double v : z.vec()) CHECK(v >= 0.0);
    }
  }
  SUBCASE("wrong frame length rejected") {
    tasnet::TasNetModel m(small_tasnet(), 4);
    CHECK_THROWS_AS((void)tasnet::encode(m, Tensor::zeros({5})), std::invalid_argument);
  }
}

TEST_CASE("tasnet masks") {
  SUBCASE("all-zero mask estimator outputs 0.5 everywhere") {
    tasnet::TasNetModel m(small_tasnet(), 5);
    zero_params_with_prefix(m.params(), "tcn.", "mask.");
    finsep::Rng rng(19);
    const Tensor masks = tasnet::estimate_masks(m, testutil::random_tensor({7, 6}, rng));
    CHECK(masks.shape() == std::vector<int64_t>{2, 7, 6});
    for (double v : masks.vec()) CHECK(v == 0.5);
  }
  SUBCASE("masks strictly inside (0,1)") {
    tasnet::TasNetModel m(small_tasnet(), 6);
    finsep::Rng rng(23);
    const Tensor masks = tasnet::estimate_masks(m, testutil::random_tensor({11, 6}, rng));
    for (double v : masks.vec()) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
  SUBCASE("apply_mask") {
    CHECK(tasnet::apply_mask(Tensor::from_vector({2.0, 4.0}), Tensor::from_vector({0.5, 0.25}))
              .vec() == std::vector<double>{1.0, 1.0});
    CHECK(tasnet::apply_mask(Tensor::from_vector({2.0}), Tensor::from_vector({1.0})).vec() ==
          std::vector<double>{2.0});
    CHECK_THROWS_AS(tasnet::apply_mask(Tensor::zeros({2}), Tensor::zeros({3})),
                    std::invalid_argument);
  }
}

TEST_CASE("tasnet decode") {
  auto cfg = small_tasnet();
  cfg.frame_len = 2;
  cfg.basis_size = 2;
  tasnet::TasNetModel m(cfg, 7);

  SUBCASE("zero features decode to zero") {
    CHECK(tasnet::decode(m, Tensor::zeros({2})).vec() == std::vector<double>{0.0, 0.0});
  }
  SUBCASE("hand case x_hat = b T") {
    // T = [[1,0],[0,2]] as weight[m][0][l] = T[m][l]
    m.params().at("decoder.weight") = Tensor({2, 1, 2}, {1.0, 0.0, 0.0, 2.0});
    CHECK(tasnet::decode(m, Tensor::from_vector({1.0, 2.0})).vec() ==
          std::vector<double>{1.0, 4.0});
  }
  SUBCASE("decode is linear") {
    finsep::Rng rng(29);
    tasnet::TasNetModel mm(small_tasnet(), 8);
    const Tensor b1 = testutil::random_tensor({6}, rng);
    const Tensor b2 = testutil::random_tensor({6}, rng);
    const double a = 2.75;
    Tensor combo({6});
    for (int64_t i = 0; i < 6; ++i) combo[i] = a * b1[i] + b2[i];
    const Tensor lhs = tasnet::decode(mm, combo);
    const Tensor r1 = tasnet::decode(mm, b1);
    const Tensor r2 = tasnet::decode(mm, b2);
    for (int64_t i = 0; i < lhs.numel(); ++i)
      CHECK(std::fabs(lhs[i] - (a * r1[i] + r2[i])) < 1e-9);
  }
}

TEST_CASE("tasnet forward") {
  tasnet::TasNetModel m(small_tasnet(), 9);
  audio::ChunkSpec spec;
  spec.length = 200;
  spec.overlap = 0.25;

  SUBCASE("zero mixture separates to zero") {
    auto [fish, bg] = tasnet::forward(wave_of(std::vector<double>(500, 0.0)), m, spec);
    for (double v : fish.samples) CHECK(v == 0.0);
    for (double v : bg.samples) CHECK(v == 0.0);
  }
  SUBCASE("output lengths equal input length") {
    for (int64_t len : {1LL, 37LL, 200LL, 350LL, 513LL}) {
      auto [fish, bg] = tasnet::forward(wave_of(testutil::gaussian_noise(len, len, 0.3)), m, spec);
      CHECK(fish.size() == len);
      CHECK(bg.size() == len);
      CHECK(fish.sample_rate == 44100);
    }
  }
  SUBCASE("deterministic for fixed weights") {
    const auto w = wave_of(testutil::gaussian_noise(333, 4, 0.3));
    auto [f1, b1] = tasnet::forward(w, m, spec);
    auto [f2, b2] = tasnet::forward(w, m, spec);
    CHECK(f1.samples == f2.samples);
    CHECK(b1.samples == b2.samples);
  }
}

TEST_CASE("tasnet receptive field") {
  SUBCASE("formula") {
    tasnet::TasNetConfig cfg;  // desk defaults: P=3, X=6, R=2
    CHECK(tasnet::receptive_field(cfg) == 253);
    auto s = small_tasnet();  // P=3, X=2, R=1
    CHECK(tasnet::receptive_field(s) == 7);
  }
  SUBCASE("empirical influence span with normalization off") {
    auto cfg = small_tasnet();
    cfg.blocks_per_repeat = 3;
    cfg.repeats = 1;
    cfg.norm = "none";  // global layer norm couples all frames on purpose
    tasnet::TasNetModel m(cfg, 10);
    const int64_t rf = tasnet::receptive_field(cfg);  // 15
    const int64_t half = (rf - 1) / 2;
    const int64_t N = 41, center = 20;

    finsep::Rng rng(37);
    const Tensor z = testutil::random_tensor({1, cfg.basis_size, N}, rng);
    Tensor z2 = z;
    for (int64_t c = 0; c < cfg.basis_size; ++c) z2.at3(0, c, center) += 0.3;

    auto logits_of = [&](const Tensor& zin) {
      numcore::Tape tape;
      auto vars = m.params().leaves(tape, false);
      return tape.val(m.mask_logits(tape, vars, tape.leaf(zin, false)));
    };
    const Tensor base = logits_of(z);
    const Tensor pert = logits_of(z2);
    int64_t inside_nonzero = 0;
    for (int64_t f = 0; f < N; ++f) {
      double delta = 0.0;
      for (int64_t c = 0; c < base.dim(1); ++c)
        delta = std::max(delta, std::fabs(base.at3(0, c, f) - pert.at3(0, c, f)));
      if (std::llabs(f - center) > half)
        CHECK(delta == 0.0);
      else if (delta > 0.0)
        ++inside_nonzero;
    }
    CHECK(inside_nonzero > half);
  }
}

TEST_CASE("tasnet checkpoint round trip") {
  TempDir dir("tasckpt");
  tasnet::TasNetModel m(small_tasnet(), 11);
  m.sample_rate = 22050;
  const auto w = wave_of(testutil::gaussian_noise(100, 6, 0.3), 22050);
  audio::ChunkSpec spec;
  spec.length = 64;

  save_separator(m, dir.file("m.fckpt"), "f64");
  auto loaded = load_separator(dir.file("m.fckpt"));
  CHECK(loaded->arch() == "tasnet");
  CHECK(loaded->sample_rate == 22050);

  auto [f1, b1] = separate_waveform(m, w, spec);
  auto [f2, b2] = separate_waveform(*loaded, w, spec);
  CHECK(f1.samples == f2.samples);
  CHECK(b1.samples == b2.samples);

  SUBCASE("f32 export loses at most float precision") {
    save_separator(m, dir.file("m32.fckpt"), "f32");
    auto l32 = load_separator(dir.file("m32.fckpt"));
    const auto& a = m.params().items();
    const auto& b = l32->params().items();
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i)
      for (int64_t j = 0; j < a[i].second.numel(); ++j)
        CHECK(static_cast<float>(a[i].second[j]) == static_cast<float>(b[i].second[j]));
  }
  SUBCASE("corrupt checkpoint rejected") {
    std::ofstream f(dir.file("bad.fckpt"), std::ios::binary);
    f << "FINSEPCKPT 1\narch tasnet\ntensor encoder.weight f32 1 4\ndata\nxx";
    f.close();
    CHECK_THROWS_WITH_AS((void)load_separator(dir.file("bad.fckpt")),
                         doctest::Contains("corrupt checkpoint"), IoError);
  }
}

TEST_CASE("demucs valid_length") {
  demucs::DemucsConfig b1;
  b1.depth = 1;
  b1.channels = 2;
  CHECK(demucs::valid_length(8, b1) == 8);
  CHECK(demucs::valid_length(9, b1) == 12);
  CHECK(demucs::valid_length(1, b1) == 8);

  SUBCASE("fixed point and monotonicity over random lengths") {
    finsep::Rng rng(41);
    for (int trial = 0; trial < 100; ++trial) {
      demucs::DemucsConfig cfg;
      cfg.depth = 1 + static_cast<int64_t>(rng.below(4));
      cfg.channels = 1 + static_cast<int64_t>(rng.below(4));
      const int64_t L = 1 + static_cast<int64_t>(rng.below(5000));
      const int64_t vl = demucs::valid_length(L, cfg);
      CHECK(vl >= L);
      CHECK(demucs::valid_length(vl, cfg) == vl);
    }
  }
}

TEST_CASE("demucs encode") {
  SUBCASE("channel schedule doubles per layer (desk: 8, 16, 32)") {
    demucs::DemucsConfig cfg;  // desk defaults
    demucs::DemucsModel m(cfg, 12);
    const int64_t L = demucs::valid_length(500, cfg);
    auto enc = demucs::encode(Tensor::zeros({1, 1, L}), m);
    REQUIRE(enc.skips.size() == 3);
    CHECK(enc.skips[0].dim(1) == 8);
    CHECK(enc.skips[1].dim(1) == 16);
    CHECK(enc.skips[2].dim(1) == 32);
    CHECK(enc.latent.dim(1) == 32);
  }
  SUBCASE("length schedule 128 -> 31 -> 6") {
    demucs::DemucsModel m(small_demucs(), 13);
    auto enc = demucs::encode(Tensor::zeros({1, 1, 128}), m);
    CHECK(enc.skips[0].dim(2) == 31);
    CHECK(enc.skips[1].dim(2) == 6);
  }
  SUBCASE("zero input with zero biases gives zero latent and skips") {
    demucs::DemucsModel m(small_demucs(), 14);
    m.zero_biases();
    auto enc = demucs::encode(Tensor::zeros({1, 1, 64}), m);
    for (double v : enc.latent.vec()) CHECK(v == 0.0);
    for (const auto& s : enc.skips)
      for (double v : s.vec()) CHECK(v == 0.0);
  }
  SUBCASE("too-short input rejected") {
    demucs::DemucsModel m(small_demucs(), 15);
    CHECK_THROWS_AS((void)demucs::encode(Tensor::zeros({1, 1, 4}), m), std::runtime_error);
  }
}

TEST_CASE("demucs bottleneck") {
  demucs::DemucsConfig cfg;  // desk: hidden 32
  demucs::DemucsModel m(cfg, 16);

  SUBCASE("shape preserved for [1, 32, 6]") {
    finsep::Rng rng(43);
    const Tensor latent = testutil::random_tensor({1, 32, 6}, rng);
    const Tensor out = demucs::bottleneck(latent, m);
    CHECK(out.shape() == latent.shape());
  }
  SUBCASE("time length preserved for any length >= 1") {
    for (int64_t t : {1LL, 2LL, 9LL}) {
      const Tensor out = demucs::bottleneck(Tensor::full({1, 32, t}, 0.25), m);
      CHECK(out.dim(2) == t);
    }
  }
  SUBCASE("zero weights give zero output") {
    demucs::DemucsModel z(cfg, 17);
    for (auto& [name, t] : z.params().items())
      if (name.rfind("lstm.", 0) == 0 || name.rfind("bottleneck.", 0) == 0)
        for (double& v : t.vec()) v = 0.0;
    finsep::Rng rng(47);
    const Tensor out = demucs::bottleneck(testutil::random_tensor({1, 32, 5}, rng), z);
    for (double v : out.vec()) CHECK(v == 0.0);
  }
  SUBCASE("channel mismatch rejected") {
    CHECK_THROWS_AS((void)demucs::bottleneck(Tensor::zeros({1, 16, 4}), m),
                    std::invalid_argument);
  }
}

TEST_CASE("demucs decode and forward") {
  demucs::DemucsModel m(small_demucs(), 18);
  audio::ChunkSpec spec;
  spec.length = 300;
  spec.overlap = 0.25;

  SUBCASE("final channel count and length") {
    const int64_t L = demucs::valid_length(100, m.config());
    auto enc = demucs::encode(Tensor::zeros({1, 1, L}), m);
    const Tensor mid = demucs::bottleneck(enc.latent, m);
    const Tensor out = demucs::decode(mid, enc.skips, m);
    CHECK(out.dim(1) == 2);
    CHECK(out.dim(2) == L);
  }
  SUBCASE("zero everything decodes to zero") {
    demucs::DemucsModel z(small_demucs(), 19);
    z.zero_biases();
    const int64_t L = demucs::valid_length(80, z.config());
    auto enc = demucs::encode(Tensor::zeros({1, 1, L}), z);
    const Tensor out = demucs::decode(Tensor::zeros(enc.latent.shape()), enc.skips, z);
    for (double v : out.vec()) CHECK(v == 0.0);
  }
  SUBCASE("zero input with zero biases forwards to zero") {
    demucs::DemucsModel z(small_demucs(), 20);
    z.zero_biases();
    auto [fish, bg] = demucs::forward(wave_of(std::vector<double>(700, 0.0)), z, spec);
    for (double v : fish.samples) CHECK(v == 0.0);
    for (double v : bg.samples) CHECK(v == 0.0);
  }
  SUBCASE("output lengths equal input length") {
    for (int64_t len : {40LL, 300LL, 333LL, 901LL}) {
      auto [fish, bg] = demucs::forward(wave_of(testutil::gaussian_noise(len, len, 0.2)), m, spec);
      CHECK(fish.size() == len);
      CHECK(bg.size() == len);
    }
  }
  SUBCASE("determinism under fixed weights") {
    const auto w = wave_of(testutil::gaussian_noise(512, 3, 0.2));
    auto [f1, b1] = demucs::forward(w, m, spec);
    auto [f2, b2] = demucs::forward(w, m, spec);
    CHECK(f1.samples == f2.samples);
  }
}

TEST_CASE("demucs skip pairing over random configs") {
  finsep::Rng rng(53);
  for (int trial = 0; trial < 12; ++trial) {
    demucs::DemucsConfig cfg;
    cfg.depth = 1 + static_cast<int64_t>(rng.below(3));
    cfg.channels = 1 + static_cast<int64_t>(rng.below(6));
    demucs::DemucsModel m(cfg, rng.next_u64());
    const int64_t len = 30 + static_cast<int64_t>(rng.below(400));
    numcore::Tape tape;
    auto vars = m.params().leaves(tape, false);
    auto [fish, bg] = m.build_graph(tape, vars, testutil::random_tensor({len}, rng));
    CHECK(tape.val(fish).numel() == len);
    CHECK(tape.val(bg).numel() == len);
  }
}

TEST_CASE("full-model gradients pass finite differences") {
  // end-to-end graphs at miniature scale; every parameter participates
  SUBCASE("tasnet") {
    tasnet::TasNetConfig cfg;
    cfg.frame_len = 4;
    cfg.basis_size = 3;
    cfg.bottleneck = 2;
    cfg.block_channels = 3;
    cfg.kernel = 3;
    cfg.blocks_per_repeat = 1;
    cfg.repeats = 1;
    tasnet::TasNetModel m(cfg, 55);
    finsep::Rng rng(56);
    const Tensor mix = testutil::random_tensor({10}, rng);

    std::vector<Tensor> inputs;
    std::vector<std::string> names;
    for (const auto& [name, t] : m.params().items()) {
      names.push_back(name);
      inputs.push_back(t);
    }
    auto res = testutil::finite_difference_check(
        inputs,
        [&m, &names, &mix](numcore::Tape& tape, const std::vector<numcore::Var>& v) {
          numcore::VarMap vars;
          for (size_t i = 0; i < names.size(); ++i) vars.emplace(names[i], v[i]);
          auto [fish, bg] = m.build_graph(tape, vars, mix);
          return numcore::add(fish, numcore::scale(bg, 0.37));
        },
        57);
    CHECK(res.max_rel_err < 1e-4);
  }
  SUBCASE("demucs") {
    demucs::DemucsConfig cfg;
    cfg.depth = 1;
    cfg.channels = 1;
    demucs::DemucsModel m(cfg, 58);
    finsep::Rng rng(59);
    const Tensor mix = testutil::random_tensor({12}, rng);

    std::vector<Tensor> inputs;
    std::vector<std::string> names;
    for (const auto& [name, t] : m.params().items()) {
      names.push_back(name);
      inputs.push_back(t);
    }
    auto res = testutil::finite_difference_check(
        inputs,
        [&m, &names, &mix](numcore::Tape& tape, const std::vector<numcore::Var>& v) {
          numcore::VarMap vars;
          for (size_t i = 0; i < names.size(); ++i) vars.emplace(names[i], v[i]);
          auto [fish, bg] = m.build_graph(tape, vars, mix);
          return numcore::add(fish, numcore::scale(bg, 0.37));
        },
        60);
    CHECK(res.max_rel_err < 1e-4);
  }
}

TEST_CASE("demucs checkpoint round trip") {
  TempDir dir("demucsckpt");
  demucs::DemucsModel m(small_demucs(), 21);
  save_separator(m, dir.file("d.fckpt"), "f64");
  auto loaded = load_separator(dir.file("d.fckpt"));
  CHECK(loaded->arch() == "demucs");
  const auto w = wave_of(testutil::gaussian_noise(256, 8, 0.3));
  audio::ChunkSpec spec;
  spec.length = 128;
  auto [f1, b1] = separate_waveform(m, w, spec);
  auto [f2, b2] = separate_waveform(*loaded, w, spec);
  CHECK(f1.samples == f2.samples);
  CHECK(b1.samples == b2.samples);
}
