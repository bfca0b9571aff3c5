// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "finsep/bsseval.hpp"
#include "testutil.hpp"

using namespace finsep;
using bsseval::Decomposition;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(const std::vector<double>& a) { return dot(a, a); }

// Independent least-squares oracle: modified Gram-Schmidt orthonormal basis
// of the reference set, projection by basis expansion. No normal equations.
std::vector<double> gram_schmidt_project(const std::vector<double>& estimate,
                                         std::vector<std::vector<double>> refs) {
  std::vector<std::vector<double>> basis;
  for (auto& r : refs) {
    for (const auto& q : basis) {
      const double c = dot(r, q);
      for (size_t i = 0; i < r.size(); ++i) r[i] -= c * q[i];
    }
    const double n = std::sqrt(norm2(r));
    if (n > 1e-10) {
      for (double& v : r) v /= n;
      basis.push_back(std::move(r));
    }
  }
  std::vector<double> proj(estimate.size(), 0.0);
  for (const auto& q : basis) {
    const double c = dot(estimate, q);
    for (size_t i = 0; i < proj.size(); ++i) proj[i] += c * q[i];
  }
  return proj;
}

}  // namespace

TEST_CASE("decompose fixed cases") {
  SUBCASE("estimate equal to the reference") {
    std::vector<double> ref{0.5, -0.25, 1.0};
    const Decomposition d = bsseval::decompose(ref, ref, {});
    for (size_t i = 0; i < ref.size(); ++i) {
      CHECK(d.s_target[i] == doctest::Approx(ref[i]).epsilon(1e-12));
      CHECK(d.e_interf[i] == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(d.e_artif[i] == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(d.e_noise[i] == 0.0);
    }
  }
  SUBCASE("scaled reference stays in span") {
    std::vector<double> ref{1.0, 2.0};
    std::vector<double> est{2.0, 4.0};
    const Decomposition d = bsseval::decompose(est, ref, {});
    CHECK(d.s_target[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(d.s_target[1] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(std::fabs(d.e_artif[0]) < 1e-12);
  }
  SUBCASE("4-vector worked example") {
    std::vector<double> ref{1, 0, 0, 0}, other{0, 1, 0, 0}, est{1, 0, 1, 0};
    const Decomposition d = bsseval::decompose(est, ref, {other});
    CHECK(d.s_target == std::vector<double>{1, 0, 0, 0});
    for (double v : d.e_interf) CHECK(std::fabs(v) < 1e-12);
    CHECK(d.e_artif[2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(bsseval::sdr(est, ref, {other}) == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("zero reference rejected") {
    CHECK_THROWS_AS(bsseval::decompose({1.0}, {0.0}, {}), std::invalid_argument);
  }
  SUBCASE("length mismatch rejected") {
    CHECK_THROWS_AS(bsseval::decompose({1.0, 2.0}, {1.0}, {}), std::invalid_argument);
  }
}

TEST_CASE("decompose invariants on random instances") {
  finsep::Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int64_t len = 2 + static_cast<int64_t>(rng.below(63));
    const auto est = testutil::gaussian_noise(len, rng.next_u64(), 1.0);
    const auto ref = testutil::gaussian_noise(len, rng.next_u64(), 1.0);
    std::vector<std::vector<double>> others;
    const int64_t n_others = rng.below(3);
    for (int64_t i = 0; i < n_others; ++i)
      others.push_back(testutil::gaussian_noise(len, rng.next_u64(), 1.0));

    const Decomposition d = bsseval::decompose(est, ref, others);
    const double scale = std::sqrt(norm2(est)) + 1e-30;

    // additivity
    for (size_t i = 0; i < est.size(); ++i) {
      const double r = est[i] - (d.s_target[i] + d.e_interf[i] + d.e_artif[i] + d.e_noise[i]);
      CHECK(std::fabs(r) < 1e-9 * scale);
    }
    // orthogonality of the residual against the fitted subspace
    CHECK(std::fabs(dot(d.s_target, d.e_artif)) < 1e-9 * norm2(est) + 1e-12);
    std::vector<double> fitted(est.size());
    for (size_t i = 0; i < est.size(); ++i) fitted[i] = d.s_target[i] + d.e_interf[i];
    CHECK(std::fabs(dot(fitted, d.e_artif)) < 1e-9 * norm2(est) + 1e-12);

    // oracle equivalence: s_target + e_interf is the least-squares projection
    std::vector<std::vector<double>> all_refs{ref};
    for (const auto& o : others) all_refs.push_back(o);
    const auto oracle = gram_schmidt_project(est, all_refs);
    for (size_t i = 0; i < est.size(); ++i)
      CHECK(std::fabs(fitted[i] - oracle[i]) < 1e-9 * scale + 1e-12);
  }
}

TEST_CASE("rank-deficient references fall back to the pseudo-inverse") {
  std::vector<double> ref{1.0, 0.0};
  std::vector<double> other{2.0, 0.0};  // collinear
  std::vector<double> est{3.0, 4.0};
  const Decomposition d = bsseval::decompose(est, ref, {other});
  CHECK(d.s_target[0] == doctest::Approx(3.0).epsilon(1e-9));
  for (double v : d.e_interf) CHECK(std::fabs(v) < 1e-9);
  CHECK(d.e_artif[1] == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("sdr") {
  SUBCASE("perfect reconstruction is +inf") {
    std::vector<double> ref{0.3, 0.4};
    CHECK(std::isinf(bsseval::sdr(ref, ref, {})));
    CHECK(bsseval::sdr(ref, ref, {}) > 0);
  }
  SUBCASE("orthogonal estimate is -inf") {
    const double v = bsseval::sdr({0.0, 1.0}, {1.0, 0.0}, {});
    CHECK(std::isinf(v));
    CHECK(v < 0);
  }
  SUBCASE("scale invariance in the estimate") {
    finsep::Rng rng(5);
    const auto est = testutil::gaussian_noise(32, 51, 1.0);
    const auto ref = testutil::gaussian_noise(32, 52, 1.0);
    const auto other = testutil::gaussian_noise(32, 53, 1.0);
    const double base = bsseval::sdr(est, ref, {other});
    for (double alpha : {2.0, -1.0, 0.125}) {
      std::vector<double> scaled(est.size());
      for (size_t i = 0; i < est.size(); ++i) scaled[i] = alpha * est[i];
      CHECK(bsseval::sdr(scaled, ref, {other}) == doctest::Approx(base).epsilon(1e-9));
    }
  }
}

TEST_CASE("evaluate") {
  finsep::Rng rng(8);
  std::vector<mixgen::Frame> fish, bgs;
  for (int i = 0; i < 3; ++i) fish.push_back(testutil::gaussian_noise(128, rng.next_u64(), 0.4));
  for (int i = 0; i < 3; ++i) bgs.push_back(testutil::gaussian_noise(128, rng.next_u64(), 0.4));
  const auto testset = mixgen::build_testset(fish, bgs, 6, 77);

  SUBCASE("ground-truth estimates report the cap on both channels") {
    std::vector<std::pair<std::vector<double>, std::vector<double>>> outs;
    for (const auto& s : testset) outs.emplace_back(s.source_fish, s.source_background);
    const auto report = bsseval::evaluate(outs, testset);
    CHECK(report.fish.mean_db == doctest::Approx(bsseval::kSdrCapDb));
    CHECK(report.background.mean_db == doctest::Approx(bsseval::kSdrCapDb));
    CHECK(report.fish.median_db == doctest::Approx(bsseval::kSdrCapDb));
    for (const auto& item : report.items) {
      CHECK(std::isinf(item.fish_sdr_db));
      CHECK(std::isinf(item.background_sdr_db));
    }
  }
  SUBCASE("mixture-as-estimate matches per-item sdr calls") {
    std::vector<std::pair<std::vector<double>, std::vector<double>>> outs;
    for (const auto& s : testset) outs.emplace_back(s.mixture, s.mixture);
    const auto report = bsseval::evaluate(outs, testset);
    for (size_t i = 0; i < testset.size(); ++i) {
      const auto& s = testset[i];
      CHECK(report.items[i].fish_sdr_db ==
            doctest::Approx(bsseval::sdr(s.mixture, s.source_fish, {s.source_background}))
                .epsilon(1e-12));
      CHECK(report.items[i].background_sdr_db ==
            doctest::Approx(bsseval::sdr(s.mixture, s.source_background, {s.source_fish}))
                .epsilon(1e-12));
    }
  }
  SUBCASE("aggregates recompute from the per-item table") {
    std::vector<std::pair<std::vector<double>, std::vector<double>>> outs;
    for (const auto& s : testset) outs.emplace_back(s.mixture, s.source_background);
    const auto report = bsseval::evaluate(outs, testset);
    double mean = 0.0;
    for (const auto& item : report.items)
      mean += std::clamp(item.fish_sdr_db, -bsseval::kSdrCapDb, bsseval::kSdrCapDb);
    mean /= static_cast<double>(report.items.size());
    CHECK(report.fish.mean_db == doctest::Approx(mean).epsilon(1e-12));
    CHECK(report.fish.count == static_cast<int64_t>(testset.size()));
  }
  SUBCASE("empty evaluation set rejected") {
    CHECK_THROWS_WITH_AS(bsseval::evaluate({}, {}), doctest::Contains("empty evaluation set"),
                         std::invalid_argument);
  }
  SUBCASE("misaligned lists rejected") {
    std::vector<std::pair<std::vector<double>, std::vector<double>>> outs(1);
    CHECK_THROWS_AS(bsseval::evaluate(outs, testset), std::invalid_argument);
  }
}

TEST_CASE("report formatting") {
  finsep::Rng rng(4);
  std::vector<mixgen::Frame> fish{testutil::gaussian_noise(64, 1, 0.4)};
  std::vector<mixgen::Frame> bgs{testutil::gaussian_noise(64, 2, 0.4)};
  const auto testset = mixgen::build_testset(fish, bgs, 3, 9);
  std::vector<std::pair<std::vector<double>, std::vector<double>>> outs;
  for (const auto& s : testset) outs.emplace_back(s.source_fish, s.source_background);
  const auto report = bsseval::evaluate(outs, testset);

  const std::string text = bsseval::format_report(report, "TasNet");
  CHECK(text.find("TasNet") != std::string::npos);
  CHECK(text.find("Metric") != std::string::npos);
  bool fish_row = false, bg_row = false;
  size_t pos = 0;
  while (pos < text.size()) {
    const size_t eol = text.find('\n', pos);
    const std::string line = text.substr(pos, eol - pos);
    if (line.rfind("SDR", 0) == 0 && line.find("Fish") != std::string::npos) fish_row = true;
    if (line.rfind("SDR", 0) == 0 && line.find("Background") != std::string::npos) bg_row = true;
    pos = eol == std::string::npos ? text.size() : eol + 1;
  }
  CHECK(fish_row);
  CHECK(bg_row);

  const std::string csv = bsseval::report_csv(report);
  CHECK(csv.find("item,sdr_fish_db,sdr_background_db") == 0);
  CHECK(csv.find("inf") != std::string::npos);
  int64_t rows = -1;  // header
  for (char c : csv)
    if (c == '\n') ++rows;
  CHECK(rows == 3);
}
