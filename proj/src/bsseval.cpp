// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "finsep/bsseval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace finsep::bsseval {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double energy(const std::vector<double>& a) { return dot(a, a); }

// Jacobi eigendecomposition of a small symmetric matrix; used to apply the
// pseudo-inverse of the Gram matrix so rank-deficient reference sets (e.g.
// collinear sources) still decompose.
void jacobi_eigen(std::vector<double>& a, std::vector<double>& q, size_t n) {
  q.assign(n * n, 0.0);
  for (size_t i = 0; i < n; ++i) q[i * n + i] = 1.0;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (size_t p = 0; p < n; ++p)
      for (size_t r = p + 1; r < n; ++r) off += a[p * n + r] * a[p * n + r];
    if (off < 1e-30) break;
    for (size_t p = 0; p < n; ++p)
      for (size_t r = p + 1; r < n; ++r) {
        const double apr = a[p * n + r];
        if (apr == 0.0) continue;
        const double app = a[p * n + p], arr = a[r * n + r];
        const double theta = (arr - app) / (2.0 * apr);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akr = a[k * n + r];
          a[k * n + p] = c * akp - s * akr;
          a[k * n + r] = s * akp + c * akr;
        }
        for (size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k], ark = a[r * n + k];
          a[p * n + k] = c * apk - s * ark;
          a[r * n + k] = s * apk + c * ark;
        }
        for (size_t k = 0; k < n; ++k) {
          const double qkp = q[k * n + p], qkr = q[k * n + r];
          q[k * n + p] = c * qkp - s * qkr;
          q[k * n + r] = s * qkp + c * qkr;
        }
      }
  }
}

// Least-squares coefficients of estimate over the reference set via normal
// equations G beta = c with a pseudo-inverse of G.
std::vector<double> project_coeffs(const std::vector<double>& estimate,
                                   const std::vector<const std::vector<double>*>& refs) {
  const size_t n = refs.size();
  std::vector<double> gram(n * n);
  std::vector<double> rhs(n);
  for (size_t i = 0; i < n; ++i) {
    rhs[i] = dot(*refs[i], estimate);
    for (size_t j = i; j < n; ++j) {
      const double g = dot(*refs[i], *refs[j]);
      gram[i * n + j] = g;
      gram[j * n + i] = g;
    }
  }
  double max_diag = 0.0;
  for (size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, gram[i * n + i]);

  std::vector<double> a = gram, q;
  jacobi_eigen(a, q, n);
  std::vector<double> beta(n, 0.0);
  const double tol = 1e-12 * std::max(max_diag, 1e-300);
  for (size_t k = 0; k < n; ++k) {
    const double lambda = a[k * n + k];
    if (lambda <= tol) continue;
    double qc = 0.0;
    for (size_t i = 0; i < n; ++i) qc += q[i * n + k] * rhs[i];
    qc /= lambda;
    for (size_t i = 0; i < n; ++i) beta[i] += q[i * n + k] * qc;
  }
  return beta;
}

}  // namespace

Decomposition decompose(const std::vector<double>& estimate,
                        const std::vector<double>& reference,
                        const std::vector<std::vector<double>>& other_refs) {
  const size_t len = estimate.size();
  if (len == 0) throw std::invalid_argument("decompose: empty estimate");
  if (reference.size() != len) throw std::invalid_argument("decompose: length mismatch");
  for (const auto& r : other_refs)
    if (r.size() != len) throw std::invalid_argument("decompose: length mismatch");
  const double ref_energy = energy(reference);
  if (ref_energy == 0.0) throw std::invalid_argument("decompose: zero reference");

  Decomposition d;
  d.s_target.resize(len);
  d.e_interf.resize(len);
  d.e_artif.resize(len);
  d.e_noise.assign(len, 0.0);

  const double alpha = dot(estimate, reference) / ref_energy;
  for (size_t i = 0; i < len; ++i) d.s_target[i] = alpha * reference[i];

  std::vector<const std::vector<double>*> refs{&reference};
  for (const auto& r : other_refs) refs.push_back(&r);
  const std::vector<double> beta = project_coeffs(estimate, refs);

  for (size_t i = 0; i < len; ++i) {
    double p_all = 0.0;
    for (size_t k = 0; k < refs.size(); ++k) p_all += beta[k] * (*refs[k])[i];
    d.e_interf[i] = p_all - d.s_target[i];
    d.e_artif[i] = estimate[i] - p_all;
  }
  return d;
}

double sdr(const std::vector<double>& estimate, const std::vector<double>& reference,
           const std::vector<std::vector<double>>& other_refs) {
  const Decomposition d = decompose(estimate, reference, other_refs);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < estimate.size(); ++i) {
    num += d.s_target[i] * d.s_target[i];
    const double e = d.e_interf[i] + d.e_artif[i] + d.e_noise[i];
    den += e * e;
  }
  const double inf = std::numeric_limits<double>::infinity();
  if (num == 0.0) return -inf;
  if (den == 0.0) return inf;
  return 10.0 * std::log10(num / den);
}

namespace {

double cap(double v) { return std::clamp(v, -kSdrCapDb, kSdrCapDb); }

ChannelStats stats_of(std::vector<double> values) {
  ChannelStats s;
  s.count = static_cast<int64_t>(values.size());
  for (double& v : values) v = cap(v);
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean_db = sum / static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  s.median_db = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  return s;
}

}  // namespace

SdrReport evaluate(
    const std::vector<std::pair<std::vector<double>, std::vector<double>>>& model_outputs,
    const std::vector<mixgen::MixtureSample>& testset) {
  if (testset.empty()) throw std::invalid_argument("empty evaluation set");
  if (model_outputs.size() != testset.size())
    throw std::invalid_argument("evaluate: misaligned estimate/testset lists");

  SdrReport report;
  report.items.resize(testset.size());
  std::vector<double> fish_vals(testset.size()), bg_vals(testset.size());
  for (size_t i = 0; i < testset.size(); ++i) {
    const auto& [fish_est, bg_est] = model_outputs[i];
    const auto& s = testset[i];
    const double f = sdr(fish_est, s.source_fish, {s.source_background});
    const double b = sdr(bg_est, s.source_background, {s.source_fish});
    report.items[i] = {f, b};
    fish_vals[i] = f;
    bg_vals[i] = b;
  }
  report.fish = stats_of(std::move(fish_vals));
  report.background = stats_of(std::move(bg_vals));
  return report;
}

std::string format_report(const SdrReport& report, const std::string& model_label) {
  char buf[128];
  std::string out;
  out += model_label + "\n";
  std::snprintf(buf, sizeof(buf), "%-8s%-12s%s\n", "Metric", "Channel", "Value");
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-8s%-12s%.2f\n", "SDR", "Fish", report.fish.mean_db);
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-8s%-12s%.2f\n", "SDR", "Background",
                report.background.mean_db);
  out += buf;
  std::snprintf(buf, sizeof(buf),
                "(mean over %lld items; medians: fish %.2f dB, background %.2f dB; "
                "sentinels capped at %.0f dB)\n",
                static_cast<long long>(report.fish.count), report.fish.median_db,
                report.background.median_db, kSdrCapDb);
  out += buf;
  return out;
}

std::string report_csv(const SdrReport& report) {
  std::string out = "item,sdr_fish_db,sdr_background_db\n";
  char buf[160];
  for (size_t i = 0; i < report.items.size(); ++i) {
    const auto fmt = [](double v, char* b, size_t cap_sz) {
      if (std::isinf(v))
        std::snprintf(b, cap_sz, "%s", v > 0 ? "inf" : "-inf");
      else
        std::snprintf(b, cap_sz, "%.6f", v);
    };
    char f[48], g[48];
    fmt(report.items[i].fish_sdr_db, f, sizeof(f));
    fmt(report.items[i].background_sdr_db, g, sizeof(g));
    std::snprintf(buf, sizeof(buf), "%zu,%s,%s\n", i, f, g);
    out += buf;
  }
  return out;
}

}  // namespace finsep::bsseval
