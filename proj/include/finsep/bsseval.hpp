// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "finsep/mixgen.hpp"

namespace finsep::bsseval {

// Projection-based decomposition of an estimate against the reference set:
//   estimate = s_target + e_interf + e_artif + e_noise
// s_target lies in span{reference}; s_target + e_interf in span{all
// references}; e_noise is identically zero here (no noise reference).
struct Decomposition {
  std::vector<double> s_target;
  std::vector<double> e_interf;
  std::vector<double> e_artif;
  std::vector<double> e_noise;
};

Decomposition decompose(const std::vector<double>& estimate,
                        const std::vector<double>& reference,
                        const std::vector<std::vector<double>>& other_refs);

// 10*log10(|s_target|^2 / |e_interf + e_artif + e_noise|^2). Perfect
// reconstruction returns +inf; an estimate orthogonal to the reference
// returns -inf. Aggregates cap the sentinels at +-300 dB.
double sdr(const std::vector<double>& estimate, const std::vector<double>& reference,
           const std::vector<std::vector<double>>& other_refs);

constexpr double kSdrCapDb = 300.0;

struct ItemScore {
  double fish_sdr_db = 0.0;
  double background_sdr_db = 0.0;
};

struct ChannelStats {
  double mean_db = 0.0;    // mean of cap-clamped per-item values
  double median_db = 0.0;  // median of cap-clamped per-item values
  int64_t count = 0;
};

struct SdrReport {
  std::vector<ItemScore> items;
  ChannelStats fish;
  ChannelStats background;
};

// Scores fish estimates against s0 (with s1 as the competing reference) and
// background estimates against s1. Channel assignment is fixed; there is no
// permutation search.
SdrReport evaluate(const std::vector<std::pair<std::vector<double>, std::vector<double>>>&
                       model_outputs,
                   const std::vector<mixgen::MixtureSample>& testset);

// Aligned plain-text table: Metric / Channel / Value rows per channel, the
// value being the mean over items.
std::string format_report(const SdrReport& report, const std::string& model_label);

// Per-item CSV; infinities serialize as "inf" / "-inf".
std::string report_csv(const SdrReport& report);

}  // namespace finsep::bsseval
