// Copyright 2026 The PS-CARE Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Change-point search minimizing
//
//   sum_k C(segment k) + (K+1) gamma
//
// over segmentations whose segments all have at least L comparisons.
// Change points are reported as the last index of the segment they close, so
// tau = 400 splits 1..400 from 401..T.

#ifndef PSCARE_PELT_H_
#define PSCARE_PELT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pscare/estimator.h"
#include "pscare/mdl.h"
#include "pscare/model.h"
#include "pscare/types.h"

namespace pscare {

enum class PruneRule {
  // R = -p/2 log(T/4) - 1e-6. A span's fitted NLL is at least the sum over
  // any split of it, so C(a) + C(b) - C(a u b) <= p/2 log(n_a n_b / n_ab)
  // <= p/2 log(T/4), and pruning never discards the optimum.
  kSafe,
  // R = p/2 log(8 pi / T). Can discard the optimum on short series.
  kAggressive,
};

struct DetectConfig {
  // L. Unset means max(30, 2(n+d)).
  std::optional<int> min_seg_len;
  // Per-segment penalty. Unset defers to MdlConfig (log T by default).
  std::optional<double> gamma;
  // R in the pruning test. Unset means the value given by prune_rule, with p
  // the parameter count of the MDL config.
  std::optional<double> prune_constant;
  PruneRule prune_rule = PruneRule::kSafe;
  // M. Unset means ceil(T/L) + 1, which never binds.
  std::optional<int> max_changepoints;
  bool pruning_enabled = true;
  // Threads used for the candidate fits of one step.
  int threads = 1;
  // BruteForceDetect refuses instances with more admissible segmentations.
  uint64_t brute_force_limit = 10'000'000;
};

struct ResolvedDetectConfig {
  int min_seg_len = 0;
  double gamma = 0;
  double prune_constant = 0;
  PruneRule prune_rule = PruneRule::kSafe;
  int max_changepoints = 0;
  bool pruning_enabled = true;
  int threads = 1;
};

// Fills in defaults for `data`. Throws InputError when T < 2L or a setting is
// out of range.
ResolvedDetectConfig ResolveDetectConfig(const DetectConfig& config,
                                         const ComparisonDataset& data,
                                         const MdlConfig& mdl_config);

struct SegmentResult {
  SegmentFit fit;
  double cost = 0;
  std::vector<int> appearances;  // comparisons per item
  DiagnosticsReport diagnostics;
};

struct Segmentation {
  int K_hat = 0;
  std::vector<int> tau_hat;
  std::vector<SegmentResult> segments;
  MdlBreakdown mdl;
  // sum of segment costs + (K+1) gamma; mdl.total adds log(K+1).
  double objective = 0;
  // Candidates examined at t = L..T.
  std::vector<int> pruning_stats;
  // F(0..T). Entries below L are the -gamma initialization.
  std::vector<double> f_values;
  ResolvedDetectConfig config;
  // The MDL settings actually used, with gamma filled in.
  MdlConfig mdl_config;
  // Wall time of the final per-segment fits; not part of the result proper.
  double final_fit_seconds = 0;
};

// PELT. With `cache` null a private cache is used; a shared cache must have
// been built for `data` with `fit_config`.
Segmentation Detect(const ComparisonDataset& data, const DetectConfig& config,
                    const FitConfig& fit_config = {},
                    const MdlConfig& mdl_config = {},
                    FitCache* cache = nullptr);

// Exhaustive optimum over all admissible segmentations with at most M change
// points, by dynamic programming over the number of segments.
Segmentation BruteForceDetect(const ComparisonDataset& data,
                              const DetectConfig& config,
                              const FitConfig& fit_config = {},
                              const MdlConfig& mdl_config = {},
                              FitCache* cache = nullptr);

// Default R for `rule`.
double DefaultPruneConstant(PruneRule rule, int T, int p);

const char* PruneRuleName(PruneRule rule);
// Throws InputError for names other than "safe" and "aggressive".
PruneRule ParsePruneRule(const std::string& name);

// Number of change-point sets with all gaps >= min_seg_len and at most
// max_changepoints entries, saturating at UINT64_MAX.
uint64_t CountSegmentations(int T, int min_seg_len, int max_changepoints);

struct RankEntry {
  int item = 0;  // 0-based
  double score = 0;
  int rank = 0;  // 1-based; 0 when absent
  bool present = true;
  // Score equal, to 1e-9, to that of a neighbour in the ranking.
  bool tied = false;
};

struct SegmentRanking {
  SegmentSpan span;
  // Present items by descending score (ties by item index), then absent
  // items by index.
  std::vector<RankEntry> entries;
};

SegmentRanking RankScores(const SegmentSpan& span, const Eigen::VectorXd& theta,
                          const std::vector<int>& appearances);

std::vector<SegmentRanking> RankSegments(const Segmentation& seg,
                                         const CovariateSet& covariates);

}  // namespace pscare

#endif  // PSCARE_PELT_H_
