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

// Two-part minimum description length of a segmentation.
//
// With change points tau_1 < ... < tau_K and segment k covering
// tau_{k-1}+1 .. tau_k (tau_0 = 0, tau_{K+1} = T),
//
//   MDL = log(K+1) + (K+1) gamma + sum_k C(segment k),
//   C(span) = p/2 log(|span|) + s * NLL(span at its MLE),
//
// where gamma defaults to log T, p is the parameter count and s the NLL
// scale.

#ifndef PSCARE_MDL_H_
#define PSCARE_MDL_H_

#include <optional>
#include <vector>

#include "pscare/estimator.h"
#include "pscare/types.h"

namespace pscare {

enum class NllScale {
  kLog2e,    // s = log2(e)
  kNatural,  // s = 1
};

enum class ParamCountRule {
  kFull,         // p = n + d - 1
  kConstrained,  // p = n - 1, the dimension of Theta_n
};

struct MdlConfig {
  NllScale nll_scale = NllScale::kLog2e;
  ParamCountRule param_count_rule = ParamCountRule::kFull;
  // Per-segment penalty. Unset means log T.
  std::optional<double> penalty_gamma;

  double NllFactor() const;
  int ParamCount(int n, int d) const;
  double Gamma(int T) const;
  // Throws InputError unless the penalty is finite and positive.
  void Validate() const;
};

struct MdlBreakdown {
  double cl_K = 0;       // log(K+1)
  double cl_tau = 0;     // (K+1) gamma
  double cl_params = 0;  // sum of p/2 log(n_k)
  double cl_resid = 0;   // s * sum of segment NLLs
  double total = 0;
};

// p/2 log(length) + s * nll.
double SegmentCostFromNll(double nll, int length, int n, int d,
                          const MdlConfig& mdl_config);

// Fits `span` and returns its cost. Rejects spans shorter than
// `min_seg_len`.
double SegmentCost(const ComparisonDataset& data, const SegmentSpan& span,
                   const FitConfig& fit_config, const MdlConfig& mdl_config,
                   int min_seg_len = 1);

// Segments induced by `changepoints` on 1..T. Throws InputError listing every
// change point that is out of order, out of range, or closer than
// `min_seg_len` to its predecessor (or to T, for the last one).
std::vector<SegmentSpan> SegmentsFromChangepoints(
    const std::vector<int>& changepoints, int T, int min_seg_len = 1);

MdlBreakdown TotalMdl(const ComparisonDataset& data,
                      const std::vector<int>& changepoints,
                      const FitConfig& fit_config, const MdlConfig& mdl_config,
                      int min_seg_len = 1);

// Same, with segment fits drawn from `cache`, which must belong to `data`.
MdlBreakdown TotalMdl(const ComparisonDataset& data,
                      const std::vector<int>& changepoints, FitCache& cache,
                      const MdlConfig& mdl_config, int min_seg_len = 1);

// Breakdown from per-segment NLLs already at hand.
MdlBreakdown MdlFromSegments(const std::vector<SegmentSpan>& segments,
                             const std::vector<double>& nlls, int n, int d,
                             int T, const MdlConfig& mdl_config);

}  // namespace pscare

#endif  // PSCARE_MDL_H_
