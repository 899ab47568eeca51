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

#include "pscare/mdl.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace pscare {

double MdlConfig::NllFactor() const {
  return nll_scale == NllScale::kLog2e ? std::numbers::log2e : 1.0;
}

int MdlConfig::ParamCount(int n, int d) const {
  return param_count_rule == ParamCountRule::kFull ? n + d - 1 : n - 1;
}

double MdlConfig::Gamma(int T) const {
  return penalty_gamma ? *penalty_gamma : std::log(static_cast<double>(T));
}

void MdlConfig::Validate() const {
  if (penalty_gamma && !(std::isfinite(*penalty_gamma) && *penalty_gamma > 0)) {
    throw InputError("penalty gamma must be finite and positive, got " +
                     std::to_string(*penalty_gamma));
  }
}

double SegmentCostFromNll(double nll, int length, int n, int d,
                          const MdlConfig& mdl_config) {
  return 0.5 * mdl_config.ParamCount(n, d) * std::log(static_cast<double>(length)) +
         mdl_config.NllFactor() * nll;
}

double SegmentCost(const ComparisonDataset& data, const SegmentSpan& span,
                   const FitConfig& fit_config, const MdlConfig& mdl_config,
                   int min_seg_len) {
  ValidateSpan(span, data.T());
  if (span.length() < min_seg_len) {
    throw InputError("span [" + std::to_string(span.start) + ", " +
                     std::to_string(span.end) + "] is shorter than the minimum "
                     "segment length " + std::to_string(min_seg_len));
  }
  const SegmentFit fit = FitSegment(data, span, fit_config);
  return SegmentCostFromNll(fit.nll, span.length(), data.n(), data.d(),
                            mdl_config);
}

std::vector<SegmentSpan> SegmentsFromChangepoints(
    const std::vector<int>& changepoints, int T, int min_seg_len) {
  if (min_seg_len < 1) throw InputError("minimum segment length must be >= 1");
  std::string bad;
  int prev = 0;
  for (std::size_t k = 0; k < changepoints.size(); ++k) {
    const int tau = changepoints[k];
    const bool last = k + 1 == changepoints.size();
    if (tau <= prev || tau >= T || tau - prev < min_seg_len ||
        (last && T - tau < min_seg_len)) {
      bad += (bad.empty() ? "" : ", ") + std::to_string(tau);
    }
    prev = std::max(prev, tau);
  }
  if (!bad.empty()) {
    throw InputError("change points violate ordering or spacing (T=" +
                     std::to_string(T) + ", minimum segment length " +
                     std::to_string(min_seg_len) + "): " + bad);
  }
  if (T < min_seg_len) {
    throw InputError("T=" + std::to_string(T) +
                     " is shorter than the minimum segment length");
  }
  std::vector<SegmentSpan> segments;
  segments.reserve(changepoints.size() + 1);
  prev = 0;
  for (int tau : changepoints) {
    segments.push_back({prev + 1, tau});
    prev = tau;
  }
  segments.push_back({prev + 1, T});
  return segments;
}

MdlBreakdown MdlFromSegments(const std::vector<SegmentSpan>& segments,
                             const std::vector<double>& nlls, int n, int d,
                             int T, const MdlConfig& mdl_config) {
  const int num = static_cast<int>(segments.size());
  MdlBreakdown out;
  out.cl_K = std::log(static_cast<double>(num));
  out.cl_tau = num * mdl_config.Gamma(T);
  const double p = mdl_config.ParamCount(n, d);
  double nll_sum = 0;
  double cost_sum = 0;
  for (int k = 0; k < num; ++k) {
    out.cl_params += 0.5 * p * std::log(static_cast<double>(segments[k].length()));
    nll_sum += nlls[k];
    cost_sum += SegmentCostFromNll(nlls[k], segments[k].length(), n, d,
                                   mdl_config);
  }
  out.cl_resid = mdl_config.NllFactor() * nll_sum;
  // Summed per segment so that K = 0 reproduces log 1 + gamma + C exactly.
  out.total = out.cl_K + out.cl_tau + cost_sum;
  return out;
}

MdlBreakdown TotalMdl(const ComparisonDataset& data,
                      const std::vector<int>& changepoints,
                      const FitConfig& fit_config, const MdlConfig& mdl_config,
                      int min_seg_len) {
  FitCache cache(data, fit_config);
  return TotalMdl(data, changepoints, cache, mdl_config, min_seg_len);
}

MdlBreakdown TotalMdl(const ComparisonDataset& data,
                      const std::vector<int>& changepoints, FitCache& cache,
                      const MdlConfig& mdl_config, int min_seg_len) {
  mdl_config.Validate();
  const std::vector<SegmentSpan> segments =
      SegmentsFromChangepoints(changepoints, data.T(), min_seg_len);
  std::vector<FitRecord> fits;
  cache.GetMany(segments, 1, &fits);
  std::vector<double> nlls;
  nlls.reserve(fits.size());
  for (const FitRecord& f : fits) nlls.push_back(f.nll);
  return MdlFromSegments(segments, nlls, data.n(), data.d(), data.T(),
                         mdl_config);
}

}  // namespace pscare
