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

// Single-segment maximum likelihood by projected gradient descent on
// Theta_n = {(alpha, beta) : W' alpha = 0}.

#ifndef PSCARE_ESTIMATOR_H_
#define PSCARE_ESTIMATOR_H_

#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pscare/model.h"
#include "pscare/types.h"

namespace pscare {

enum class StepRule {
  kFixed,
  // Armijo backtracking. The first trial step is `initial_step`; later
  // iterations start from a Barzilai-Borwein estimate of the inverse
  // curvature along the previous step.
  kBacktracking,
};

struct FitConfig {
  int max_iters = 2000;
  // Sup-norm of the projected gradient at convergence.
  double grad_tol = 1e-7;
  StepRule step_rule = StepRule::kBacktracking;
  // Step length for StepRule::kFixed.
  double fixed_step = 0.01;
  double shrink = 0.5;
  double armijo = 1e-4;
  double initial_step = 1.0;
  // Weight of ridge * ||xi||^2 / 2 added to the NLL.
  double ridge = 0.0;

  // ||xi||_inf beyond which the MLE is taken not to exist.
  double divergence_bound = 50.0;
  // Ridge used for the single refit after divergence.
  double fallback_ridge = 1e-6;

  // Keep the penalized objective at every accepted iterate.
  bool record_objective = false;

  // Throws InputError on non-positive tolerances or step parameters.
  void Validate() const;
};

struct SegmentFit {
  SegmentSpan span;
  ParamVector xi_hat;
  // Unpenalized NLL at xi_hat.
  double nll = 0;
  int iters = 0;
  bool converged = false;
  double grad_norm = 0;
  // Some group of items beat every outside opponent, so the likelihood has
  // no maximizer. xi_hat then fits the comparisons inside each group and
  // separates the groups far enough that nll is the supremum likelihood.
  bool separated = false;
  // The unpenalized iteration pushed ||xi||_inf past divergence_bound.
  bool diverged = false;
  // xi_hat comes from the ridge refit after divergence.
  bool ridge_fallback = false;
  double ridge_used = 0;
  std::string diagnostic;
  std::vector<double> objective_trace;
};

// Fits spans of one dataset. Holds the projector so repeated fits share the
// factorization of W.
class SegmentFitter {
 public:
  SegmentFitter(const ComparisonDataset& data, FitConfig config);

  SegmentFit Fit(const SegmentSpan& span) const;
  // Same as Fit, for an already tallied span.
  SegmentFit Fit(const SegmentSpan& span, const SpanSummary& summary) const;

  const ComparisonDataset& data() const { return *data_; }
  const FitConfig& config() const { return config_; }
  const ThetaProjector& projector() const { return projector_; }

 private:
  SegmentFit Run(const SpanSummary& summary, double ridge) const;
  SegmentFit FitSeparated(const SpanSummary& summary,
                          const WinGraphComponents& graph) const;

  const ComparisonDataset* data_;
  FitConfig config_;
  ThetaProjector projector_;
};

SegmentFit FitSegment(const ComparisonDataset& data, const SegmentSpan& span,
                      const FitConfig& config = {});

// What the search needs from a fit.
struct FitRecord {
  double nll = 0;
  int iters = 0;
  bool converged = false;
  bool separated = false;
  bool ridge_fallback = false;
};

// Span -> FitRecord memo for one dataset and FitConfig. Fits are pure, so a
// cache may be shared by several searches over the same data (different MDL
// settings, pruning on and off). Lookups and insertions are serialized; a
// span fitted twice concurrently stores the same record either way.
class FitCache {
 public:
  FitCache(const ComparisonDataset& data, FitConfig config);

  FitRecord Get(const SegmentSpan& span);
  // Fills `out` in the order of `spans`, fitting the missing ones on up to
  // `threads` threads.
  void GetMany(std::span<const SegmentSpan> spans, int threads,
               std::vector<FitRecord>* out);

  const SegmentFitter& fitter() const { return fitter_; }
  std::size_t size() const;
  // Number of fits actually run.
  std::size_t fits_computed() const;

 private:
  static uint64_t Key(const SegmentSpan& span) {
    return (static_cast<uint64_t>(span.start) << 32) |
           static_cast<uint32_t>(span.end);
  }
  FitRecord Compute(const SegmentSpan& span) const;

  SegmentFitter fitter_;
  mutable std::mutex mu_;
  std::unordered_map<uint64_t, FitRecord> records_;
  std::size_t fits_computed_ = 0;
};

}  // namespace pscare

#endif  // PSCARE_ESTIMATOR_H_
