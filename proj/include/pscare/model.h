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

// Covariate-assisted Bradley-Terry likelihood.
//
// Item i has score theta_i = alpha_i + z_i' beta and
//
//   P(i beats j) = exp(theta_i) / (exp(theta_i) + exp(theta_j)).
//
// For the comparison at time t write z*_t = (e_i - e_j, z_i - z_j), so that
// z*_t' xi = theta_i - theta_j. The negative log-likelihood of a span is
//
//   sum_t  log(1 + exp(z*_t' xi)) - y_t z*_t' xi.
//
// The parameters are identified on Theta_n = {(alpha, beta) : W' alpha = 0}
// with W = [1 | Z].

#ifndef PSCARE_MODEL_H_
#define PSCARE_MODEL_H_

#include <string>
#include <vector>

#include <Eigen/Core>

#include "pscare/types.h"

namespace pscare {

// log(1 + exp(x)) without overflow.
double Softplus(double x);
// 1 / (1 + exp(-x)) without overflow.
double Logistic(double x);

// z*_t for `event`. Length n + d.
Eigen::VectorXd DesignVector(const ComparisonEvent& event,
                             const CovariateSet& covariates);

// P(item event.i beats item event.j) under xi. The outcome field of `event`
// is ignored.
double WinProbability(const ParamVector& xi, const ComparisonEvent& event,
                      const CovariateSet& covariates);

// Negative log-likelihood over the events of `span`.
double SegmentNll(const ParamVector& xi, const ComparisonDataset& data,
                  const SegmentSpan& span);

// Gradient of SegmentNll with respect to the stacked (alpha, beta).
Eigen::VectorXd SegmentNllGradient(const ParamVector& xi,
                                   const ComparisonDataset& data,
                                   const SegmentSpan& span);

// Orthogonal projection of alpha onto null(W'). Construction checks that W
// has full column rank and throws IdentifiabilityError naming the dependent
// columns otherwise.
class ThetaProjector {
 public:
  explicit ThetaProjector(const CovariateSet& covariates);

  // alpha <- (I - W (W'W)^-1 W') alpha.
  Eigen::VectorXd ProjectAlpha(const Eigen::VectorXd& alpha) const;
  void ProjectAlphaInPlace(Eigen::Ref<Eigen::VectorXd> alpha) const;
  ParamVector Project(const ParamVector& xi) const;

  // || W' alpha ||_inf
  double ConstraintResidual(const Eigen::VectorXd& alpha) const;

  // Orthonormal basis of col(W), n x (d+1).
  const Eigen::MatrixXd& basis() const { return basis_; }
  const Eigen::MatrixXd& design() const { return w_; }

  // A point of Theta_n whose scores equal `theta` up to a common shift.
  ParamVector FromScores(const Eigen::VectorXd& theta) const;

 private:
  Eigen::MatrixXd w_;
  Eigen::MatrixXd basis_;
};

// Beta passes through; alpha is projected onto null(W').
ParamVector ProjectToTheta(const Eigen::VectorXd& xi_raw,
                           const CovariateSet& covariates);

// Per-pair sufficient statistics of a span. The NLL depends on the events of
// a span only through, for every unordered pair {a < b}, the number of
// comparisons and the number of wins by a.
struct PairTally {
  int a = 0;
  int b = 0;
  double count = 0;
  double wins_a = 0;
};

// Thread-compatible: NllAndGradient uses internal scratch space, so one
// summary must not be evaluated from several threads at once.
class SpanSummary {
 public:
  SpanSummary(const ComparisonDataset& data, const SegmentSpan& span);

  const std::vector<PairTally>& pairs() const { return pairs_; }
  int length() const { return length_; }
  // Number of comparisons each item takes part in.
  const std::vector<int>& appearances() const { return appearances_; }

  // NLL as a function of the item scores theta.
  double Nll(const Eigen::VectorXd& theta) const;
  // NLL and its gradient with respect to theta.
  double NllAndGradient(const Eigen::VectorXd& theta,
                        Eigen::VectorXd* grad_theta) const;

  // Keeps only pairs whose items share a label in `group`.
  SpanSummary WithinGroups(const std::vector<int>& group) const;

 private:
  SpanSummary() = default;
  void Finalize();

  std::vector<PairTally> pairs_;
  std::vector<int> appearances_;
  int length_ = 0;
  // pairs_ counts and wins as arrays.
  Eigen::ArrayXd count_;
  Eigen::ArrayXd wins_;
  mutable Eigen::ArrayXd margin_;
  mutable Eigen::ArrayXd exp_neg_;
  mutable Eigen::ArrayXd resid_;
};

// Strongly connected components of the win graph of a span (edge a -> b when
// a beat b at least once). The MLE exists iff no compared pair straddles two
// components.
struct WinGraphComponents {
  std::vector<int> component;  // per item
  int count = 0;
  // Longest path, in components, from each component to a sink of the
  // condensation. Winners sit at higher levels than the items they beat.
  std::vector<int> level;  // per component
  bool mle_exists = true;
};

WinGraphComponents AnalyzeWinGraph(const SpanSummary& summary, int n);

struct DiagnosticsReport {
  // Assumption-1 style incoherence: max row l2 norm of P_W.
  double incoherence = 0;
  double incoherence_bound = 0;  // c0 * sqrt((d+1)/n)
  bool incoherence_ok = false;

  // Minimum comparison count over the pairs that appear in the span.
  int l_min = 0;
  int span_length = 0;
  double rate_statistic = 0;  // n * l_min / span_length
  double rate_threshold = 0;  // c_p * log(n)
  bool rate_ok = false;

  bool connected = false;
  bool all_items_present = false;
  int items_present = 0;

  // False when some group of items beat every opponent outside the group.
  bool mle_exists = false;
};

inline constexpr double kDefaultIncoherenceConstant = 2.0;
inline constexpr double kDefaultRateConstant = 0.5;

// Advisory checks of the sampling assumptions for one span. Never throws for
// a valid span.
DiagnosticsReport CheckAssumptions(const ComparisonDataset& data,
                                   const SegmentSpan& span,
                                   double c0 = kDefaultIncoherenceConstant,
                                   double cp = kDefaultRateConstant);

// max_i || row_i(P_W) ||_2.
double IncoherenceStatistic(const CovariateSet& covariates);

}  // namespace pscare

#endif  // PSCARE_MODEL_H_
