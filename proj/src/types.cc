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

#include "pscare/types.h"

#include <string>
#include <utility>

namespace pscare {

CovariateSet::CovariateSet(int n) : CovariateSet(Eigen::MatrixXd(n, 0)) {}

CovariateSet::CovariateSet(Eigen::MatrixXd z) : z_(std::move(z)) {
  if (z_.rows() < 2) {
    throw InputError("need at least 2 items, got " +
                     std::to_string(z_.rows()));
  }
  if (z_.cols() >= z_.rows() - 1) {
    throw InputError("covariate dimension d=" + std::to_string(z_.cols()) +
                     " must be smaller than n-1=" +
                     std::to_string(z_.rows() - 1));
  }
  if (!z_.allFinite()) throw InputError("covariates must be finite");
}

Eigen::MatrixXd CovariateSet::design() const {
  Eigen::MatrixXd w(n(), d() + 1);
  w.col(0).setOnes();
  w.rightCols(d()) = z_;
  return w;
}

ComparisonDataset::ComparisonDataset(CovariateSet covariates,
                                     std::vector<ComparisonEvent> events,
                                     std::vector<std::string> labels)
    : covariates_(std::move(covariates)),
      events_(std::move(events)),
      labels_(std::move(labels)) {
  const int n = covariates_.n();
  if (labels_.empty()) {
    labels_.reserve(n);
    for (int i = 1; i <= n; ++i) labels_.push_back(std::to_string(i));
  }
  if (static_cast<int>(labels_.size()) != n) {
    throw InputError("expected " + std::to_string(n) + " item labels, got " +
                     std::to_string(labels_.size()));
  }
  for (std::size_t k = 0; k < events_.size(); ++k) {
    const ComparisonEvent& e = events_[k];
    if (e.t != static_cast<int>(k) + 1) {
      throw InputError("event " + std::to_string(k + 1) + " has time " +
                       std::to_string(e.t) + "; times must be 1..T");
    }
    if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n) {
      throw InputError("event at t=" + std::to_string(e.t) +
                       " references an item outside [1, " +
                       std::to_string(n) + "]");
    }
    if (e.i == e.j) {
      throw InputError("event at t=" + std::to_string(e.t) +
                       " compares an item with itself");
    }
  }
}

ComparisonDataset ComparisonDataset::Prefix(int t_end) const {
  if (t_end < 0 || t_end > T()) {
    throw InputError("prefix length " + std::to_string(t_end) +
                     " outside [0, " + std::to_string(T()) + "]");
  }
  return ComparisonDataset(
      covariates_,
      std::vector<ComparisonEvent>(events_.begin(), events_.begin() + t_end),
      labels_);
}

void ValidateSpan(const SegmentSpan& span, int T) {
  if (span.start < 1 || span.end > T || span.start > span.end) {
    throw InputError("invalid span [" + std::to_string(span.start) + ", " +
                     std::to_string(span.end) + "] for T=" +
                     std::to_string(T));
  }
}

Eigen::VectorXd ParamVector::Stacked() const {
  Eigen::VectorXd xi(size());
  xi << alpha, beta;
  return xi;
}

ParamVector ParamVector::FromStacked(const Eigen::VectorXd& xi, int n) {
  return {xi.head(n), xi.tail(xi.size() - n)};
}

Eigen::VectorXd ParamVector::Scores(const CovariateSet& covariates) const {
  if (covariates.d() == 0) return alpha;
  return alpha + covariates.z() * beta;
}

bool ParamVector::AllFinite() const {
  return alpha.allFinite() && beta.allFinite();
}

}  // namespace pscare
