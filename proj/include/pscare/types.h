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

#ifndef PSCARE_TYPES_H_
#define PSCARE_TYPES_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pscare {

// Malformed or inconsistent input (bad indices, bad spans, parse failures).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The design matrix W = [1 | Z] is rank deficient.
class IdentifiabilityError : public InputError {
 public:
  using InputError::InputError;
};

// An internal numerical procedure failed in a way that cannot be flagged.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Static per-item covariates. Row i of `z` is the covariate vector of item i
// (0-based internally). d = 0 is allowed and reduces the model to plain BTL.
class CovariateSet {
 public:
  CovariateSet() = default;
  // Items without covariates.
  explicit CovariateSet(int n);
  explicit CovariateSet(Eigen::MatrixXd z);

  int n() const { return static_cast<int>(z_.rows()); }
  int d() const { return static_cast<int>(z_.cols()); }
  const Eigen::MatrixXd& z() const { return z_; }
  auto row(int item) const { return z_.row(item); }

  // W = [1 | Z], n x (d+1).
  Eigen::MatrixXd design() const;

 private:
  Eigen::MatrixXd z_;
};

// One comparison. `i` and `j` are 0-based item indices; `winner_is_i` is the
// binary outcome y (true means item i beat item j). `t` is 1-based.
struct ComparisonEvent {
  int t = 0;
  int i = 0;
  int j = 0;
  bool winner_is_i = false;

  int y() const { return winner_is_i ? 1 : 0; }
  bool operator==(const ComparisonEvent&) const = default;
};

// Time-ordered comparisons with t = 1..T, one event per time point.
class ComparisonDataset {
 public:
  ComparisonDataset() = default;
  // Validates every invariant; throws InputError on violation. When `labels`
  // is empty the items are labelled "1".."n".
  ComparisonDataset(CovariateSet covariates, std::vector<ComparisonEvent> events,
                    std::vector<std::string> labels = {});

  const CovariateSet& covariates() const { return covariates_; }
  const std::vector<ComparisonEvent>& events() const { return events_; }
  const std::vector<std::string>& labels() const { return labels_; }
  int n() const { return covariates_.n(); }
  int d() const { return covariates_.d(); }
  int T() const { return static_cast<int>(events_.size()); }

  // 1-based time index.
  const ComparisonEvent& at(int t) const { return events_[t - 1]; }

  // Events [1, T'] with covariates unchanged.
  ComparisonDataset Prefix(int t_end) const;

 private:
  CovariateSet covariates_;
  std::vector<ComparisonEvent> events_;
  std::vector<std::string> labels_;
};

// Inclusive 1-based span [start, end].
struct SegmentSpan {
  int start = 1;
  int end = 1;

  int length() const { return end - start + 1; }
  bool operator==(const SegmentSpan&) const = default;
};

// Throws InputError unless 1 <= start <= end <= T.
void ValidateSpan(const SegmentSpan& span, int T);

// xi = (alpha, beta). alpha has one entry per item, beta one per covariate.
struct ParamVector {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;

  ParamVector() = default;
  ParamVector(Eigen::VectorXd a, Eigen::VectorXd b)
      : alpha(std::move(a)), beta(std::move(b)) {}
  static ParamVector Zero(int n, int d) {
    return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(d)};
  }

  int size() const { return static_cast<int>(alpha.size() + beta.size()); }
  // Concatenated (alpha, beta).
  Eigen::VectorXd Stacked() const;
  static ParamVector FromStacked(const Eigen::VectorXd& xi, int n);
  // theta_i = alpha_i + z_i' beta.
  Eigen::VectorXd Scores(const CovariateSet& covariates) const;
  bool AllFinite() const;
};

}  // namespace pscare

#endif  // PSCARE_TYPES_H_
