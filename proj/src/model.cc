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

#include "pscare/model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pscare {
namespace {

void CheckItems(const ComparisonEvent& event, const CovariateSet& covariates) {
  const int n = covariates.n();
  if (event.i < 0 || event.i >= n || event.j < 0 || event.j >= n) {
    throw InputError("item index out of range for n=" + std::to_string(n));
  }
  if (event.i == event.j) throw InputError("an item cannot meet itself");
}

void CheckParams(const ParamVector& xi, const CovariateSet& covariates) {
  if (xi.alpha.size() != covariates.n() || xi.beta.size() != covariates.d()) {
    throw InputError("parameter vector has shape (" +
                     std::to_string(xi.alpha.size()) + ", " +
                     std::to_string(xi.beta.size()) + "), expected (" +
                     std::to_string(covariates.n()) + ", " +
                     std::to_string(covariates.d()) + ")");
  }
}

// theta_i - theta_j for the event.
double Margin(const Eigen::VectorXd& theta, const ComparisonEvent& e) {
  return theta[e.i] - theta[e.j];
}

std::string ColumnName(Eigen::Index col) {
  return col == 0 ? std::string("intercept") : "c" + std::to_string(col);
}

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int Find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void Union(int a, int b) { parent[Find(a)] = Find(b); }
};

}  // namespace

double Softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double Logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::VectorXd DesignVector(const ComparisonEvent& event,
                             const CovariateSet& covariates) {
  CheckItems(event, covariates);
  const int n = covariates.n();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n + covariates.d());
  v[event.i] = 1.0;
  v[event.j] = -1.0;
  if (covariates.d() > 0) {
    v.tail(covariates.d()) =
        (covariates.row(event.i) - covariates.row(event.j)).transpose();
  }
  return v;
}

double WinProbability(const ParamVector& xi, const ComparisonEvent& event,
                      const CovariateSet& covariates) {
  CheckItems(event, covariates);
  CheckParams(xi, covariates);
  double margin = xi.alpha[event.i] - xi.alpha[event.j];
  if (covariates.d() > 0) {
    margin += (covariates.row(event.i) - covariates.row(event.j)).dot(xi.beta);
  }
  return Logistic(margin);
}

double SegmentNll(const ParamVector& xi, const ComparisonDataset& data,
                  const SegmentSpan& span) {
  ValidateSpan(span, data.T());
  CheckParams(xi, data.covariates());
  const Eigen::VectorXd theta = xi.Scores(data.covariates());
  double nll = 0;
  for (int t = span.start; t <= span.end; ++t) {
    const ComparisonEvent& e = data.at(t);
    const double m = Margin(theta, e);
    nll += Softplus(m) - (e.winner_is_i ? m : 0.0);
  }
  return nll;
}

Eigen::VectorXd SegmentNllGradient(const ParamVector& xi,
                                   const ComparisonDataset& data,
                                   const SegmentSpan& span) {
  ValidateSpan(span, data.T());
  CheckParams(xi, data.covariates());
  const int n = data.n();
  const Eigen::VectorXd theta = xi.Scores(data.covariates());
  // Accumulate dNLL/dtheta, then chain through theta = alpha + Z beta.
  Eigen::VectorXd g_theta = Eigen::VectorXd::Zero(n);
  for (int t = span.start; t <= span.end; ++t) {
    const ComparisonEvent& e = data.at(t);
    const double r = Logistic(Margin(theta, e)) - e.y();
    g_theta[e.i] += r;
    g_theta[e.j] -= r;
  }
  Eigen::VectorXd grad(n + data.d());
  grad.head(n) = g_theta;
  if (data.d() > 0) {
    grad.tail(data.d()) = data.covariates().z().transpose() * g_theta;
  }
  return grad;
}

ThetaProjector::ThetaProjector(const CovariateSet& covariates)
    : w_(covariates.design()) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> pivoted(w_);
  pivoted.setThreshold(1e-10);
  if (pivoted.rank() < w_.cols()) {
    std::string dependent;
    const auto& perm = pivoted.colsPermutation().indices();
    for (Eigen::Index k = pivoted.rank(); k < w_.cols(); ++k) {
      if (!dependent.empty()) dependent += ", ";
      dependent += ColumnName(perm[k]);
    }
    throw IdentifiabilityError(
        "W = [1 | Z] is rank deficient (rank " +
        std::to_string(pivoted.rank()) + " < " + std::to_string(w_.cols()) +
        "); linearly dependent columns: " + dependent);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(w_);
  basis_ = qr.householderQ() * Eigen::MatrixXd::Identity(w_.rows(), w_.cols());
}

Eigen::VectorXd ThetaProjector::ProjectAlpha(
    const Eigen::VectorXd& alpha) const {
  Eigen::VectorXd out = alpha;
  ProjectAlphaInPlace(out);
  return out;
}

void ThetaProjector::ProjectAlphaInPlace(
    Eigen::Ref<Eigen::VectorXd> alpha) const {
  const Eigen::VectorXd coef = basis_.transpose() * alpha;
  alpha.noalias() -= basis_ * coef;
}

ParamVector ThetaProjector::Project(const ParamVector& xi) const {
  return {ProjectAlpha(xi.alpha), xi.beta};
}

ParamVector ThetaProjector::FromScores(const Eigen::VectorXd& theta) const {
  // theta = alpha + c 1 + Z b with alpha orthogonal to col(W).
  const Eigen::VectorXd coef = w_.colPivHouseholderQr().solve(theta);
  return {ProjectAlpha(theta), coef.tail(w_.cols() - 1)};
}

double ThetaProjector::ConstraintResidual(const Eigen::VectorXd& alpha) const {
  return (w_.transpose() * alpha).cwiseAbs().maxCoeff();
}

ParamVector ProjectToTheta(const Eigen::VectorXd& xi_raw,
                           const CovariateSet& covariates) {
  if (xi_raw.size() != covariates.n() + covariates.d()) {
    throw InputError("raw parameter vector has length " +
                     std::to_string(xi_raw.size()) + ", expected " +
                     std::to_string(covariates.n() + covariates.d()));
  }
  ThetaProjector projector(covariates);
  return projector.Project(ParamVector::FromStacked(xi_raw, covariates.n()));
}

SpanSummary::SpanSummary(const ComparisonDataset& data,
                         const SegmentSpan& span)
    : appearances_(data.n(), 0), length_(span.length()) {
  ValidateSpan(span, data.T());
  const int n = data.n();
  // Dense upper-triangular index for pair (a, b), a < b.
  std::vector<int> slot(static_cast<std::size_t>(n) * n, -1);
  for (int t = span.start; t <= span.end; ++t) {
    const ComparisonEvent& e = data.at(t);
    const int a = std::min(e.i, e.j);
    const int b = std::max(e.i, e.j);
    int& s = slot[static_cast<std::size_t>(a) * n + b];
    if (s < 0) {
      s = static_cast<int>(pairs_.size());
      pairs_.push_back({a, b, 0.0, 0.0});
    }
    PairTally& p = pairs_[s];
    p.count += 1;
    // a won if (i = a and i won) or (j = a and j won).
    if ((e.i == a) == e.winner_is_i) p.wins_a += 1;
    ++appearances_[e.i];
    ++appearances_[e.j];
  }
  std::sort(pairs_.begin(), pairs_.end(),
            [](const PairTally& x, const PairTally& y) {
              return x.a != y.a ? x.a < y.a : x.b < y.b;
            });
  Finalize();
}

double SpanSummary::Nll(const Eigen::VectorXd& theta) const {
  double nll = 0;
  for (const PairTally& p : pairs_) {
    const double m = theta[p.a] - theta[p.b];
    nll += p.count * Softplus(m) - p.wins_a * m;
  }
  return nll;
}

double SpanSummary::NllAndGradient(const Eigen::VectorXd& theta,
                                   Eigen::VectorXd* grad_theta) const {
  const Eigen::Index num = static_cast<Eigen::Index>(pairs_.size());
  margin_.resize(num);
  for (Eigen::Index k = 0; k < num; ++k) {
    margin_[k] = theta[pairs_[k].a] - theta[pairs_[k].b];
  }
  // Shared exp for softplus and logistic. With e in (0, 1], log(1 + e)
  // carries an absolute error near 1e-16, which is all the sum needs, and
  // unlike log1p it vectorizes.
  exp_neg_ = (-margin_.abs()).exp();
  const double nll =
      (count_ * (margin_.max(0.0) + (1.0 + exp_neg_).log()) - wins_ * margin_)
          .sum();
  resid_ = count_ * (margin_ >= 0).select(1.0, exp_neg_) / (1.0 + exp_neg_) -
           wins_;
  grad_theta->setZero(theta.size());
  for (Eigen::Index k = 0; k < num; ++k) {
    (*grad_theta)[pairs_[k].a] += resid_[k];
    (*grad_theta)[pairs_[k].b] -= resid_[k];
  }
  return nll;
}

void SpanSummary::Finalize() {
  const Eigen::Index num = static_cast<Eigen::Index>(pairs_.size());
  count_.resize(num);
  wins_.resize(num);
  for (Eigen::Index k = 0; k < num; ++k) {
    count_[k] = pairs_[k].count;
    wins_[k] = pairs_[k].wins_a;
  }
}

SpanSummary SpanSummary::WithinGroups(const std::vector<int>& group) const {
  SpanSummary out;
  out.appearances_ = appearances_;
  out.length_ = length_;
  for (const PairTally& p : pairs_) {
    if (group[p.a] == group[p.b]) out.pairs_.push_back(p);
  }
  out.Finalize();
  return out;
}

namespace {

// Tarjan's algorithm. Components are numbered in completion order, which is a
// reverse topological order of the condensation: an edge u -> v between
// components has component[u] > component[v].
class TarjanScc {
 public:
  explicit TarjanScc(const std::vector<std::vector<int>>& adjacency)
      : adj_(adjacency),
        index_(adjacency.size(), -1),
        low_(adjacency.size(), 0),
        on_stack_(adjacency.size(), false),
        component_(adjacency.size(), -1) {
    for (int v = 0; v < static_cast<int>(adj_.size()); ++v) {
      if (index_[v] < 0) Visit(v);
    }
  }

  const std::vector<int>& component() const { return component_; }
  int count() const { return count_; }

 private:
  void Visit(int v) {
    index_[v] = low_[v] = next_index_++;
    stack_.push_back(v);
    on_stack_[v] = true;
    for (int w : adj_[v]) {
      if (index_[w] < 0) {
        Visit(w);
        low_[v] = std::min(low_[v], low_[w]);
      } else if (on_stack_[w]) {
        low_[v] = std::min(low_[v], index_[w]);
      }
    }
    if (low_[v] == index_[v]) {
      int w;
      do {
        w = stack_.back();
        stack_.pop_back();
        on_stack_[w] = false;
        component_[w] = count_;
      } while (w != v);
      ++count_;
    }
  }

  const std::vector<std::vector<int>>& adj_;
  std::vector<int> index_;
  std::vector<int> low_;
  std::vector<bool> on_stack_;
  std::vector<int> component_;
  std::vector<int> stack_;
  int next_index_ = 0;
  int count_ = 0;
};

}  // namespace

WinGraphComponents AnalyzeWinGraph(const SpanSummary& summary, int n) {
  std::vector<std::vector<int>> adjacency(n);
  for (const PairTally& p : summary.pairs()) {
    if (p.wins_a > 0) adjacency[p.a].push_back(p.b);
    if (p.wins_a < p.count) adjacency[p.b].push_back(p.a);
  }
  const TarjanScc scc(adjacency);

  WinGraphComponents out;
  out.component = scc.component();
  out.count = scc.count();
  out.level.assign(out.count, 0);
  // Components in increasing id are in sink-first order.
  std::vector<std::vector<int>> members(out.count);
  for (int v = 0; v < n; ++v) members[out.component[v]].push_back(v);
  for (int c = 0; c < out.count; ++c) {
    for (int v : members[c]) {
      for (int w : adjacency[v]) {
        const int cw = out.component[w];
        if (cw != c) out.level[c] = std::max(out.level[c], out.level[cw] + 1);
      }
    }
  }
  for (const PairTally& p : summary.pairs()) {
    if (out.component[p.a] != out.component[p.b]) {
      out.mle_exists = false;
      break;
    }
  }
  return out;
}

double IncoherenceStatistic(const CovariateSet& covariates) {
  const ThetaProjector projector(covariates);
  const Eigen::MatrixXd& q = projector.basis();
  const Eigen::MatrixXd p_w = q * q.transpose();
  return p_w.rowwise().norm().maxCoeff();
}

DiagnosticsReport CheckAssumptions(const ComparisonDataset& data,
                                   const SegmentSpan& span, double c0,
                                   double cp) {
  ValidateSpan(span, data.T());
  const int n = data.n();
  const int d = data.d();
  DiagnosticsReport report;

  report.incoherence_bound = c0 * std::sqrt((d + 1.0) / n);
  try {
    report.incoherence = IncoherenceStatistic(data.covariates());
    report.incoherence_ok = report.incoherence <= report.incoherence_bound;
  } catch (const IdentifiabilityError&) {
    report.incoherence = std::numeric_limits<double>::infinity();
    report.incoherence_ok = false;
  }

  const SpanSummary summary(data, span);
  report.span_length = span.length();
  report.l_min = std::numeric_limits<int>::max();
  DisjointSets components(n);
  for (const PairTally& p : summary.pairs()) {
    report.l_min = std::min(report.l_min, static_cast<int>(p.count));
    components.Union(p.a, p.b);
  }
  if (summary.pairs().empty()) report.l_min = 0;
  report.rate_statistic =
      static_cast<double>(n) * report.l_min / report.span_length;
  report.rate_threshold = cp * std::log(static_cast<double>(n));
  report.rate_ok = report.rate_statistic > report.rate_threshold;

  report.items_present = static_cast<int>(
      std::count_if(summary.appearances().begin(), summary.appearances().end(),
                    [](int c) { return c > 0; }));
  report.all_items_present = report.items_present == n;
  report.mle_exists = AnalyzeWinGraph(summary, n).mle_exists;
  const int root = components.Find(0);
  report.connected = true;
  for (int i = 1; i < n; ++i) {
    if (components.Find(i) != root) {
      report.connected = false;
      break;
    }
  }
  return report;
}

}  // namespace pscare
