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

#include "pscare/estimator.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <utility>

namespace pscare {
namespace {

constexpr int kMaxBacktracks = 60;
constexpr double kMinStep = 1e-12;
constexpr double kMaxStep = 1e12;
// Minimum score margin placed between win-graph components of a separated
// span; exp(-40) is below double resolution relative to any NLL term.
constexpr double kSeparationGap = 40.0;

// Relative slack for comparing objective values that agree to rounding.
double RoundingSlack(double f) {
  return 64 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f));
}

// Penalized objective and projected gradient at one iterate.
struct Evaluation {
  double objective = 0;
  double nll = 0;
  Eigen::VectorXd direction;  // projected gradient, stacked (alpha, beta)
  double sup_norm = 0;
};

// Objective, gradient and projection for one span. The dimensions are tiny,
// so the products are written out over preallocated buffers.
class Problem {
 public:
  Problem(const SpanSummary& summary, const CovariateSet& covariates,
          const ThetaProjector& projector, double ridge)
      : summary_(summary),
        z_(covariates.z()),
        basis_(projector.basis()),
        ridge_(ridge),
        n_(covariates.n()),
        d_(covariates.d()),
        theta_(n_),
        g_theta_(n_),
        coef_(basis_.cols()) {}

  int dim() const { return n_ + d_; }

  const Eigen::VectorXd& Scores(const Eigen::VectorXd& xi) const {
    theta_ = xi.head(n_);
    for (int j = 0; j < d_; ++j) {
      const double b = xi[n_ + j];
      const double* col = z_.col(j).data();
      for (int i = 0; i < n_; ++i) theta_[i] += b * col[i];
    }
    return theta_;
  }

  void Evaluate(const Eigen::VectorXd& xi, Evaluation* eval) const {
    eval->nll = summary_.NllAndGradient(Scores(xi), &g_theta_);
    eval->objective = eval->nll;
    Eigen::VectorXd& dir = eval->direction;
    dir.resize(dim());
    for (int i = 0; i < n_; ++i) dir[i] = g_theta_[i];
    for (int j = 0; j < d_; ++j) {
      const double* col = z_.col(j).data();
      double acc = 0;
      for (int i = 0; i < n_; ++i) acc += col[i] * g_theta_[i];
      dir[n_ + j] = acc;
    }
    if (ridge_ > 0) {
      eval->objective += 0.5 * ridge_ * xi.squaredNorm();
      dir += ridge_ * xi;
    }
    ProjectAlpha(dir.data());
    eval->sup_norm = dir.lpNorm<Eigen::Infinity>();
  }

  // project_to_theta(xi - step * direction)
  void Step(const Eigen::VectorXd& xi, const Eigen::VectorXd& direction,
            double step, Eigen::VectorXd* out) const {
    out->resize(dim());
    for (int k = 0; k < dim(); ++k) (*out)[k] = xi[k] - step * direction[k];
    ProjectAlpha(out->data());
  }

 private:
  // alpha -= Q (Q' alpha) on the first n entries.
  void ProjectAlpha(double* alpha) const {
    const int m = static_cast<int>(basis_.cols());
    for (int c = 0; c < m; ++c) {
      const double* q = basis_.col(c).data();
      double acc = 0;
      for (int i = 0; i < n_; ++i) acc += q[i] * alpha[i];
      coef_[c] = acc;
    }
    for (int c = 0; c < m; ++c) {
      const double* q = basis_.col(c).data();
      const double a = coef_[c];
      for (int i = 0; i < n_; ++i) alpha[i] -= a * q[i];
    }
  }

  const SpanSummary& summary_;
  const Eigen::MatrixXd& z_;
  const Eigen::MatrixXd& basis_;
  double ridge_;
  int n_;
  int d_;
  mutable Eigen::VectorXd theta_;
  mutable Eigen::VectorXd g_theta_;
  mutable Eigen::VectorXd coef_;
};

}  // namespace

void FitConfig::Validate() const {
  if (max_iters <= 0) throw InputError("max_iters must be positive");
  if (!(grad_tol > 0)) throw InputError("grad_tol must be positive");
  if (!(fixed_step > 0)) throw InputError("fixed_step must be positive");
  if (!(shrink > 0 && shrink < 1)) throw InputError("shrink must be in (0,1)");
  if (!(armijo > 0 && armijo < 1)) throw InputError("armijo must be in (0,1)");
  if (!(initial_step > 0)) throw InputError("initial_step must be positive");
  if (!(ridge >= 0)) throw InputError("ridge must be non-negative");
  if (!(divergence_bound > 0)) {
    throw InputError("divergence_bound must be positive");
  }
  if (!(fallback_ridge > 0)) throw InputError("fallback_ridge must be positive");
}

SegmentFitter::SegmentFitter(const ComparisonDataset& data, FitConfig config)
    : data_(&data),
      config_(std::move(config)),
      projector_(data.covariates()) {
  config_.Validate();
}

SegmentFit SegmentFitter::Fit(const SegmentSpan& span) const {
  ValidateSpan(span, data_->T());
  return Fit(span, SpanSummary(*data_, span));
}

SegmentFit SegmentFitter::Fit(const SegmentSpan& span,
                              const SpanSummary& summary) const {
  SegmentFit fit;
  if (config_.ridge == 0) {
    const WinGraphComponents graph = AnalyzeWinGraph(summary, data_->n());
    fit = graph.mle_exists ? Run(summary, 0.0) : FitSeparated(summary, graph);
  } else {
    fit = Run(summary, config_.ridge);
  }
  if (fit.diverged && config_.ridge == 0) {
    SegmentFit refit = Run(summary, config_.fallback_ridge);
    refit.diverged = true;
    refit.ridge_fallback = true;
    std::ostringstream msg;
    msg << "||xi||_inf exceeded " << config_.divergence_bound << " after "
        << fit.iters << " iterations; refit with ridge "
        << config_.fallback_ridge;
    if (!refit.diagnostic.empty()) msg << "; " << refit.diagnostic;
    refit.diagnostic = msg.str();
    refit.iters += fit.iters;
    fit = std::move(refit);
  }
  fit.span = span;
  return fit;
}

SegmentFit SegmentFitter::FitSeparated(const SpanSummary& summary,
                                       const WinGraphComponents& graph) const {
  // Comparisons across components are won by the upstream side every time;
  // their NLL terms vanish in the limit. Fit what remains, then move the
  // components apart along the win order.
  SegmentFit fit = Run(summary.WithinGroups(graph.component), 0.0);
  fit.separated = true;
  if (fit.diverged) return fit;

  const int n = data_->n();
  Eigen::VectorXd theta = fit.xi_hat.Scores(data_->covariates());
  const double gap = kSeparationGap + theta.maxCoeff() - theta.minCoeff();
  for (int i = 0; i < n; ++i) theta[i] += gap * graph.level[graph.component[i]];
  fit.xi_hat = projector_.FromScores(theta);
  fit.nll = summary.Nll(fit.xi_hat.Scores(data_->covariates()));

  std::ostringstream msg;
  msg << "no maximum likelihood estimate: " << graph.count
      << " win-graph components with one-sided comparisons between them; "
         "nll is the supremum likelihood";
  if (!fit.diagnostic.empty()) msg << "; " << fit.diagnostic;
  fit.diagnostic = msg.str();
  return fit;
}

SegmentFit SegmentFitter::Run(const SpanSummary& summary, double ridge) const {
  const CovariateSet& covariates = data_->covariates();
  const int n = covariates.n();
  const Problem problem(summary, covariates, projector_, ridge);

  SegmentFit fit;
  fit.ridge_used = ridge;

  Eigen::VectorXd xi = Eigen::VectorXd::Zero(n + covariates.d());
  Eigen::VectorXd trial;
  Evaluation eval;
  Evaluation next;
  problem.Evaluate(xi, &eval);
  if (config_.record_objective) fit.objective_trace.push_back(eval.objective);

  const bool fixed = config_.step_rule == StepRule::kFixed;
  double step = fixed ? config_.fixed_step : config_.initial_step;
  int iter = 0;
  for (; iter < config_.max_iters; ++iter) {
    if (eval.sup_norm <= config_.grad_tol) {
      fit.converged = true;
      break;
    }
    if (!std::isfinite(eval.objective)) {
      fit.diagnostic = "objective became non-finite";
      break;
    }

    if (fixed) {
      problem.Step(xi, eval.direction, step, &trial);
      problem.Evaluate(trial, &next);
    } else {
      const double slope = eval.direction.squaredNorm();
      const double slack = RoundingSlack(eval.objective);
      bool accepted = false;
      for (int k = 0; k < kMaxBacktracks; ++k) {
        problem.Step(xi, eval.direction, step, &trial);
        problem.Evaluate(trial, &next);
        // Near the optimum the Armijo decrease drops below the resolution of
        // the objective; then any step that does not increase it is taken.
        if (next.objective <= eval.objective - config_.armijo * step * slope ||
            (step * slope <= slack && next.objective <= eval.objective + slack)) {
          accepted = true;
          break;
        }
        step *= config_.shrink;
      }
      if (!accepted) {
        fit.diagnostic = "line search failed to make progress";
        break;
      }
      assert(next.objective <= eval.objective + slack);

      // Barzilai-Borwein seed for the next line search.
      double ss = 0;
      double sy = 0;
      for (int k = 0; k < problem.dim(); ++k) {
        const double sk = trial[k] - xi[k];
        ss += sk * sk;
        sy += sk * (next.direction[k] - eval.direction[k]);
      }
      step = sy > 0 ? std::clamp(ss / sy, kMinStep, kMaxStep)
                    : std::min(step / config_.shrink, kMaxStep);
    }

    xi.swap(trial);
    std::swap(eval, next);
    if (config_.record_objective) fit.objective_trace.push_back(eval.objective);

    if (xi.cwiseAbs().maxCoeff() > config_.divergence_bound) {
      fit.diverged = true;
      ++iter;
      break;
    }
  }
  if (!fit.converged && eval.sup_norm <= config_.grad_tol) fit.converged = true;

  fit.iters = iter;
  fit.xi_hat = ParamVector::FromStacked(xi, n);
  fit.nll = eval.nll;
  fit.grad_norm = eval.sup_norm;
  if (!fit.converged && fit.diagnostic.empty() && !fit.diverged) {
    fit.diagnostic = "reached max_iters=" + std::to_string(config_.max_iters);
  }
  return fit;
}

SegmentFit FitSegment(const ComparisonDataset& data, const SegmentSpan& span,
                      const FitConfig& config) {
  return SegmentFitter(data, config).Fit(span);
}

}  // namespace pscare

namespace pscare {

FitCache::FitCache(const ComparisonDataset& data, FitConfig config)
    : fitter_(data, std::move(config)) {}

FitRecord FitCache::Compute(const SegmentSpan& span) const {
  const SegmentFit fit = fitter_.Fit(span);
  return {fit.nll, fit.iters, fit.converged, fit.separated, fit.ridge_fallback};
}

FitRecord FitCache::Get(const SegmentSpan& span) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (auto it = records_.find(Key(span)); it != records_.end()) {
      return it->second;
    }
  }
  const FitRecord record = Compute(span);
  std::lock_guard<std::mutex> lock(mu_);
  ++fits_computed_;
  return records_.try_emplace(Key(span), record).first->second;
}

void FitCache::GetMany(std::span<const SegmentSpan> spans, int threads,
                       std::vector<FitRecord>* out) {
  out->resize(spans.size());
  std::vector<std::size_t> missing;
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (std::size_t k = 0; k < spans.size(); ++k) {
      if (auto it = records_.find(Key(spans[k])); it != records_.end()) {
        (*out)[k] = it->second;
      } else {
        missing.push_back(k);
      }
    }
  }
  if (missing.empty()) return;

  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t m = begin; m < missing.size(); m += stride) {
      (*out)[missing[m]] = Compute(spans[missing[m]]);
    }
  };
  const std::size_t workers = std::min<std::size_t>(
      std::max(threads, 1), missing.size());
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work, w, workers);
    work(0, workers);
  }

  std::lock_guard<std::mutex> lock(mu_);
  fits_computed_ += missing.size();
  for (std::size_t k : missing) records_.try_emplace(Key(spans[k]), (*out)[k]);
}

std::size_t FitCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return records_.size();
}

std::size_t FitCache::fits_computed() const {
  std::lock_guard<std::mutex> lock(mu_);
  return fits_computed_;
}

}  // namespace pscare
