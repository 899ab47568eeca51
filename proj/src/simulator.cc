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

#include "pscare/simulator.h"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "pscare/model.h"

namespace pscare {
namespace {

// Stream tags.
constexpr uint64_t kCovariateStream = 1;
constexpr uint64_t kParamStream = 2;
constexpr uint64_t kEventStream = 3;

}  // namespace

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng Rng::Derive(uint64_t seed, std::initializer_list<uint64_t> path) {
  uint64_t state = SplitMix64(seed);
  for (uint64_t tag : path) state = SplitMix64(state ^ SplitMix64(tag));
  return Rng(state);
}

double Rng::Uniform() {
  return static_cast<double>(Next() >> 11) * 0x1.0p-53;
}

double Rng::Gaussian() {
  // 1 - U lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - Uniform();
  const double u2 = Uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

uint64_t Rng::Below(uint64_t bound) {
  // Rejection sampling keeps the draw exactly uniform.
  const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t x;
  do {
    x = Next();
  } while (x >= limit);
  return x % bound;
}

void SimSpec::Validate() const {
  if (n < 2) throw InputError("simulation needs n >= 2");
  if (d < 0 || d >= n - 1) {
    throw InputError("simulation needs 0 <= d < n-1, got d=" +
                     std::to_string(d));
  }
  if (K < 0) throw InputError("K must be non-negative");
  if (delta < 1) throw InputError("delta must be positive");
}

CovariateSet GenCovariates(int n, int d, uint64_t seed,
                           double covariate_range) {
  if (n < 2) throw InputError("covariates need n >= 2");
  if (d < 0) throw InputError("covariate dimension must be non-negative");
  if (d == 0) return CovariateSet(n);

  Rng rng = Rng::Derive(seed, {kCovariateStream});
  Eigen::MatrixXd z(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      z(i, j) = rng.Uniform(-covariate_range, covariate_range);
    }
  }
  for (int j = 0; j < d; ++j) {
    z.col(j).array() -= z.col(j).mean();
    const double sd = std::sqrt(z.col(j).squaredNorm() / (n - 1));
    z.col(j) /= sd;
  }
  const double h = z.rowwise().norm().maxCoeff() / std::sqrt((d + 1.0) / n);
  z /= h;
  return CovariateSet(std::move(z));
}

ParamVector GenSegmentParams(const CovariateSet& covariates, uint64_t seed,
                             double alpha_range, double beta_radius_factor) {
  const int n = covariates.n();
  const int d = covariates.d();
  Rng rng = Rng::Derive(seed, {kParamStream});
  ParamVector xi = ParamVector::Zero(n, d);
  for (int i = 0; i < n; ++i) xi.alpha[i] = rng.Uniform(-alpha_range, alpha_range);
  if (d > 0) {
    Eigen::VectorXd g(d);
    do {
      for (int j = 0; j < d; ++j) g[j] = rng.Gaussian();
    } while (g.norm() == 0);
    const double radius = beta_radius_factor * std::sqrt(n / (d + 1.0));
    xi.beta = g * (radius / g.norm());
  }
  return ThetaProjector(covariates).Project(xi);
}

SimOutput GenDataset(const SimSpec& spec) {
  spec.Validate();
  const int n = spec.n;
  CovariateSet covariates = GenCovariates(n, spec.d, spec.seed,
                                          spec.covariate_range);

  SimOutput out;
  for (int k = 0; k <= spec.K; ++k) {
    // Adjacent segments must differ; regenerate with the next sub-seed.
    for (uint64_t attempt = 0;; ++attempt) {
      const uint64_t sub_seed =
          SplitMix64(spec.seed ^ SplitMix64((static_cast<uint64_t>(k) << 32) +
                                            attempt));
      ParamVector xi = GenSegmentParams(covariates, sub_seed, spec.alpha_range,
                                        spec.beta_radius_factor);
      if (k > 0 && xi.alpha == out.true_params.back().alpha &&
          xi.beta == out.true_params.back().beta) {
        continue;
      }
      out.true_params.push_back(std::move(xi));
      break;
    }
    if (k > 0) out.true_changepoints.push_back(k * spec.delta);
  }

  const uint64_t num_pairs = static_cast<uint64_t>(n) * (n - 1) / 2;
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(num_pairs);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }

  Rng rng = Rng::Derive(spec.seed, {kEventStream});
  std::vector<ComparisonEvent> events;
  events.reserve(spec.T());
  for (int k = 0; k <= spec.K; ++k) {
    const Eigen::VectorXd theta = out.true_params[k].Scores(covariates);
    for (int s = 0; s < spec.delta; ++s) {
      const auto [i, j] = pairs[rng.Below(num_pairs)];
      const double p = Logistic(theta[i] - theta[j]);
      const int t = static_cast<int>(events.size()) + 1;
      events.push_back({t, i, j, rng.Uniform() < p});
    }
  }
  out.dataset = ComparisonDataset(std::move(covariates), std::move(events));
  return out;
}

}  // namespace pscare
