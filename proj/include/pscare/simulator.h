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

// Piecewise-stationary synthetic comparison data.
//
// Randomness is derived from one 64-bit master seed. Independent streams are
// obtained by mixing (seed, stream tag, index...) through SplitMix64 and
// seeding std::mt19937_64 with the result. Uniform and Gaussian draws are
// computed here from the raw 64-bit output rather than by the standard
// distributions, whose algorithms are implementation defined, so output is
// bit-identical across platforms.

#ifndef PSCARE_SIMULATOR_H_
#define PSCARE_SIMULATOR_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "pscare/types.h"

namespace pscare {

inline constexpr const char* kRngFamily = "mt19937_64/splitmix64";

uint64_t SplitMix64(uint64_t x);

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}
  // Stream keyed by `seed` and a path of tags.
  static Rng Derive(uint64_t seed, std::initializer_list<uint64_t> path);

  uint64_t Next() { return engine_(); }
  // [0, 1) with 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Standard normal by Box-Muller (no cached second value).
  double Gaussian();
  // Uniform integer in [0, bound).
  uint64_t Below(uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

struct SimSpec {
  int n = 10;
  int d = 0;
  int K = 3;
  int delta = 400;
  uint64_t seed = 1;

  double alpha_range = 0.3;         // alpha_i ~ U[-alpha_range, alpha_range]
  double beta_radius_factor = 0.5;  // ||beta|| = factor * sqrt(n / (d+1))
  double covariate_range = 0.5;     // raw z ~ U[-range, range]

  int T() const { return (K + 1) * delta; }
  void Validate() const;
};

struct SimOutput {
  ComparisonDataset dataset;
  // Last index of each segment but the final one: i * delta.
  std::vector<int> true_changepoints;
  std::vector<ParamVector> true_params;
};

// Uniform draws, then per-column centering and scaling to unit sample
// standard deviation, then a common rescale so that the largest row norm is
// sqrt((d+1)/n).
CovariateSet GenCovariates(int n, int d, uint64_t seed,
                           double covariate_range = 0.5);

// alpha ~ U[-alpha_range, alpha_range], beta uniform on the sphere of radius
// beta_radius_factor * sqrt(n/(d+1)), alpha projected onto null(W').
ParamVector GenSegmentParams(const CovariateSet& covariates, uint64_t seed,
                             double alpha_range = 0.3,
                             double beta_radius_factor = 0.5);

// Complete comparison graph: each time point picks one of the n(n-1)/2 pairs
// uniformly, orients it with i < j, and draws the outcome from the model.
SimOutput GenDataset(const SimSpec& spec);

}  // namespace pscare

#endif  // PSCARE_SIMULATOR_H_
