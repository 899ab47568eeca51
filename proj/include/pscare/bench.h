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

// Monte-Carlo replication of the detection experiments: simulate, detect,
// and summarize the change-point estimates over replications.

#ifndef PSCARE_BENCH_H_
#define PSCARE_BENCH_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pscare/estimator.h"
#include "pscare/mdl.h"
#include "pscare/pelt.h"
#include "pscare/simulator.h"

namespace pscare {

struct BenchSpec {
  // Setting 1 has no covariates, setting 2 has d = 5.
  int setting = 1;
  int n = 10;
  int K = 3;
  int delta = 400;
  int reps = 20;
  uint64_t seed = 1;
  DetectConfig detect;
  FitConfig fit;
  MdlConfig mdl;

  int d() const { return setting == 2 ? 5 : 0; }
  void Validate() const;
};

struct BenchRep {
  uint64_t seed = 0;
  int K_hat = 0;
  std::vector<int> tau_hat;
  double seconds = 0;
};

struct BenchSummary {
  BenchSpec spec;
  std::vector<int> true_tau;
  std::vector<BenchRep> reps;
  int exact_K = 0;
  double exact_K_pct = 0;
  // Over replications with K_hat = K; empty when there are none.
  std::vector<double> mean_tau;
  std::vector<double> se_tau;
  std::vector<double> mean_abs_dev;
  double seconds = 0;
};

// Seed of replication `rep` (0-based).
uint64_t BenchRepSeed(uint64_t seed, int rep);

// Called after each replication with the simulated data, the fit cache used
// for detection (still valid) and the result. Observer time is not counted.
using BenchObserver = std::function<void(int rep, const SimOutput& sim,
                                         FitCache& cache,
                                         const Segmentation& seg)>;

// Statistics over finished replications of `spec`.
BenchSummary SummarizeBench(const BenchSpec& spec, std::vector<BenchRep> reps,
                            double seconds);

BenchSummary RunBench(const BenchSpec& spec,
                      const BenchObserver& observer = {});

// One table row: mean and s.e. of tau_hat and % exact K_hat.
std::string FormatBenchTable(const BenchSummary& summary);
nlohmann::json BenchToJson(const BenchSummary& summary);

}  // namespace pscare

#endif  // PSCARE_BENCH_H_
