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

#include "pscare/bench.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "pscare/io.h"

namespace pscare {
namespace {

constexpr uint64_t kBenchStream = 0xbe4c;

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since)
      .count();
}

std::string JoinDoubles(const std::vector<double>& v, int precision) {
  std::ostringstream out;
  out << '(';
  for (std::size_t k = 0; k < v.size(); ++k) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v[k]);
    out << (k ? ", " : "") << buf;
  }
  out << ')';
  return out.str();
}

}  // namespace

void BenchSpec::Validate() const {
  if (setting != 1 && setting != 2) {
    throw InputError("setting must be 1 or 2, got " + std::to_string(setting));
  }
  if (reps < 1) throw InputError("reps must be positive");
  SimSpec sim;
  sim.n = n;
  sim.d = d();
  sim.K = K;
  sim.delta = delta;
  sim.Validate();
}

uint64_t BenchRepSeed(uint64_t seed, int rep) {
  return Rng::Derive(seed, {kBenchStream, static_cast<uint64_t>(rep)}).Next();
}

BenchSummary SummarizeBench(const BenchSpec& spec, std::vector<BenchRep> reps,
                            double seconds) {
  BenchSummary summary;
  summary.spec = spec;
  for (int k = 1; k <= spec.K; ++k) summary.true_tau.push_back(k * spec.delta);
  summary.reps = std::move(reps);
  summary.seconds = seconds;
  std::vector<const BenchRep*> exact;
  for (const BenchRep& r : summary.reps) {
    if (r.K_hat == spec.K) exact.push_back(&r);
  }
  summary.exact_K = static_cast<int>(exact.size());
  summary.exact_K_pct =
      summary.reps.empty()
          ? 0.0
          : 100.0 * summary.exact_K / static_cast<double>(summary.reps.size());
  if (!exact.empty() && spec.K > 0) {
    const double m = static_cast<double>(exact.size());
    for (int k = 0; k < spec.K; ++k) {
      double sum = 0;
      double abs_dev = 0;
      for (const BenchRep* r : exact) {
        sum += r->tau_hat[k];
        abs_dev += std::abs(r->tau_hat[k] - summary.true_tau[k]);
      }
      const double mean = sum / m;
      double ss = 0;
      for (const BenchRep* r : exact) ss += std::pow(r->tau_hat[k] - mean, 2);
      summary.mean_tau.push_back(mean);
      summary.se_tau.push_back(m > 1 ? std::sqrt(ss / (m - 1) / m) : 0.0);
      summary.mean_abs_dev.push_back(abs_dev / m);
    }
  }
  return summary;
}

BenchSummary RunBench(const BenchSpec& spec, const BenchObserver& observer) {
  spec.Validate();
  std::vector<BenchRep> reps;
  double seconds = 0;
  for (int rep = 0; rep < spec.reps; ++rep) {
    const auto start = std::chrono::steady_clock::now();
    SimSpec sim_spec;
    sim_spec.n = spec.n;
    sim_spec.d = spec.d();
    sim_spec.K = spec.K;
    sim_spec.delta = spec.delta;
    sim_spec.seed = BenchRepSeed(spec.seed, rep);
    const SimOutput sim = GenDataset(sim_spec);
    FitCache cache(sim.dataset, spec.fit);
    const Segmentation seg =
        Detect(sim.dataset, spec.detect, spec.fit, spec.mdl, &cache);
    BenchRep r;
    r.seed = sim_spec.seed;
    r.K_hat = seg.K_hat;
    r.tau_hat = seg.tau_hat;
    r.seconds = Seconds(start);
    seconds += r.seconds;
    reps.push_back(std::move(r));
    if (observer) observer(rep, sim, cache, seg);
  }
  return SummarizeBench(spec, std::move(reps), seconds);
}

std::string FormatBenchTable(const BenchSummary& s) {
  std::ostringstream out;
  out << "Method  n   d  Delta  mean of tau_hat          s.e. of tau_hat   "
         "% K_hat=K\n";
  char row[64];
  std::snprintf(row, sizeof(row), "MDL     %-3d %-2d %-6d ", s.spec.n,
                s.spec.d(), s.spec.delta);
  out << row
      << (s.mean_tau.empty() ? std::string("NA") : JoinDoubles(s.mean_tau, 1))
      << "  "
      << (s.se_tau.empty() ? std::string("NA") : JoinDoubles(s.se_tau, 1))
      << "  ";
  std::snprintf(row, sizeof(row), "%.0f%%", s.exact_K_pct);
  out << row << '\n';
  std::snprintf(row, sizeof(row), "%d/%d", s.exact_K,
                static_cast<int>(s.reps.size()));
  out << "exact K: " << row << ", true tau "
      << JoinDoubles(std::vector<double>(s.true_tau.begin(), s.true_tau.end()),
                     0);
  if (!s.mean_abs_dev.empty()) {
    out << ", mean |tau_hat - tau| " << JoinDoubles(s.mean_abs_dev, 2);
  }
  std::snprintf(row, sizeof(row), ", %.1f s", s.seconds);
  out << row << '\n';
  return out.str();
}

nlohmann::json BenchToJson(const BenchSummary& s) {
  nlohmann::json reps = nlohmann::json::array();
  for (const BenchRep& r : s.reps) {
    reps.push_back({{"seed", r.seed},
                    {"K_hat", r.K_hat},
                    {"tau_hat", r.tau_hat},
                    {"seconds", r.seconds}});
  }
  return {{"setting", s.spec.setting},
          {"n", s.spec.n},
          {"d", s.spec.d()},
          {"K", s.spec.K},
          {"delta", s.spec.delta},
          {"seed", s.spec.seed},
          {"rng_family", kRngFamily},
          {"mdl", MdlConfigToJson(s.spec.mdl)},
          {"prune_rule", PruneRuleName(s.spec.detect.prune_rule)},
          {"true_tau", s.true_tau},
          {"exact_K", s.exact_K},
          {"exact_K_pct", s.exact_K_pct},
          {"mean_tau", s.mean_tau},
          {"se_tau", s.se_tau},
          {"mean_abs_dev", s.mean_abs_dev},
          {"seconds", s.seconds},
          {"reps", reps}};
}

}  // namespace pscare
