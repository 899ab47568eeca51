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

#include "pscare/pelt.h"

#include <algorithm>
#include <chrono>
#include <climits>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>

namespace pscare {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieTolerance = 1e-9;

uint64_t SaturatingAdd(uint64_t a, uint64_t b) {
  return a > UINT64_MAX - b ? UINT64_MAX : a + b;
}

// Full fits and summaries for the chosen segments.
Segmentation BuildSegmentation(const ComparisonDataset& data,
                               const std::vector<int>& taus, double objective,
                               const ResolvedDetectConfig& rc,
                               const MdlConfig& mdl, const FitCache& cache) {
  const auto start = std::chrono::steady_clock::now();
  Segmentation seg;
  seg.K_hat = static_cast<int>(taus.size());
  seg.tau_hat = taus;
  seg.objective = objective;
  seg.config = rc;
  seg.mdl_config = mdl;

  const std::vector<SegmentSpan> spans =
      SegmentsFromChangepoints(taus, data.T(), rc.min_seg_len);
  std::vector<double> nlls;
  for (const SegmentSpan& span : spans) {
    const SpanSummary summary(data, span);
    SegmentResult result;
    result.fit = cache.fitter().Fit(span, summary);
    result.cost = SegmentCostFromNll(result.fit.nll, span.length(), data.n(),
                                     data.d(), mdl);
    result.appearances = summary.appearances();
    result.diagnostics = CheckAssumptions(data, span);
    nlls.push_back(result.fit.nll);
    seg.segments.push_back(std::move(result));
  }
  seg.mdl = MdlFromSegments(spans, nlls, data.n(), data.d(), data.T(), mdl);
  seg.final_fit_seconds = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - start)
                              .count();
  return seg;
}

struct SearchContext {
  ResolvedDetectConfig rc;
  MdlConfig mdl;
  FitCache* cache = nullptr;
};

SearchContext Prepare(const ComparisonDataset& data, const DetectConfig& config,
                      const FitConfig& fit_config, const MdlConfig& mdl_config,
                      FitCache* cache, std::optional<FitCache>& own_cache) {
  fit_config.Validate();
  mdl_config.Validate();
  SearchContext ctx;
  ctx.rc = ResolveDetectConfig(config, data, mdl_config);
  ctx.mdl = mdl_config;
  ctx.mdl.penalty_gamma = ctx.rc.gamma;
  if (cache != nullptr) {
    if (&cache->fitter().data() != &data) {
      throw InputError("fit cache belongs to a different dataset");
    }
    ctx.cache = cache;
  } else {
    ctx.cache = &own_cache.emplace(data, fit_config);
  }
  return ctx;
}

}  // namespace

double DefaultPruneConstant(PruneRule rule, int T, int p) {
  switch (rule) {
    case PruneRule::kSafe:
      // The slack absorbs optimizer tolerance in the fitted NLLs.
      return -0.5 * p * std::log(T / 4.0) - 1e-6;
    case PruneRule::kAggressive:
      return 0.5 * p * std::log(8 * std::numbers::pi / T);
  }
  throw InputError("unknown prune rule");
}

const char* PruneRuleName(PruneRule rule) {
  return rule == PruneRule::kSafe ? "safe" : "aggressive";
}

PruneRule ParsePruneRule(const std::string& name) {
  if (name == "safe") return PruneRule::kSafe;
  if (name == "aggressive") return PruneRule::kAggressive;
  throw InputError("unknown prune rule '" + name + "' (expected safe or aggressive)");
}

ResolvedDetectConfig ResolveDetectConfig(const DetectConfig& config,
                                         const ComparisonDataset& data,
                                         const MdlConfig& mdl_config) {
  const int T = data.T();
  const int n = data.n();
  const int d = data.d();
  ResolvedDetectConfig rc;
  rc.min_seg_len = config.min_seg_len.value_or(std::max(30, 2 * (n + d)));
  if (rc.min_seg_len < 1) {
    throw InputError("minimum segment length must be positive, got " +
                     std::to_string(rc.min_seg_len));
  }
  if (T < 2 * rc.min_seg_len) {
    throw InputError("T=" + std::to_string(T) +
                     " is less than twice the minimum segment length " +
                     std::to_string(rc.min_seg_len));
  }
  rc.gamma = config.gamma ? *config.gamma : mdl_config.Gamma(T);
  if (!(std::isfinite(rc.gamma) && rc.gamma > 0)) {
    throw InputError("gamma must be finite and positive, got " +
                     std::to_string(rc.gamma));
  }
  rc.prune_rule = config.prune_rule;
  rc.prune_constant = config.prune_constant.value_or(DefaultPruneConstant(
      config.prune_rule, T, mdl_config.ParamCount(n, d)));
  if (!std::isfinite(rc.prune_constant)) {
    throw InputError("prune constant must be finite");
  }
  rc.max_changepoints = config.max_changepoints.value_or(
      (T + rc.min_seg_len - 1) / rc.min_seg_len + 1);
  if (rc.max_changepoints < 0) {
    throw InputError("max changepoints must be non-negative");
  }
  rc.pruning_enabled = config.pruning_enabled;
  if (config.threads < 1) throw InputError("threads must be >= 1");
  rc.threads = config.threads;
  return rc;
}

Segmentation Detect(const ComparisonDataset& data, const DetectConfig& config,
                    const FitConfig& fit_config, const MdlConfig& mdl_config,
                    FitCache* cache) {
  std::optional<FitCache> own_cache;
  const SearchContext ctx =
      Prepare(data, config, fit_config, mdl_config, cache, own_cache);
  const ResolvedDetectConfig& rc = ctx.rc;
  const int T = data.T();
  const int L = rc.min_seg_len;
  const double gamma = rc.gamma;
  if (rc.max_changepoints < T / L - 1) {
    throw InputError(
        "max changepoints " + std::to_string(rc.max_changepoints) +
        " is binding for T=" + std::to_string(T) + " and L=" +
        std::to_string(L) + "; the pruned search cannot enforce it (use the "
        "brute-force search or a larger bound)");
  }

  std::vector<double> F(T + 1, -gamma);
  std::vector<int> last(T + 1, 0);
  // A candidate pruned at step t stays until t + L: before then t itself is
  // not yet an admissible last change point, so nothing dominates it.
  std::vector<int> expiry(T + 1, INT_MAX);
  std::vector<int> active{0};
  std::vector<SegmentSpan> spans;
  std::vector<FitRecord> records;
  std::vector<double> values;
  std::vector<int> pruning_stats;

  for (int t = L; t <= T; ++t) {
    if (t - L >= L) active.push_back(t - L);
    std::erase_if(active, [&](int tau) { return expiry[tau] <= t; });

    spans.clear();
    for (int tau : active) spans.push_back({tau + 1, t});
    ctx.cache->GetMany(spans, rc.threads, &records);

    values.resize(active.size());
    double best = kInf;
    int arg = -1;
    for (std::size_t k = 0; k < active.size(); ++k) {
      const int tau = active[k];
      values[k] = F[tau] +
                  SegmentCostFromNll(records[k].nll, t - tau, data.n(),
                                     data.d(), ctx.mdl) +
                  gamma;
      if (values[k] < best) {
        best = values[k];
        arg = tau;
      }
    }
    F[t] = best;
    last[t] = arg;
    pruning_stats.push_back(static_cast<int>(active.size()));

    if (rc.pruning_enabled && t >= 2 * L) {
      for (std::size_t k = 0; k < active.size(); ++k) {
        if (values[k] - gamma + rc.prune_constant > F[t] &&
            expiry[active[k]] == INT_MAX) {
          expiry[active[k]] = t + L;
        }
      }
    }
  }

  std::vector<int> taus;
  for (int s = last[T]; s > 0; s = last[s]) taus.push_back(s);
  std::reverse(taus.begin(), taus.end());

  Segmentation seg =
      BuildSegmentation(data, taus, F[T] + gamma, rc, ctx.mdl, *ctx.cache);
  seg.pruning_stats = std::move(pruning_stats);
  seg.f_values = std::move(F);
  return seg;
}

uint64_t CountSegmentations(int T, int min_seg_len, int max_changepoints) {
  const int L = min_seg_len;
  if (L < 1 || T < L) return 0;
  // ways[s]: number of ways to cut 1..s into the current number of segments.
  std::vector<uint64_t> ways(T + 1, 0);
  for (int s = L; s <= T; ++s) ways[s] = 1;
  uint64_t total = ways[T];
  for (int k = 2; k <= max_changepoints + 1 && k * L <= T; ++k) {
    std::vector<uint64_t> next(T + 1, 0);
    uint64_t prefix = 0;  // sum of ways[tau] for tau <= s - L
    for (int s = k * L; s <= T; ++s) {
      prefix = SaturatingAdd(prefix, ways[s - L]);
      next[s] = prefix;
    }
    ways = std::move(next);
    total = SaturatingAdd(total, ways[T]);
  }
  return total;
}

Segmentation BruteForceDetect(const ComparisonDataset& data,
                              const DetectConfig& config,
                              const FitConfig& fit_config,
                              const MdlConfig& mdl_config, FitCache* cache) {
  std::optional<FitCache> own_cache;
  const SearchContext ctx =
      Prepare(data, config, fit_config, mdl_config, cache, own_cache);
  const ResolvedDetectConfig& rc = ctx.rc;
  const int T = data.T();
  const int L = rc.min_seg_len;
  const double gamma = rc.gamma;

  const uint64_t count = CountSegmentations(T, L, rc.max_changepoints);
  if (count > config.brute_force_limit) {
    throw InputError("brute-force search would enumerate " +
                     std::to_string(count) + " segmentations (limit " +
                     std::to_string(config.brute_force_limit) +
                     "); use a smaller T or a larger minimum segment length");
  }

  // cost[s][j]: C(tau+1 .. s) for the j-th admissible tau (0, L, L+1, ...).
  auto tau_of = [L](int j) { return j == 0 ? 0 : L + j - 1; };
  std::vector<std::vector<double>> cost(T + 1);
  std::vector<SegmentSpan> spans;
  std::vector<FitRecord> records;
  for (int s = L; s <= T; ++s) {
    spans.clear();
    for (int j = 0; tau_of(j) <= s - L; ++j) spans.push_back({tau_of(j) + 1, s});
    ctx.cache->GetMany(spans, rc.threads, &records);
    for (std::size_t j = 0; j < spans.size(); ++j) {
      cost[s].push_back(SegmentCostFromNll(records[j].nll, spans[j].length(),
                                           data.n(), data.d(), ctx.mdl));
    }
  }

  const int max_segments = std::min(rc.max_changepoints + 1, T / L);
  // g[k][s]: best objective for 1..s in exactly k segments.
  std::vector<std::vector<double>> g(max_segments + 1,
                                     std::vector<double>(T + 1, kInf));
  std::vector<std::vector<int>> arg(max_segments + 1,
                                    std::vector<int>(T + 1, -1));
  for (int s = L; s <= T; ++s) {
    g[1][s] = cost[s][0] + gamma;
    arg[1][s] = 0;
  }
  for (int k = 2; k <= max_segments; ++k) {
    for (int s = k * L; s <= T; ++s) {
      for (int j = 1; tau_of(j) <= s - L; ++j) {
        const int tau = tau_of(j);
        if (g[k - 1][tau] == kInf) continue;
        const double v = g[k - 1][tau] + cost[s][j] + gamma;
        if (v < g[k][s]) {
          g[k][s] = v;
          arg[k][s] = tau;
        }
      }
    }
  }

  std::vector<double> f_values(T + 1, -gamma);
  for (int s = L; s <= T; ++s) {
    double best = kInf;
    for (int k = 1; k <= max_segments; ++k) best = std::min(best, g[k][s]);
    f_values[s] = best - gamma;
  }

  int best_k = 1;
  for (int k = 2; k <= max_segments; ++k) {
    if (g[k][T] < g[best_k][T]) best_k = k;
  }
  std::vector<int> taus;
  for (int k = best_k, s = T; k > 1; --k) {
    s = arg[k][s];
    taus.push_back(s);
  }
  std::reverse(taus.begin(), taus.end());

  Segmentation seg =
      BuildSegmentation(data, taus, g[best_k][T], rc, ctx.mdl, *ctx.cache);
  seg.f_values = std::move(f_values);
  return seg;
}

SegmentRanking RankScores(const SegmentSpan& span, const Eigen::VectorXd& theta,
                          const std::vector<int>& appearances) {
  const int n = static_cast<int>(theta.size());
  std::vector<int> present;
  std::vector<int> absent;
  for (int i = 0; i < n; ++i) {
    (appearances[i] > 0 ? present : absent).push_back(i);
  }
  std::stable_sort(present.begin(), present.end(), [&](int a, int b) {
    return theta[a] > theta[b];
  });

  SegmentRanking ranking;
  ranking.span = span;
  for (std::size_t k = 0; k < present.size(); ++k) {
    RankEntry e;
    e.item = present[k];
    e.score = theta[e.item];
    e.rank = static_cast<int>(k) + 1;
    const auto near = [&](std::size_t other) {
      return std::abs(theta[present[other]] - e.score) <= kTieTolerance;
    };
    e.tied = (k > 0 && near(k - 1)) || (k + 1 < present.size() && near(k + 1));
    ranking.entries.push_back(e);
  }
  for (int i : absent) {
    RankEntry e;
    e.item = i;
    e.score = theta[i];
    e.rank = 0;
    e.present = false;
    ranking.entries.push_back(e);
  }
  return ranking;
}

std::vector<SegmentRanking> RankSegments(const Segmentation& seg,
                                         const CovariateSet& covariates) {
  std::vector<SegmentRanking> out;
  out.reserve(seg.segments.size());
  for (const SegmentResult& result : seg.segments) {
    out.push_back(RankScores(result.fit.span,
                             result.fit.xi_hat.Scores(covariates),
                             result.appearances));
  }
  return out;
}

}  // namespace pscare
