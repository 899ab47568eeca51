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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.h"
#include "pscare/estimator.h"
#include "pscare/simulator.h"

namespace pscare {
namespace {

using testing::MakeDataset;

TEST_CASE("two-item fit recovers the empirical log-odds") {
  const ComparisonDataset data =
      MakeDataset(2, {{0, 1, 1}, {0, 1, 1}, {1, 0, 0}, {0, 1, 0}});
  const SegmentFit fit = FitSegment(data, {1, 4});
  CHECK(fit.converged);
  CHECK(std::abs(fit.xi_hat.alpha[0] - fit.xi_hat.alpha[1] - std::log(3.0)) <=
        1e-4);
  CHECK(std::abs(fit.xi_hat.alpha.sum()) <= 1e-12);
}

TEST_CASE("balanced data fits to zero") {
  std::vector<std::array<int, 3>> events;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      events.push_back({i, j, 1});
      events.push_back({j, i, 1});
    }
  }
  const ComparisonDataset data = MakeDataset(4, events);
  const FitConfig config;
  const SegmentFit fit = FitSegment(data, {1, data.T()}, config);
  CHECK(fit.converged);
  CHECK(fit.xi_hat.alpha.cwiseAbs().maxCoeff() <= config.grad_tol);
  CHECK(fit.nll == doctest::Approx(data.T() * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("fit matches the quasi-Newton oracle") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const SimOutput sim =
        GenDataset({.n = 5, .d = 2, .K = 0, .delta = 400, .seed = seed});
    const SegmentSpan span{1, 400};
    const SegmentFit fit = FitSegment(sim.dataset, span);
    const testing::OracleFit oracle = testing::OracleMle(sim.dataset, span);
    CAPTURE(seed);
    CHECK(fit.converged);
    CHECK_FALSE(fit.separated);
    CHECK(oracle.grad_norm <= 1e-8);
    CHECK(fit.nll <= oracle.nll + 1e-6);
    CHECK(std::abs(fit.nll - oracle.nll) <= 1e-6);
    const ThetaProjector projector(sim.dataset.covariates());
    CHECK(projector.ConstraintResidual(fit.xi_hat.alpha) <= 1e-8);
    CHECK((fit.xi_hat.beta - oracle.beta).cwiseAbs().maxCoeff() <= 1e-4);
    CHECK((fit.xi_hat.alpha - oracle.alpha).cwiseAbs().maxCoeff() <= 1e-4);
  }
}

TEST_CASE("fixed step rule reaches the same optimum") {
  const SimOutput sim =
      GenDataset({.n = 6, .d = 1, .K = 0, .delta = 300, .seed = 4});
  FitConfig config;
  config.step_rule = StepRule::kFixed;
  config.fixed_step = 0.02;
  config.max_iters = 50000;
  const SegmentFit fixed = FitSegment(sim.dataset, {1, 300}, config);
  const SegmentFit bt = FitSegment(sim.dataset, {1, 300});
  CHECK(fixed.converged);
  CHECK(std::abs(fixed.nll - bt.nll) <= 1e-6);
}

TEST_CASE("objective trace is non-increasing") {
  const SimOutput sim =
      GenDataset({.n = 8, .d = 3, .K = 0, .delta = 500, .seed = 2});
  FitConfig config;
  config.record_objective = true;
  const SegmentFit fit = FitSegment(sim.dataset, {20, 480}, config);
  REQUIRE(fit.objective_trace.size() >= 2);
  for (std::size_t k = 1; k < fit.objective_trace.size(); ++k) {
    CHECK(fit.objective_trace[k] <=
          fit.objective_trace[k - 1] +
              1e-12 * std::abs(fit.objective_trace[k - 1]));
  }
}

TEST_CASE("fit is invariant to duplication and event order") {
  const SimOutput sim =
      GenDataset({.n = 5, .d = 1, .K = 0, .delta = 200, .seed = 13});
  std::vector<ComparisonEvent> doubled;
  std::vector<ComparisonEvent> reversed;
  for (int t = 1; t <= 200; ++t) {
    ComparisonEvent e = sim.dataset.at(t);
    for (int copy = 0; copy < 2; ++copy) {
      e.t = static_cast<int>(doubled.size()) + 1;
      doubled.push_back(e);
    }
    ComparisonEvent r = sim.dataset.at(201 - t);
    r.t = t;
    reversed.push_back(r);
  }
  const ComparisonDataset twice(sim.dataset.covariates(), doubled);
  const ComparisonDataset backwards(sim.dataset.covariates(), reversed);
  const SegmentFit base = FitSegment(sim.dataset, {1, 200});
  const SegmentFit dup = FitSegment(twice, {1, 400});
  const SegmentFit rev = FitSegment(backwards, {1, 200});
  CHECK(dup.nll == doctest::Approx(2 * base.nll).epsilon(1e-10));
  CHECK((dup.xi_hat.Stacked() - base.xi_hat.Stacked()).cwiseAbs().maxCoeff() <=
        1e-5);
  CHECK(rev.nll == doctest::Approx(base.nll).epsilon(1e-12));
}

TEST_CASE("separated spans report the supremum likelihood") {
  // Item 0 beats everyone; 1 and 2 split their games.
  const ComparisonDataset data = MakeDataset(
      3, {{0, 1, 1}, {2, 0, 0}, {0, 2, 1}, {1, 2, 1}, {2, 1, 1}});
  const SegmentFit fit = FitSegment(data, {1, 5});
  CHECK(fit.separated);
  CHECK_FALSE(fit.diagnostic.empty());
  CHECK(fit.xi_hat.AllFinite());
  CHECK(fit.nll == doctest::Approx(2 * std::log(2.0)).epsilon(1e-9));

  // A single game also has no maximizer.
  const SegmentFit one = FitSegment(data, {1, 1});
  CHECK(one.separated);
  CHECK(one.nll <= 1e-12);
}

TEST_CASE("items absent from a span do not break the fit") {
  const ComparisonDataset data =
      MakeDataset(4, {{0, 1, 1}, {1, 0, 1}, {0, 1, 1}, {1, 0, 1}});
  const SegmentFit fit = FitSegment(data, {1, 4});
  CHECK(fit.converged);
  CHECK(fit.nll == doctest::Approx(4 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("ridge pulls the fit towards zero") {
  const SimOutput sim =
      GenDataset({.n = 6, .d = 2, .K = 0, .delta = 300, .seed = 6});
  FitConfig config;
  config.ridge = 5.0;
  const SegmentFit ridge = FitSegment(sim.dataset, {1, 300}, config);
  const SegmentFit plain = FitSegment(sim.dataset, {1, 300});
  CHECK(ridge.converged);
  CHECK(ridge.nll >= plain.nll);
  CHECK(ridge.xi_hat.Stacked().norm() < plain.xi_hat.Stacked().norm());
}

TEST_CASE("fit config validation") {
  FitConfig bad;
  bad.grad_tol = 0;
  CHECK_THROWS_AS(bad.Validate(), InputError);
  bad = {};
  bad.shrink = 1.0;
  CHECK_THROWS_AS(bad.Validate(), InputError);
  bad = {};
  bad.ridge = -1;
  CHECK_THROWS_AS(bad.Validate(), InputError);
  const ComparisonDataset data = MakeDataset(2, {{0, 1, 1}});
  CHECK_THROWS_AS(FitSegment(data, {1, 2}), InputError);
}

TEST_CASE("fit cache returns the direct fit and fills each span once") {
  const SimOutput sim =
      GenDataset({.n = 6, .d = 2, .K = 1, .delta = 150, .seed = 3});
  FitCache cache(sim.dataset, {});
  std::vector<SegmentSpan> spans;
  for (int start = 1; start <= 100; start += 11) {
    for (int end = start + 30; end <= 300; end += 37) spans.push_back({start, end});
  }
  std::vector<FitRecord> threaded;
  cache.GetMany(spans, 4, &threaded);
  CHECK(cache.fits_computed() == spans.size());
  std::vector<FitRecord> again;
  cache.GetMany(spans, 2, &again);
  CHECK(cache.fits_computed() == spans.size());
  REQUIRE(threaded.size() == spans.size());
  for (std::size_t k = 0; k < spans.size(); ++k) {
    const SegmentFit direct = FitSegment(sim.dataset, spans[k]);
    CHECK(threaded[k].nll == direct.nll);
    CHECK(again[k].nll == direct.nll);
    CHECK(cache.Get(spans[k]).nll == direct.nll);
  }
  CHECK(cache.size() == spans.size());
}

}  // namespace
}  // namespace pscare
