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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.h"
#include "pscare/mdl.h"
#include "pscare/simulator.h"

namespace pscare {
namespace {

using testing::MakeDataset;

TEST_CASE("balanced two-item span") {
  const ComparisonDataset data =
      MakeDataset(2, {{0, 1, 1}, {0, 1, 0}, {1, 0, 1}, {1, 0, 0}});
  const double cost = SegmentCost(data, {1, 4}, {}, {});
  const double expected =
      0.5 * std::log(4.0) + 4 * std::log(2.0) * std::numbers::log2e;
  CHECK(cost == doctest::Approx(expected).epsilon(1e-12));

  MdlConfig natural;
  natural.nll_scale = NllScale::kNatural;
  CHECK(SegmentCost(data, {1, 4}, {}, natural) ==
        doctest::Approx(0.5 * std::log(4.0) + 4 * std::log(2.0))
            .epsilon(1e-12));
  CHECK_THROWS_AS(SegmentCost(data, {1, 1}, {}, {}, 2), InputError);
}

TEST_CASE("segment cost against the oracle optimizer") {
  const SimOutput sim =
      GenDataset({.n = 4, .d = 1, .K = 0, .delta = 60, .seed = 5});
  const testing::OracleFit oracle = testing::OracleMle(sim.dataset, {1, 60});
  const double expected =
      (4 + 1 - 1) / 2.0 * std::log(60.0) + std::numbers::log2e * oracle.nll;
  CHECK(std::abs(SegmentCost(sim.dataset, {1, 60}, {}, {}) - expected) <=
        1e-5);

  MdlConfig constrained;
  constrained.param_count_rule = ParamCountRule::kConstrained;
  const double expected_c =
      (4 - 1) / 2.0 * std::log(60.0) + std::numbers::log2e * oracle.nll;
  CHECK(std::abs(SegmentCost(sim.dataset, {1, 60}, {}, constrained) -
                 expected_c) <= 1e-5);
}

TEST_CASE("parameter counts, scales and penalty") {
  MdlConfig config;
  CHECK(config.ParamCount(10, 5) == 14);
  CHECK(config.NllFactor() == std::numbers::log2e);
  CHECK(config.Gamma(800) == std::log(800.0));
  config.param_count_rule = ParamCountRule::kConstrained;
  config.nll_scale = NllScale::kNatural;
  CHECK(config.ParamCount(10, 5) == 9);
  CHECK(config.NllFactor() == 1.0);
  config.penalty_gamma = 2.5;
  CHECK(config.Gamma(800) == 2.5);
  config.penalty_gamma = 0.0;
  CHECK_THROWS_AS(config.Validate(), InputError);
  config.penalty_gamma = std::nan("");
  CHECK_THROWS_AS(config.Validate(), InputError);
}

TEST_CASE("total MDL with no change points") {
  const SimOutput sim =
      GenDataset({.n = 6, .d = 2, .K = 0, .delta = 240, .seed = 2});
  const ComparisonDataset& data = sim.dataset;
  for (NllScale scale : {NllScale::kLog2e, NllScale::kNatural}) {
    MdlConfig config;
    config.nll_scale = scale;
    const MdlBreakdown mdl = TotalMdl(data, {}, {}, config);
    const double expected =
        std::log(1.0) + std::log(240.0) + SegmentCost(data, {1, 240}, {}, config);
    CHECK(mdl.total == expected);
    CHECK(mdl.cl_K == 0);
    CHECK(mdl.cl_tau == std::log(240.0));
    CHECK(mdl.cl_params == doctest::Approx(7 / 2.0 * std::log(240.0)));
  }
}

TEST_CASE("residual code length is additive over identical halves") {
  const SimOutput sim =
      GenDataset({.n = 5, .d = 1, .K = 0, .delta = 150, .seed = 8});
  std::vector<ComparisonEvent> events = sim.dataset.events();
  for (int t = 1; t <= 150; ++t) {
    ComparisonEvent e = sim.dataset.at(t);
    e.t = 150 + t;
    events.push_back(e);
  }
  const ComparisonDataset twice(sim.dataset.covariates(), events);
  const MdlBreakdown split = TotalMdl(twice, {150}, {}, {});
  const double half =
      std::numbers::log2e * FitSegment(sim.dataset, {1, 150}).nll;
  CHECK(std::abs(split.cl_resid - 2 * half) <= 1e-6);
  CHECK(split.cl_K == std::log(2.0));
  CHECK(split.cl_tau == doctest::Approx(2 * std::log(300.0)));
}

TEST_CASE("change-point spacing errors list the offending points") {
  const SimOutput sim =
      GenDataset({.n = 4, .d = 0, .K = 0, .delta = 100, .seed = 1});
  try {
    TotalMdl(sim.dataset, {40, 47}, {}, {}, 10);
    FAIL("expected an input error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("47") != std::string::npos);
  }
  CHECK_THROWS_AS(TotalMdl(sim.dataset, {95}, {}, {}, 10), InputError);
  CHECK_THROWS_AS(TotalMdl(sim.dataset, {50, 30}, {}, {}, 10), InputError);
  CHECK_THROWS_AS(TotalMdl(sim.dataset, {100}, {}, {}, 1), InputError);
  const std::vector<SegmentSpan> segs =
      SegmentsFromChangepoints({30, 60}, 100, 10);
  REQUIRE(segs.size() == 3);
  CHECK(segs[0] == SegmentSpan{1, 30});
  CHECK(segs[1] == SegmentSpan{31, 60});
  CHECK(segs[2] == SegmentSpan{61, 100});
}

TEST_CASE("refining a segmentation never increases the residual length") {
  const SimOutput sim =
      GenDataset({.n = 6, .d = 1, .K = 2, .delta = 120, .seed = 4});
  FitCache cache(sim.dataset, {});
  Rng rng(99);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<int> cps;
    for (int tau = 20 + static_cast<int>(rng.Below(40)); tau <= 340;
         tau += 20 + static_cast<int>(rng.Below(80))) {
      cps.push_back(tau);
    }
    std::vector<int> finer = cps;
    const int extra = 10 + static_cast<int>(rng.Below(340));
    if (std::find(finer.begin(), finer.end(), extra) != finer.end()) continue;
    finer.push_back(extra);
    std::sort(finer.begin(), finer.end());
    const double coarse = TotalMdl(sim.dataset, cps, cache, {}).cl_resid;
    const double fine = TotalMdl(sim.dataset, finer, cache, {}).cl_resid;
    CHECK(fine <= coarse + 1e-8);
  }
}

TEST_CASE("cached and direct totals agree") {
  const SimOutput sim =
      GenDataset({.n = 5, .d = 2, .K = 1, .delta = 200, .seed = 6});
  FitCache cache(sim.dataset, {});
  const MdlBreakdown a = TotalMdl(sim.dataset, {200}, {}, {});
  const MdlBreakdown b = TotalMdl(sim.dataset, {200}, cache, {});
  CHECK(a.total == b.total);
  const std::vector<SegmentSpan> segs = SegmentsFromChangepoints({200}, 400);
  const MdlBreakdown c = MdlFromSegments(
      segs, {cache.Get(segs[0]).nll, cache.Get(segs[1]).nll}, 5, 2, 400, {});
  CHECK(c.total == a.total);
}

// Setting 1 with the default criterion: the true segmentation should be
// cheaper than no segmentation at all.
TEST_CASE("true change points beat the single segment on simulated data" *
          doctest::test_suite("simulated")) {
  int wins = 0;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    const SimOutput sim =
        GenDataset({.n = 10, .d = 0, .K = 3, .delta = 400, .seed = seed});
    FitCache cache(sim.dataset, {});
    const double at_true =
        TotalMdl(sim.dataset, sim.true_changepoints, cache, {}).total;
    const double at_zero = TotalMdl(sim.dataset, {}, cache, {}).total;
    MESSAGE("seed " << seed << ": true " << at_true << ", K=0 " << at_zero);
    if (at_true < at_zero) ++wins;
  }
  MESSAGE("true segmentation cheaper on " << wins << " of 20 seeds");
  CHECK(wins >= 19);
}

}  // namespace
}  // namespace pscare
