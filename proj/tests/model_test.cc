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
#include "pscare/model.h"
#include "pscare/simulator.h"
#include "pscare/types.h"

namespace pscare {
namespace {

using testing::CentralDifference;
using testing::MakeDataset;

ParamVector RandomXi(int n, int d, Rng& rng, double scale = 1.0) {
  ParamVector xi = ParamVector::Zero(n, d);
  for (int i = 0; i < n; ++i) xi.alpha[i] = scale * rng.Gaussian();
  for (int j = 0; j < d; ++j) xi.beta[j] = scale * rng.Gaussian();
  return xi;
}

TEST_CASE("dataset validation rejects malformed input") {
  CHECK_THROWS_AS(CovariateSet(1), InputError);
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(3, 1);
  z(0, 0) = std::nan("");
  CHECK_THROWS_AS(CovariateSet{z}, InputError);
  // Self-comparison, index out of range, non-sequential t.
  CHECK_THROWS_AS(MakeDataset(3, {{0, 0, 1}}), InputError);
  CHECK_THROWS_AS(MakeDataset(3, {{0, 3, 1}}), InputError);
  std::vector<ComparisonEvent> ev = {{1, 0, 1, true}, {3, 1, 2, false}};
  CHECK_THROWS_AS(ComparisonDataset(CovariateSet(3), ev), InputError);
  const ComparisonDataset data = MakeDataset(3, {{0, 1, 1}, {1, 2, 0}});
  CHECK_THROWS_AS(ValidateSpan({2, 1}, data.T()), InputError);
  CHECK_THROWS_AS(ValidateSpan({1, 3}, data.T()), InputError);
  CHECK_NOTHROW(ValidateSpan({1, 2}, data.T()));
  CHECK(data.Prefix(1).T() == 1);
}

TEST_CASE("softplus and logistic are stable in both tails") {
  CHECK(Softplus(0) == doctest::Approx(std::log(2.0)));
  CHECK(Softplus(800) == doctest::Approx(800));
  CHECK(Softplus(-800) >= 0);
  CHECK(Logistic(0) == 0.5);
  CHECK(Logistic(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(std::isfinite(Logistic(-800)));
}

TEST_CASE("design vector is the difference of item rows") {
  const CovariateSet plain(3);
  const Eigen::VectorXd x = DesignVector({1, 0, 1, true}, plain);
  CHECK(x.size() == 3);
  CHECK(x[0] == 1);
  CHECK(x[1] == -1);
  CHECK(x[2] == 0);

  // n = 2 with d = 1 leaves Theta_n degenerate, so the same rows sit in a
  // four-item set.
  CHECK_THROWS_AS(CovariateSet{Eigen::MatrixXd::Ones(2, 1)}, InputError);
  Eigen::MatrixXd z(4, 1);
  z << 0.4, -0.1, 0.3, -0.6;
  const Eigen::VectorXd x2 = DesignVector({1, 0, 1, true}, CovariateSet(z));
  CHECK(x2[4] == doctest::Approx(0.5).epsilon(1e-15));

  const CovariateSet cov = GenCovariates(5, 2, 11);
  const Eigen::VectorXd x3 = DesignVector({1, 2, 0, true}, cov);
  for (int k = 0; k < 2; ++k) {
    CHECK(x3[5 + k] == cov.z()(2, k) - cov.z()(0, k));
  }
  CHECK_THROWS_AS(DesignVector({1, 0, 3, true}, plain), InputError);
}

TEST_CASE("win probability matches the two-exponential form") {
  const CovariateSet cov = GenCovariates(6, 2, 3);
  CHECK(WinProbability(ParamVector::Zero(6, 2), {1, 0, 4, true}, cov) == 0.5);
  Rng rng(17);
  for (int rep = 0; rep < 50; ++rep) {
    const ParamVector xi = RandomXi(6, 2, rng);
    const int i = static_cast<int>(rng.Below(6));
    const int j = (i + 1 + static_cast<int>(rng.Below(5))) % 6;
    const Eigen::VectorXd theta = xi.Scores(cov);
    const double direct =
        std::exp(theta[i]) / (std::exp(theta[i]) + std::exp(theta[j]));
    CHECK(std::abs(WinProbability(xi, {1, i, j, true}, cov) - direct) <= 1e-12);
  }
  ParamVector xi = ParamVector::Zero(2, 0);
  xi.alpha[0] = std::log(3.0);
  CHECK(WinProbability(xi, {1, 0, 1, true}, CovariateSet(2)) ==
        doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("segment NLL") {
  const SimOutput sim = GenDataset({.n = 5, .d = 2, .K = 0, .delta = 40});
  const ComparisonDataset& data = sim.dataset;
  CHECK(SegmentNll(ParamVector::Zero(5, 2), data, {3, 22}) ==
        doctest::Approx(20 * std::log(2.0)).epsilon(1e-14));

  ParamVector one = ParamVector::Zero(2, 0);
  one.alpha[0] = std::log(3.0);
  CHECK(SegmentNll(one, MakeDataset(2, {{0, 1, 1}}), {1, 1}) ==
        doctest::Approx(-std::log(0.75)).epsilon(1e-13));

  Rng rng(5);
  const ParamVector xi = RandomXi(5, 2, rng);
  double per_event = 0;
  for (int t = 11; t <= 30; ++t) {
    const double p = WinProbability(xi, data.at(t), data.covariates());
    per_event -= data.at(t).winner_is_i ? std::log(p) : std::log(1 - p);
  }
  CHECK(SegmentNll(xi, data, {11, 30}) ==
        doctest::Approx(per_event).epsilon(1e-12));
}

TEST_CASE("segment NLL gradient") {
  SUBCASE("symmetric cases") {
    const ComparisonDataset balanced =
        MakeDataset(3, {{0, 1, 1}, {0, 1, 0}, {1, 2, 1}, {1, 2, 0}, {0, 2, 1},
                        {0, 2, 0}});
    CHECK(SegmentNllGradient(ParamVector::Zero(3, 0), balanced, {1, 6})
              .cwiseAbs()
              .maxCoeff() == 0);
    const CovariateSet cov = GenCovariates(4, 1, 2);
    const ComparisonDataset single(cov, {{1, 2, 0, true}});
    const Eigen::VectorXd g =
        SegmentNllGradient(ParamVector::Zero(4, 1), single, {1, 1});
    const Eigen::VectorXd x = DesignVector(single.at(1), cov);
    CHECK((g + 0.5 * x).cwiseAbs().maxCoeff() <= 1e-15);
  }

  SUBCASE("central differences") {
    for (auto [n, d] : {std::pair{5, 0}, {8, 3}, {20, 5}}) {
      const SimOutput sim =
          GenDataset({.n = n, .d = d, .K = 0, .delta = 300, .seed = 9});
      Rng rng(static_cast<uint64_t>(n * 100 + d));
      for (int rep = 0; rep < 5; ++rep) {
        const ParamVector xi = RandomXi(n, d, rng, 0.5);
        const int start = 1 + static_cast<int>(rng.Below(100));
        const SegmentSpan span{start, start + 50 + static_cast<int>(rng.Below(149))};
        const Eigen::VectorXd g = SegmentNllGradient(xi, sim.dataset, span);
        const Eigen::VectorXd fd = CentralDifference(
            [&](const Eigen::VectorXd& v) {
              return SegmentNll(ParamVector::FromStacked(v, n), sim.dataset,
                                span);
            },
            xi.Stacked());
        const double rel = (g - fd).cwiseAbs().maxCoeff() /
                           std::max(1.0, fd.cwiseAbs().maxCoeff());
        CHECK(rel <= 1e-6);
      }
    }
  }
}

TEST_CASE("projection onto Theta_n") {
  const CovariateSet cov = GenCovariates(6, 2, 4);
  const ThetaProjector projector(cov);
  Rng rng(8);
  Eigen::VectorXd alpha(6);
  for (int rep = 0; rep < 10; ++rep) {
    for (int i = 0; i < 6; ++i) alpha[i] = rng.Gaussian();
    const Eigen::VectorXd p = projector.ProjectAlpha(alpha);
    CHECK((p - testing::OracleProjectAlpha(cov, alpha)).cwiseAbs().maxCoeff() <=
          1e-12);
    CHECK(projector.ConstraintResidual(p) <= 1e-12);
    CHECK((projector.ProjectAlpha(p) - p).cwiseAbs().maxCoeff() <= 1e-12);
    const Eigen::VectorXd c = Eigen::Vector3d(rng.Gaussian(), rng.Gaussian(),
                                              rng.Gaussian());
    CHECK(projector.ProjectAlpha(cov.design() * c).cwiseAbs().maxCoeff() <=
          1e-12);
  }
  const ParamVector via_raw =
      ProjectToTheta(Eigen::VectorXd::Ones(8), cov);
  CHECK(via_raw.beta == Eigen::VectorXd::Ones(2));
  CHECK(via_raw.alpha.cwiseAbs().maxCoeff() <= 1e-12);

  SUBCASE("rank-deficient covariates name the dependent column") {
    Eigen::MatrixXd z(4, 2);
    z << 1, 2, -1, -2, 0.5, 1, -0.5, -1;
    try {
      ThetaProjector bad{CovariateSet(z)};
      FAIL("expected an identifiability error");
    } catch (const IdentifiabilityError& e) {
      CHECK(std::string(e.what()).find("c") != std::string::npos);
    }
    Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(4, 1, 3.0);
    CHECK_THROWS_AS(ThetaProjector{CovariateSet(constant)},
                    IdentifiabilityError);
  }
}

TEST_CASE("span summary agrees with event-wise NLL and gradient") {
  const SimOutput sim =
      GenDataset({.n = 7, .d = 2, .K = 0, .delta = 250, .seed = 21});
  const SegmentSpan span{13, 211};
  const SpanSummary summary(sim.dataset, span);
  CHECK(summary.length() == span.length());
  Rng rng(3);
  for (int rep = 0; rep < 5; ++rep) {
    const ParamVector xi = RandomXi(7, 2, rng);
    const Eigen::VectorXd theta = xi.Scores(sim.dataset.covariates());
    Eigen::VectorXd g;
    const double f = summary.NllAndGradient(theta, &g);
    const double oracle = testing::OracleNllTheta(sim.dataset, span, theta);
    CHECK(f == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(summary.Nll(theta) == doctest::Approx(oracle).epsilon(1e-12));
    const Eigen::VectorXd fd = CentralDifference(
        [&](const Eigen::VectorXd& v) {
          return testing::OracleNllTheta(sim.dataset, span, v);
        },
        theta);
    CHECK((g - fd).cwiseAbs().maxCoeff() <= 1e-6);
  }
  int total = 0;
  for (int a : summary.appearances()) total += a;
  CHECK(total == 2 * span.length());
}

TEST_CASE("win graph components") {
  // 0 beats 1 and 2; 1 and 2 split; 3 never plays.
  const ComparisonDataset data =
      MakeDataset(4, {{0, 1, 1}, {2, 0, 0}, {1, 2, 1}, {1, 2, 0}});
  const SpanSummary summary(data, {1, 4});
  const WinGraphComponents g = AnalyzeWinGraph(summary, 4);
  CHECK_FALSE(g.mle_exists);
  CHECK(g.component[1] == g.component[2]);
  CHECK(g.component[0] != g.component[1]);
  CHECK(g.level[g.component[0]] > g.level[g.component[1]]);

  const ComparisonDataset cycle =
      MakeDataset(3, {{0, 1, 1}, {1, 2, 1}, {2, 0, 1}});
  const WinGraphComponents c = AnalyzeWinGraph(SpanSummary(cycle, {1, 3}), 3);
  CHECK(c.mle_exists);
  CHECK(c.count == 1);
}

TEST_CASE("assumption diagnostics") {
  std::vector<std::array<int, 3>> events;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      events.push_back({i, j, 1});
      events.push_back({i, j, 0});
    }
  }
  const ComparisonDataset full = MakeDataset(4, events);
  const DiagnosticsReport r = CheckAssumptions(full, {1, full.T()});
  CHECK(r.connected);
  CHECK(r.all_items_present);
  CHECK(r.mle_exists);
  CHECK(r.l_min == 2);

  const ComparisonDataset pair = MakeDataset(4, {{0, 1, 1}, {1, 0, 1}});
  const DiagnosticsReport p = CheckAssumptions(pair, {1, 2});
  CHECK_FALSE(p.connected);
  CHECK_FALSE(p.all_items_present);
  CHECK(p.items_present == 2);
}

TEST_CASE("simulated covariates satisfy the incoherence bound") {
  int ok = 0;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    const CovariateSet cov = GenCovariates(10, 5, seed);
    const double bound = kDefaultIncoherenceConstant * std::sqrt(6.0 / 10.0);
    if (IncoherenceStatistic(cov) <= bound) ++ok;
  }
  CHECK(ok >= 19);
}

}  // namespace
}  // namespace pscare
