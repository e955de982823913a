// Copyright 2026 The cpgame Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cpgame/dynamics.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "cpgame/closed_form.hpp"
#include "cpgame/experiments.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace cpgame {
namespace {

using testing::MaxAbsDiff;
using testing::RandomInstance;
using testing::StratifiedTwoAgent;
using testing::U;

constexpr double kEps = std::numeric_limits<double>::epsilon();

TEST(GradientTest, MatchesFiniteDifferences) {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 1000; ++k) {
    const GameInstance g = RandomInstance(rng, 2 + k % 5, 15.0, 0.01, 0.5,
                                          U(rng, 0.5, 5.0));
    ShiftProfile x(g.size());
    for (double& v : x) v = U(rng, -10, 10);
    for (int period : {1, 2}) {
      const std::vector<double> grad = Gradient(g, x, period);
      for (int i = 0; i < g.size(); ++i) {
        const Agent& a = g.agents[i];
        const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
        const double fd = (-AgentCost(a, x[i] + h, period, g.cp_price) +
                           AgentCost(a, x[i] - h, period, g.cp_price)) /
                          (2.0 * h);
        EXPECT_NEAR(grad[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST(LyapunovTest, EqualsPeriodTotalCost) {
  const GameInstance g = SixAgentInstance();
  const ShiftProfile x = {0.5, -1, 2, 0, 0.25, -3};
  auto [v1, v2] = LyapunovValues(g, x);
  double c1 = 0.0, c2 = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    c1 += AgentCost(g.agents[i], x[i], 1, g.cp_price);
    c2 += AgentCost(g.agents[i], x[i], 2, g.cp_price);
  }
  EXPECT_NEAR(v1, c1, 1e-12);
  EXPECT_NEAR(v2, c2, 1e-12);
}

TEST(SolveTest, PublishedTwoAgentCases) {
  struct Case {
    double ax, ay;
    double x, y;
    ConvergenceMode mode;
  };
  for (const Case& c : {Case{0.1, 0.2, 3.5, -1.5, ConvergenceMode::kSwitchingSurface},
                        Case{0.1, 0.5, 3.0, -1.0, ConvergenceMode::kSwitchingSurface},
                        Case{0.6, 0.5, 5.0 / 6.0, 1.0, ConvergenceMode::kGradientZero}}) {
    const Trajectory t = Solve(TwoAgentCase(c.ax, c.ay));
    EXPECT_TRUE(t.converged);
    EXPECT_EQ(t.status, SolveStatus::kConverged);
    EXPECT_EQ(t.mode, c.mode);
    EXPECT_NEAR(t.final_shifts[0], c.x, 1e-5);
    EXPECT_NEAR(t.final_shifts[1], c.y, 1e-5);
  }
}

TEST(SolveTest, MatchesClosedFormOnTwoAgents) {
  for (const GameInstance& g : StratifiedTwoAgent(31, 100)) {
    const Trajectory t = Solve(g);
    ASSERT_TRUE(t.converged) << ToString(t.status);
    EXPECT_LE(MaxAbsDiff(t.final_shifts, ClosedFormNe(g).shifts), 1e-5);
  }
}

TEST(SolveTest, SixAgentHybridPoint) {
  const GameInstance g = SixAgentInstance();
  const Trajectory t = Solve(g);
  ASSERT_TRUE(t.converged);
  EXPECT_EQ(t.mode, ConvergenceMode::kSwitchingSurface);
  double sum = 0.0;
  for (double v : t.final_shifts) sum += v;
  EXPECT_NEAR(sum, 2.5, 1e-6);
  // Agent 3 sits below its floor and stays pinned there.
  EXPECT_NEAR(t.final_shifts[2], -1.25, 1e-6);
  for (int i = 0; i < g.size(); ++i) {
    EXPECT_LE(std::abs(t.final_shifts[i]), 1.0 / (2.0 * g.agents[i].penalty) + 1e-9);
  }
  EXPECT_TRUE(VerifyNe(g, t.final_shifts, 0.0, 1e-5).passes_same_period);
}

TEST(SolveTest, MirroredInputGivesMirroredOutput) {
  GameInstance g = TwoAgentCase(0.1, 0.5);
  for (Agent& a : g.agents) std::swap(a.demand_p1, a.demand_p2);
  const Trajectory t = Solve(g);
  ASSERT_TRUE(t.converged);
  EXPECT_NEAR(t.final_shifts[0], -3.0, 1e-5);
  EXPECT_NEAR(t.final_shifts[1], 1.0, 1e-5);
  EXPECT_NEAR(t.points.back().s1, t.points.back().s2, 1e-6);
  EXPECT_EQ(t.points.front().period, 1);
  EXPECT_GT(t.points.front().s1, t.points.front().s2);
}

// Within a run of constant CP period, V_p of that period must drop by at
// least the Armijo margin beta1 |dx|^2 / tau0 per move. Moves whose margin
// is below double resolution of V_p can only be checked for non-increase.
TEST(SolveTest, LyapunovDecreasesWithinPeriodSegments) {
  std::vector<GameInstance> insts = StratifiedTwoAgent(41, 40);
  std::mt19937_64 rng(43);
  for (int k = 0; k < 120; ++k) insts.push_back(RandomInstance(rng, 3 + k % 12));
  long strict_checks = 0;
  for (const GameInstance& g : insts) {
    const SolverConfig cfg;
    const Trajectory t = Solve(g, {}, cfg);
    const double tau0 = 1.0 / (4.0 * g.MaxPenalty());
    for (size_t j = 1; j < t.points.size(); ++j) {
      const TrajectoryPoint& a = t.points[j - 1];
      const TrajectoryPoint& b = t.points[j];
      if (a.period != b.period) continue;
      double dx2 = 0.0;
      for (size_t i = 0; i < a.x.size(); ++i) dx2 += (b.x[i] - a.x[i]) * (b.x[i] - a.x[i]);
      if (dx2 == 0.0) continue;
      const double va = a.period == 1 ? a.v1 : a.v2;
      const double vb = b.period == 1 ? b.v1 : b.v2;
      const double margin = cfg.beta1 * dx2 / tau0;
      const double resolution = 8.0 * kEps * std::abs(va);
      if (margin > resolution) {
        ++strict_checks;
        EXPECT_LT(vb, va) << "iter " << b.iter;
      } else {
        EXPECT_LE(vb, va + resolution) << "iter " << b.iter;
      }
    }
  }
  EXPECT_GT(strict_checks, 1000);
}

TEST(SolveTest, StaysInStabilitySet) {
  std::mt19937_64 rng(47);
  for (int k = 0; k < 200; ++k) {
    const GameInstance g = RandomInstance(rng, 2 + k % 10);
    ShiftProfile start(g.size());
    for (double& v : start) v = U(rng, -3, 3);
    if (!StabilitySetContains(Canonicalize(g), Frame(g).In(start))) continue;
    const Trajectory t = Solve(g, start);
    EXPECT_FALSE(t.left_stability_set);
    for (const TrajectoryPoint& p : t.points) {
      EXPECT_GT(p.v1, 0.0);
      EXPECT_GT(p.v2, 0.0);
    }
  }
}

TEST(SolveTest, StartOutsideStabilitySet) {
  // S_b1 = 0, so V1 < 0 at (-r1, -r2).
  const GameInstance g = MakeInstance(1.0, {{0, 10, 0.1}, {0, 3, 0.2}});
  ASSERT_FALSE(StabilitySetContains(g, {-5.0, -2.5}));
  const Trajectory t = Solve(g, {-5.0, -2.5});
  EXPECT_EQ(t.status, SolveStatus::kStartOutsideStabilitySet);
  EXPECT_FALSE(t.converged);
  EXPECT_EQ(t.points.size(), 1u);
}

TEST(SolveTest, ReportsNonConvergence) {
  SolverConfig cfg;
  cfg.max_iters = 3;
  const Trajectory t = Solve(TwoAgentCase(0.1, 0.2), {}, cfg);
  EXPECT_EQ(t.status, SolveStatus::kNonConvergence);
  EXPECT_FALSE(t.converged);
  EXPECT_EQ(t.iterations, 3);
}

TEST(SolveTest, RecordEvery) {
  SolverConfig cfg;
  cfg.record_every = 0;
  const Trajectory sparse = Solve(TwoAgentCase(0.1, 0.2), {}, cfg);
  ASSERT_EQ(sparse.points.size(), 2u);
  EXPECT_EQ(sparse.points.front().iter, 0);
  EXPECT_EQ(sparse.points.back().iter, sparse.iterations);
  const Trajectory dense = Solve(TwoAgentCase(0.1, 0.2));
  EXPECT_EQ(static_cast<long>(dense.points.size()), dense.iterations + 1);
  EXPECT_EQ(dense.final_shifts, sparse.final_shifts);
}

TEST(SolveTest, SingleSweepRecheck) {
  // Without the iterated re-check, a gated agent never retries at a smaller
  // step within the iteration; runs that do converge still land on the
  // same point.
  int converged = 0, stuck = 0;
  for (const GameInstance& g : StratifiedTwoAgent(53, 50)) {
    SolverConfig cfg;
    cfg.iterate_recheck = false;
    const Trajectory single = Solve(g, {}, cfg);
    const Trajectory full = Solve(g);
    ASSERT_TRUE(full.converged);
    if (single.converged) {
      ++converged;
      EXPECT_LE(MaxAbsDiff(single.final_shifts, full.final_shifts), 1e-5);
    } else {
      ++stuck;
    }
  }
  EXPECT_GT(converged, 0);
  EXPECT_GT(stuck, 0);
}

TEST(SolverConfigTest, Validation) {
  SolverConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.beta1 = 1.0;
  EXPECT_THROW(c.Validate(), InvalidInput);
  c = SolverConfig();
  c.beta2 = 0.0;
  EXPECT_THROW(c.Validate(), InvalidInput);
  c = SolverConfig();
  c.window = 0;
  EXPECT_THROW(c.Validate(), InvalidInput);
}

}  // namespace
}  // namespace cpgame
