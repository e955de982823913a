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

#ifndef CPGAME_BENCHMARK_HPP_
#define CPGAME_BENCHMARK_HPP_

// Centralized peak shaving, peak ratio and efficiency loss.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cpgame/game_core.hpp"

namespace cpgame {

// pi * max(S1, S2) + sum alpha x^2: the total system cost of a profile.
inline double SystemCost(const GameInstance& g, const ShiftProfile& x) {
  const double total = TotalShift(x);
  auto [s1, s2] = PeriodDemands(g.BaselineSum(1), g.BaselineSum(2), total);
  double quad = 0.0;
  for (int i = 0; i < g.size(); ++i) quad += g.agents[i].penalty * x[i] * x[i];
  return g.cp_price * std::max(s1, s2) + quad;
}

inline double PeakDemand(const GameInstance& g, const ShiftProfile& x) {
  auto [s1, s2] =
      PeriodDemands(g.BaselineSum(1), g.BaselineSum(2), TotalShift(x));
  return std::max(s1, s2);
}

// Minimizes SystemCost. Shifting stops at the critical points when they
// cannot close the gap; otherwise the gap b is split with x_i ~ 1/alpha_i.
inline ShiftProfile CentralizedSolve(const GameInstance& g) {
  Frame f(g);
  const GameInstance& c = f.game();
  const DerivedPoints p = DerivePoints(c);
  const int n = c.size();
  ShiftProfile x(n);
  if (p.system_balance > p.CriticalSum()) {
    x = p.critical;
  } else {
    double harmonic = 0.0;
    for (const Agent& a : c.agents) harmonic += 1.0 / a.penalty;
    for (int i = 0; i < n; ++i) {
      x[i] = p.system_balance / c.agents[i].penalty / harmonic;
    }
  }
  return f.Out(x);
}

// Direct numerical minimization of SystemCost, independent of the closed
// form. Up to three agents: nested grid with zooming. Larger instances:
// golden section on the total shift t with the inner problem
// min sum alpha x^2 s.t. sum x = t solved exactly.
inline ShiftProfile CentralizedOracle(const GameInstance& g,
                                      double grid_step = 0.0) {
  const int n = g.size();
  double r_max = 0.0;
  for (const Agent& a : g.agents) r_max = std::max(r_max, g.cp_price / (2.0 * a.penalty));
  const double half_width =
      std::max(r_max, std::abs(g.BaselineSum(2) - g.BaselineSum(1)) / 2.0) * 1.5;
  if (grid_step <= 0.0) grid_step = 1e-9 * std::max(1.0, half_width);

  if (n <= 3) {
    const int kPts = n == 3 ? 24 : (n == 2 ? 120 : 2000);
    ShiftProfile center(n, 0.0), best(n, 0.0), x(n);
    double width = half_width;
    double best_cost = SystemCost(g, best);
    while (width > grid_step) {
      const double h = 2.0 * width / kPts;
      std::vector<int> idx(n, 0);
      for (;;) {
        for (int i = 0; i < n; ++i) x[i] = center[i] - width + idx[i] * h;
        const double cost = SystemCost(g, x);
        if (cost < best_cost) {
          best_cost = cost;
          best = x;
        }
        int k = 0;
        while (k < n && ++idx[k] > kPts) idx[k++] = 0;
        if (k == n) break;
      }
      center = best;
      width = 2.0 * h;
    }
    return best;
  }

  double harmonic = 0.0;
  for (const Agent& a : g.agents) harmonic += 1.0 / a.penalty;
  auto split = [&](double t) {
    ShiftProfile x(n);
    for (int i = 0; i < n; ++i) x[i] = t / g.agents[i].penalty / harmonic;
    return x;
  };
  const double span = half_width * n;
  double lo = -span, hi = span;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
  double fa = SystemCost(g, split(a)), fb = SystemCost(g, split(b));
  while (hi - lo > grid_step) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - phi * (hi - lo);
      fa = SystemCost(g, split(a));
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + phi * (hi - lo);
      fb = SystemCost(g, split(b));
    }
  }
  return split(0.5 * (lo + hi));
}

inline double PeakRatio(const GameInstance& g, const ShiftProfile& game,
                        const ShiftProfile& centralized) {
  return PeakDemand(g, game) / PeakDemand(g, centralized);
}

inline double EfficiencyLoss(const GameInstance& g, const ShiftProfile& game,
                             const ShiftProfile& centralized) {
  return SystemCost(g, game) / SystemCost(g, centralized);
}

struct MarginalGapCheck {
  double lhs = 0.0;       // (game cost - centralized cost) (alpha_x + alpha_y)
  double rhs = 0.0;       // (alpha_x x - alpha_y y)^2
  double residual = 0.0;  // |lhs - rhs| / max(1, rhs)
};

// Two-agent balanced profiles only: the excess cost over the centralized
// optimum, scaled by alpha_x + alpha_y, equals the squared gap in marginal
// shifting costs.
inline MarginalGapCheck MarginalGapIdentity(const GameInstance& g,
                                            const ShiftProfile& game) {
  if (g.size() != 2) throw InvalidInput("marginal gap identity needs 2 agents");
  Frame f(g);
  const GameInstance& c = f.game();
  if (DerivePoints(c).system_balance > DerivePoints(c).CriticalSum()) {
    throw InvalidInput("marginal gap identity needs a balanced equilibrium");
  }
  const ShiftProfile x = f.In(game);
  const ShiftProfile xc = f.In(CentralizedSolve(g));
  const double ax = c.agents[0].penalty, ay = c.agents[1].penalty;
  MarginalGapCheck m;
  m.lhs = (SystemCost(c, x) - SystemCost(c, xc)) * (ax + ay);
  const double d = ax * x[0] - ay * x[1];
  m.rhs = d * d;
  m.residual = std::abs(m.lhs - m.rhs) / std::max(1.0, m.rhs);
  return m;
}

struct BenchmarkReport {
  ShiftProfile centralized_shifts;
  double centralized_cost = 0.0;
  double game_cost = 0.0;
  double peak_ratio = 1.0;
  double efficiency_loss = 1.0;
  std::vector<double> marginal_costs;  // alpha_i x_i at the game profile
  double marginal_gap = 0.0;           // max - min of marginal_costs
};

inline BenchmarkReport Benchmark(const GameInstance& g,
                                 const ShiftProfile& game) {
  BenchmarkReport r;
  r.centralized_shifts = CentralizedSolve(g);
  r.centralized_cost = SystemCost(g, r.centralized_shifts);
  r.game_cost = SystemCost(g, game);
  r.peak_ratio = PeakRatio(g, game, r.centralized_shifts);
  r.efficiency_loss = r.game_cost / r.centralized_cost;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < g.size(); ++i) {
    const double m = g.agents[i].penalty * game[i];
    r.marginal_costs.push_back(m);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  r.marginal_gap = hi - lo;
  return r;
}

}  // namespace cpgame

#endif  // CPGAME_BENCHMARK_HPP_
