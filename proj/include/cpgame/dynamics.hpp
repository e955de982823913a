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

#ifndef CPGAME_DYNAMICS_HPP_
#define CPGAME_DYNAMICS_HPP_

// Switched gradient play: every agent ascends the payoff of the currently
// active CP period, with its own backtracking step size.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "cpgame/game_core.hpp"

namespace cpgame {

struct SolverConfig {
  double beta1 = 0.3;     // Armijo slope
  double beta2 = 0.5;     // backtracking shrink factor
  double tau0 = 0.0;      // initial step; <= 0 means 1 / (4 max alpha)
  double eps_grad = 1e-6;   // times max(1, pi)
  double eps_gap = 1e-8;    // times max(1, pi * S)
  double eps_step = 1e-12;  // times 1 + max |x_i|
  int window = 10;
  long max_iters = 100000;
  int max_backtracks = 60;
  // Record every k-th iterate; 0 keeps only the first and last.
  long record_every = 1;
  // Re-check the composed step until no agent fails. When false a single
  // sweep gates failing agents to zero.
  bool iterate_recheck = true;

  void Validate() const {
    if (!(beta1 > 0.0 && beta1 <= 0.5)) {
      throw InvalidInput("beta1 must lie in (0, 0.5]");
    }
    if (!(beta2 > 0.0 && beta2 < 1.0)) {
      throw InvalidInput("beta2 must lie in (0, 1)");
    }
    if (!(eps_grad > 0.0) || !(eps_gap > 0.0) || !(eps_step > 0.0)) {
      throw InvalidInput("tolerances must be positive");
    }
    if (window < 1 || max_iters < 1 || max_backtracks < 1 || record_every < 0) {
      throw InvalidInput("window, max_iters and max_backtracks must be >= 1");
    }
  }
};

enum class ConvergenceMode { kNone, kGradientZero, kSwitchingSurface };
enum class SolveStatus {
  kConverged,
  kNonConvergence,
  kStalled,
  kStartOutsideStabilitySet
};

inline std::string ToString(ConvergenceMode m) {
  switch (m) {
    case ConvergenceMode::kGradientZero:
      return "gradient_zero";
    case ConvergenceMode::kSwitchingSurface:
      return "switching_surface";
    case ConvergenceMode::kNone:
      break;
  }
  return "none";
}

inline std::string ToString(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConverged:
      return "converged";
    case SolveStatus::kNonConvergence:
      return "non_convergence";
    case SolveStatus::kStalled:
      return "stalled";
    case SolveStatus::kStartOutsideStabilitySet:
      return "start_outside_stability_set";
  }
  return "unknown";
}

struct TrajectoryPoint {
  long iter = 0;
  int period = 1;
  ShiftProfile x;
  double s1 = 0.0, s2 = 0.0;
  double v1 = 0.0, v2 = 0.0;
  double payoff_gap = 0.0;  // |sum f_{i,1} - sum f_{i,2}|
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  ShiftProfile final_shifts;
  long iterations = 0;
  bool converged = false;
  ConvergenceMode mode = ConvergenceMode::kNone;
  SolveStatus status = SolveStatus::kNonConvergence;
  bool left_stability_set = false;
  double final_gradient_norm = 0.0;  // sup norm, active period
  double final_gap = 0.0;
};

// Gradient of each agent's payoff in `period`, in the instance's labels.
inline std::vector<double> Gradient(const GameInstance& g,
                                    const ShiftProfile& x, int period) {
  std::vector<double> out(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const double ax2 = 2.0 * g.agents[i].penalty * x[i];
    out[i] = period == 1 ? -(g.cp_price + ax2) : g.cp_price - ax2;
  }
  return out;
}

// (V1, V2) = (sum alpha x^2 + pi sum x + pi S_b1, sum alpha x^2 - pi sum x
// + pi S_b2), i.e. total cost if period 1 (resp. 2) were the CP period.
inline std::pair<double, double> LyapunovValues(const GameInstance& g,
                                                const ShiftProfile& x) {
  double quad = 0.0;
  for (int i = 0; i < g.size(); ++i) quad += g.agents[i].penalty * x[i] * x[i];
  const double pi_sum = g.cp_price * TotalShift(x);
  return {quad + pi_sum + g.cp_price * g.BaselineSum(1),
          quad - pi_sum + g.cp_price * g.BaselineSum(2)};
}

inline bool StabilitySetContains(const GameInstance& g,
                                 const ShiftProfile& x) {
  auto [v1, v2] = LyapunovValues(g, x);
  return v1 > 0.0 && v2 > 0.0;
}

namespace internal {

inline TrajectoryPoint MakePoint(const Frame& f, long iter,
                                 const ShiftProfile& xc) {
  const GameInstance& c = f.game();
  TrajectoryPoint pt;
  pt.iter = iter;
  const double total = TotalShift(xc);
  auto [s1, s2] = PeriodDemands(c.BaselineSum(1), c.BaselineSum(2), total);
  auto [v1, v2] = LyapunovValues(c, xc);
  pt.period = f.OutPeriod(Indicator(s1, s2) ? 1 : 2);
  pt.payoff_gap = c.cp_price * std::abs(s1 - s2);
  std::tie(pt.s1, pt.s2) = f.OutDemands(s1, s2);
  std::tie(pt.v1, pt.v2) = f.OutDemands(v1, v2);
  pt.x = f.Out(xc);
  return pt;
}

}  // namespace internal

// Runs the dynamics from `start` (caller orientation; empty means zeros).
inline Trajectory Solve(const GameInstance& g, ShiftProfile start = {},
                        const SolverConfig& cfg = SolverConfig()) {
  cfg.Validate();
  Frame f(g);
  const GameInstance& c = f.game();
  const int n = c.size();
  if (start.empty()) start.assign(n, 0.0);
  ShiftProfile x = f.In(std::move(start));

  const double pi = c.cp_price;
  const double sb1 = c.BaselineSum(1), sb2 = c.BaselineSum(2);
  const double tau0 = cfg.tau0 > 0.0 ? cfg.tau0 : 1.0 / (4.0 * c.MaxPenalty());
  const double gap_tol = cfg.eps_gap * std::max(1.0, pi * 0.5 * (sb1 + sb2));
  const double grad_tol = cfg.eps_grad * std::max(1.0, pi);

  Trajectory t;
  t.points.push_back(internal::MakePoint(f, 0, x));
  if (!StabilitySetContains(c, x)) {
    t.status = SolveStatus::kStartOutsideStabilitySet;
    t.final_shifts = f.Out(x);
    return t;
  }

  std::vector<double> grad(n), tau(n), cand(n);
  std::vector<int> backtracks(n);
  int quiet = 0, frozen = 0, period2_run = 0;
  long h = 0;
  for (;; ++h) {
    const double total = TotalShift(x);
    const int p = ActivePeriod(sb1, sb2, total);
    period2_run = p == 2 ? period2_run + 1 : 0;
    double grad_norm = 0.0;
    for (int i = 0; i < n; ++i) {
      const double ax2 = 2.0 * c.agents[i].penalty * x[i];
      grad[i] = p == 1 ? -(pi + ax2) : pi - ax2;
      grad_norm = std::max(grad_norm, std::abs(grad[i]));
    }
    t.final_gradient_norm = grad_norm;
    t.final_gap = pi * std::abs((sb1 + total) - (sb2 - total));
    if (h > 0 && cfg.record_every > 0 && h % cfg.record_every == 0) {
      t.points.push_back(internal::MakePoint(f, h, x));
    }

    if (quiet >= cfg.window) {
      if (period2_run >= cfg.window && grad_norm < grad_tol) {
        t.mode = ConvergenceMode::kGradientZero;
      } else if (t.final_gap < gap_tol) {
        t.mode = ConvergenceMode::kSwitchingSurface;
      }
      if (t.mode != ConvergenceMode::kNone) {
        t.converged = true;
        t.status = SolveStatus::kConverged;
        break;
      }
      if (frozen >= cfg.window) {
        t.status = SolveStatus::kStalled;
        break;
      }
    }
    if (h >= cfg.max_iters) {
      t.status = SolveStatus::kNonConvergence;
      break;
    }

    // Unilateral backtracking: agent i alone takes the candidate step and
    // is judged in the period that candidate lands in.
    for (int i = 0; i < n; ++i) {
      const Agent& a = c.agents[i];
      const double base = AgentCost(a, x[i], p, pi);
      const double g2 = grad[i] * grad[i];
      double step = tau0;
      tau[i] = 0.0;
      backtracks[i] = 0;
      for (; backtracks[i] < cfg.max_backtracks; ++backtracks[i]) {
        const double xi = x[i] + step * grad[i];
        const int pp = ActivePeriod(sb1, sb2, total + step * grad[i]);
        if (AgentCost(a, xi, pp, pi) < base - cfg.beta1 * step * g2) {
          tau[i] = step;
          break;
        }
        step *= cfg.beta2;
      }
    }

    // Joint re-check against the period of the composed step.
    for (bool changed = true; changed;) {
      changed = false;
      for (int i = 0; i < n; ++i) cand[i] = x[i] + tau[i] * grad[i];
      const int pp = ActivePeriod(sb1, sb2, TotalShift(cand));
      for (int i = 0; i < n; ++i) {
        if (tau[i] <= 0.0) continue;
        const Agent& a = c.agents[i];
        if (AgentCost(a, cand[i], pp, pi) <
            AgentCost(a, x[i], p, pi) - cfg.beta1 * tau[i] * grad[i] * grad[i]) {
          continue;
        }
        if (!cfg.iterate_recheck) {
          tau[i] = 0.0;
          continue;
        }
        ++backtracks[i];
        tau[i] = backtracks[i] < cfg.max_backtracks ? tau[i] * cfg.beta2 : 0.0;
        changed = true;
      }
      if (!cfg.iterate_recheck) {
        for (int i = 0; i < n; ++i) cand[i] = x[i] + tau[i] * grad[i];
        break;
      }
    }

    double step_max = 0.0, x_max = 0.0;
    for (int i = 0; i < n; ++i) {
      step_max = std::max(step_max, std::abs(cand[i] - x[i]));
      x[i] = cand[i];
      x_max = std::max(x_max, std::abs(x[i]));
    }
    quiet = step_max < cfg.eps_step * (1.0 + x_max) ? quiet + 1 : 0;
    frozen = step_max == 0.0 ? frozen + 1 : 0;
    if (!StabilitySetContains(c, x)) t.left_stability_set = true;
  }

  t.iterations = h;
  if (t.points.back().iter != h) t.points.push_back(internal::MakePoint(f, h, x));
  t.final_shifts = f.Out(x);
  return t;
}

}  // namespace cpgame

#endif  // CPGAME_DYNAMICS_HPP_
