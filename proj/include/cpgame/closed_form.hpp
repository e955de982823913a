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

#ifndef CPGAME_CLOSED_FORM_HPP_
#define CPGAME_CLOSED_FORM_HPP_

// Analytic Nash equilibria of the CP shaving game and a unilateral-deviation
// oracle for checking candidate profiles.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpgame/game_core.hpp"

namespace cpgame {

// The non-concave multi-agent rule could not place the aggregate target
// inside its members' capability bounds.
class OutsideHybridConditions : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Evaluation of a shift profile. Shifts and period demands are in the
// caller's orientation; costs are taken with the CP tie resolved toward the
// lower-baseline period.
struct ProfileEvaluation {
  double s1 = 0.0;
  double s2 = 0.0;
  int cp_period = 1;
  std::vector<double> per_agent_cost;
  double total_cost = 0.0;
  bool balanced = false;
  std::vector<int> negative_agents;
};

inline bool IsBalanced(double s1, double s2) {
  return std::abs(s1 - s2) <= 1e-9 * std::max({1.0, std::abs(s1), std::abs(s2)});
}

inline ProfileEvaluation EvaluateProfile(const GameInstance& g,
                                         const ShiftProfile& x) {
  Frame f(g);
  const GameInstance& c = f.game();
  const ShiftProfile xc = f.In(x);
  ProfileEvaluation e;
  SystemDemand d = ComputeSystemDemand(c, xc);
  const int period = Indicator(d.s1, d.s2) ? 1 : 2;
  e.per_agent_cost.resize(c.size());
  for (int i = 0; i < c.size(); ++i) {
    e.per_agent_cost[i] = AgentCost(c.agents[i], xc[i], period, c.cp_price);
    e.total_cost += e.per_agent_cost[i];
  }
  e.balanced = IsBalanced(d.s1, d.s2);
  std::tie(e.s1, e.s2) = f.OutDemands(d.s1, d.s2);
  e.cp_period = f.OutPeriod(period);
  e.negative_agents = d.negative_agents;
  return e;
}

// Non-concave multi-agent equilibria are only pinned down for one agent set;
// the other set is determined in aggregate.
struct HybridShifts {
  std::vector<int> determined;             // agent indices
  std::vector<double> determined_shifts;   // parallel to `determined`
  std::vector<int> aggregate_set;          // agent indices
  double aggregate_target = 0.0;           // required sum over aggregate_set
  std::vector<double> representative;      // parallel to `aggregate_set`
  std::vector<double> lower_bounds;        // parallel to `aggregate_set`
  std::vector<double> upper_bounds;        // parallel to `aggregate_set`
  bool pinned_cp_set = false;  // true when the b_i >= 0 set is pinned
};

struct EquilibriumResult {
  GameType game_type = GameType::kQuasiconcave;
  ShiftProfile shifts;
  std::optional<HybridShifts> hybrid;
  ProfileEvaluation evaluation;
};

namespace internal {

inline EquilibriumResult Finish(const Frame& f, GameType type,
                                const ShiftProfile& canonical_shifts,
                                std::optional<HybridShifts> hybrid) {
  EquilibriumResult r;
  r.game_type = type;
  r.shifts = f.Out(canonical_shifts);
  if (hybrid && f.flipped()) {
    for (double& v : hybrid->determined_shifts) v = -v;
    hybrid->aggregate_target = -hybrid->aggregate_target;
    for (double& v : hybrid->representative) v = -v;
    for (size_t k = 0; k < hybrid->lower_bounds.size(); ++k) {
      const double lo = hybrid->lower_bounds[k];
      hybrid->lower_bounds[k] = -hybrid->upper_bounds[k];
      hybrid->upper_bounds[k] = -lo;
    }
  }
  r.hybrid = std::move(hybrid);
  r.evaluation = EvaluateProfile(f.original(), r.shifts);
  return r;
}

}  // namespace internal

// min sum alpha_i x_i^2  s.t.  sum x_i = target, lo_i <= x_i <= hi_i.
// Stationarity gives x_i = clamp(lambda / alpha_i, lo_i, hi_i); lambda is
// found by bisection on the monotone sum.
inline std::vector<double> WaterFill(const std::vector<double>& alpha,
                                     const std::vector<double>& lo,
                                     const std::vector<double>& hi,
                                     double target) {
  const size_t n = alpha.size();
  double sum_lo = 0.0, sum_hi = 0.0;
  double lam_lo = std::numeric_limits<double>::infinity();
  double lam_hi = -lam_lo;
  for (size_t i = 0; i < n; ++i) {
    if (lo[i] > hi[i]) throw OutsideHybridConditions("empty bound interval");
    sum_lo += lo[i];
    sum_hi += hi[i];
    lam_lo = std::min(lam_lo, alpha[i] * lo[i]);
    lam_hi = std::max(lam_hi, alpha[i] * hi[i]);
  }
  const double slack = 1e-9 * std::max({1.0, std::abs(sum_lo), std::abs(sum_hi)});
  if (n == 0 || target < sum_lo - slack || target > sum_hi + slack) {
    throw OutsideHybridConditions("aggregate target outside member bounds");
  }
  auto at = [&](double lam, std::vector<double>* x) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) {
      (*x)[i] = std::clamp(lam / alpha[i], lo[i], hi[i]);
      s += (*x)[i];
    }
    return s;
  };
  std::vector<double> x(n);
  for (int it = 0; it < 200 && lam_lo < lam_hi; ++it) {
    const double mid = 0.5 * (lam_lo + lam_hi);
    if (mid <= lam_lo || mid >= lam_hi) break;
    if (at(mid, &x) < target) {
      lam_lo = mid;
    } else {
      lam_hi = mid;
    }
  }
  at(0.5 * (lam_lo + lam_hi), &x);
  return x;
}

// Two agents. "Agent x" is the one with the larger balance point (first in
// input order on ties).
inline EquilibriumResult TwoAgentNe(const GameInstance& g) {
  if (g.size() != 2) throw InvalidInput("two_agent_ne needs exactly 2 agents");
  Frame f(g);
  const DerivedPoints p = DerivePoints(f.game());
  const GameType type = ClassifyGame(p);
  const double b = p.system_balance;
  ShiftProfile s(2);
  if (type == GameType::kConcave) {
    s = p.critical;
  } else if (type == GameType::kQuasiconcave) {
    s = p.balance;
  } else {
    const int ix = p.balance[0] >= p.balance[1] ? 0 : 1;
    const int iy = 1 - ix;
    const double rx = p.critical[ix], ry = p.critical[iy];
    const double bx = p.balance[ix], by = p.balance[iy];
    if (bx > rx + kClassifyTol) {
      // When y is also non-capable from below, y's floor binds first.
      if (b - rx > -ry) {
        s[ix] = rx;
        s[iy] = b - rx;
      } else {
        s[ix] = b + ry;
        s[iy] = -ry;
      }
    } else if (by < -ry - kClassifyTol) {
      s[ix] = b + ry;
      s[iy] = -ry;
    } else {
      s[ix] = b - ry;
      s[iy] = ry;
    }
  }
  return internal::Finish(f, type, s, std::nullopt);
}

inline EquilibriumResult MultiAgentNe(const GameInstance& g) {
  Frame f(g);
  const GameInstance& c = f.game();
  const DerivedPoints p = DerivePoints(c);
  const GameType type = ClassifyGame(p);
  const int n = c.size();
  if (type == GameType::kConcave) {
    return internal::Finish(f, type, p.critical, std::nullopt);
  }
  if (type == GameType::kQuasiconcave) {
    return internal::Finish(f, type, p.balance, std::nullopt);
  }

  const double b = p.system_balance;
  std::vector<int> cp, ncp;
  for (int i = 0; i < n; ++i) (p.balance[i] >= 0.0 ? cp : ncp).push_back(i);

  HybridShifts h;
  ShiftProfile s(n, 0.0);
  auto pin = [&](int i, double v) {
    h.determined.push_back(i);
    h.determined_shifts.push_back(v);
    s[i] = v;
  };
  auto member = [&](int i, double lo, double hi) {
    h.aggregate_set.push_back(i);
    h.lower_bounds.push_back(lo);
    h.upper_bounds.push_back(hi);
  };

  double pinned_sum = 0.0;
  if (ncp.empty()) {
    // Everyone peaks in period 2; only agents above their critical point
    // are pinned and the capable ones close the gap.
    h.pinned_cp_set = true;
    for (int i : cp) {
      if (ClassifyAgent(p, i) == Capability::kUpperNonCapable) {
        pin(i, p.critical[i]);
        pinned_sum += p.critical[i];
      } else {
        member(i, -p.critical[i], p.critical[i]);
      }
    }
  } else {
    double cp_limit = 0.0, ncp_limit = 0.0;
    for (int i : cp) cp_limit += std::min(p.critical[i], p.balance[i]);
    for (int i : ncp) ncp_limit += std::max(-p.critical[i], p.balance[i]);
    double ncp_cap = 0.0;
    for (int i : ncp) ncp_cap += p.critical[i];
    // The set that saturates first is pinned. If even the b_i < 0 set at
    // its critical points cannot close the remainder, it is pinned there
    // and the b_i >= 0 set continues past its balance points.
    if (cp_limit + ncp_cap < b) {
      h.pinned_cp_set = false;
      for (int i : ncp) pin(i, p.critical[i]);
      for (int i : cp) {
        member(i, std::min(p.critical[i], p.balance[i]), p.critical[i]);
      }
      pinned_sum = ncp_cap;
    } else if (cp_limit + ncp_limit <= b) {
      h.pinned_cp_set = true;
      for (int i : cp) pin(i, std::min(p.critical[i], p.balance[i]));
      for (int i : ncp) {
        member(i, std::max(-p.critical[i], p.balance[i]), p.critical[i]);
      }
      pinned_sum = cp_limit;
    } else {
      h.pinned_cp_set = false;
      for (int i : ncp) pin(i, std::max(-p.critical[i], p.balance[i]));
      for (int i : cp) {
        member(i, -p.critical[i], std::min(p.critical[i], p.balance[i]));
      }
      pinned_sum = ncp_limit;
    }
  }
  h.aggregate_target = b - pinned_sum;

  std::vector<double> alpha;
  for (int i : h.aggregate_set) alpha.push_back(c.agents[i].penalty);
  h.representative =
      WaterFill(alpha, h.lower_bounds, h.upper_bounds, h.aggregate_target);
  for (size_t k = 0; k < h.aggregate_set.size(); ++k) {
    s[h.aggregate_set[k]] = h.representative[k];
  }
  return internal::Finish(f, type, s, std::move(h));
}

// Dispatches to the two-agent case table or the multi-agent rules.
inline EquilibriumResult ClosedFormNe(const GameInstance& g) {
  return g.size() == 2 ? TwoAgentNe(g) : MultiAgentNe(g);
}

struct NeVerification {
  std::vector<double> improvement;       // best unilateral cost reduction
  std::vector<double> best_deviation;    // caller orientation
  std::vector<double> improvement_same_period;
  double max_improvement = 0.0;
  double max_improvement_same_period = 0.0;
  double tolerance = 0.0;
  bool passes = false;
  bool passes_same_period = false;
};

// Unilateral deviations over a grid on [-2 r_max, 2 r_max] plus the analytic
// candidates (+-r_i, b_i and the switching point with its two one-sided
// neighbours). `same_period` figures only count deviations that leave the CP
// period unchanged.
inline NeVerification VerifyNe(const GameInstance& g, const ShiftProfile& x,
                               double grid_step = 0.0, double eps = 1e-6) {
  Frame f(g);
  const GameInstance& c = f.game();
  const ShiftProfile xc = f.In(x);
  const DerivedPoints p = DerivePoints(c);
  const int n = c.size();
  const double sb1 = c.BaselineSum(1), sb2 = c.BaselineSum(2);
  double r_max = 0.0;
  for (double r : p.critical) r_max = std::max(r_max, r);
  if (grid_step <= 0.0) grid_step = 1e-3 * r_max;
  const long steps = static_cast<long>(std::ceil(4.0 * r_max / grid_step));

  const double total = TotalShift(xc);
  const int period = ActivePeriod(sb1, sb2, total);

  NeVerification v;
  v.tolerance = eps;
  v.improvement.assign(n, 0.0);
  v.improvement_same_period.assign(n, 0.0);
  v.best_deviation = xc;
  for (int i = 0; i < n; ++i) {
    const Agent& a = c.agents[i];
    const double others = total - xc[i];
    const double current = AgentCost(a, xc[i], period, c.cp_price);
    auto probe = [&](double dev) {
      const int pp = ActivePeriod(sb1, sb2, others + dev);
      const double gain = current - AgentCost(a, dev, pp, c.cp_price);
      if (gain > v.improvement[i]) {
        v.improvement[i] = gain;
        v.best_deviation[i] = dev;
      }
      if (pp == period) {
        v.improvement_same_period[i] =
            std::max(v.improvement_same_period[i], gain);
      }
    };
    for (long k = 0; k <= steps; ++k) probe(-2.0 * r_max + k * grid_step);
    const double sw = p.system_balance - others;
    const double delta = 1e-9 * std::max(1.0, std::abs(sw));
    for (double dev : {p.critical[i], -p.critical[i], p.balance[i], sw,
                       sw - delta, sw + delta, std::nextafter(sw, -1e300),
                       std::nextafter(sw, 1e300)}) {
      probe(dev);
    }
    v.max_improvement = std::max(v.max_improvement, v.improvement[i]);
    v.max_improvement_same_period =
        std::max(v.max_improvement_same_period, v.improvement_same_period[i]);
  }
  v.best_deviation = f.Out(v.best_deviation);
  v.passes = v.max_improvement <= eps;
  v.passes_same_period = v.max_improvement_same_period <= eps;
  return v;
}

}  // namespace cpgame

#endif  // CPGAME_CLOSED_FORM_HPP_
