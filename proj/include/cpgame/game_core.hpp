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

#ifndef CPGAME_GAME_CORE_HPP_
#define CPGAME_GAME_CORE_HPP_

// Two-period coincident-peak (CP) shaving game: agents, instances, derived
// points, capability and game-type classification, payoffs.
//
// Sign convention: a shift x_i > 0 moves demand from period 2 into period 1.
// Period 1 is the CP period whenever S1 >= S2.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace cpgame {

// Absolute tolerance used when comparing balance points with critical points.
inline constexpr double kClassifyTol = 1e-9;

// Raised for malformed or out-of-domain input. Front ends map it to exit 2.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Agent {
  std::string id;
  double demand_p1 = 0.0;  // X_{i,1}
  double demand_p2 = 0.0;  // X_{i,2}
  double penalty = 1.0;    // alpha_i
};

struct GameInstance {
  std::vector<Agent> agents;
  double cp_price = 1.0;  // pi
  // True when the period labels were exchanged by Canonicalize().
  bool swapped = false;

  int size() const { return static_cast<int>(agents.size()); }

  double BaselineSum(int period) const {
    double s = 0.0;
    for (const Agent& a : agents) s += period == 1 ? a.demand_p1 : a.demand_p2;
    return s;
  }

  double MaxPenalty() const {
    double m = 0.0;
    for (const Agent& a : agents) m = std::max(m, a.penalty);
    return m;
  }
};

using ShiftProfile = std::vector<double>;

enum class Capability { kCapable, kUpperNonCapable, kLowerNonCapable };
enum class GameType { kConcave, kQuasiconcave, kNonConcave };

inline std::string ToString(GameType t) {
  switch (t) {
    case GameType::kConcave:
      return "concave";
    case GameType::kQuasiconcave:
      return "quasiconcave";
    case GameType::kNonConcave:
      return "non_concave";
  }
  return "unknown";
}

inline std::string ToString(Capability c) {
  switch (c) {
    case Capability::kCapable:
      return "capable";
    case Capability::kUpperNonCapable:
      return "upper_non_capable";
    case Capability::kLowerNonCapable:
      return "lower_non_capable";
  }
  return "unknown";
}

struct DerivedPoints {
  std::vector<double> critical;  // r_i = pi / (2 alpha_i)
  std::vector<double> balance;   // b_i = (X_{i,2} - X_{i,1}) / 2
  double system_balance = 0.0;   // b
  double system_average = 0.0;   // S

  double CriticalSum() const {
    return std::accumulate(critical.begin(), critical.end(), 0.0);
  }
};

inline void Validate(const GameInstance& g) {
  if (g.size() < 2) throw InvalidInput("instance needs at least 2 agents");
  if (!(g.cp_price > 0.0) || !std::isfinite(g.cp_price)) {
    throw InvalidInput("cp_price must be positive");
  }
  for (const Agent& a : g.agents) {
    if (!(a.penalty > 0.0) || !std::isfinite(a.penalty)) {
      throw InvalidInput("agent '" + a.id + "': penalty must be positive");
    }
    if (!(a.demand_p1 >= 0.0) || !(a.demand_p2 >= 0.0) ||
        !std::isfinite(a.demand_p1) || !std::isfinite(a.demand_p2)) {
      throw InvalidInput("agent '" + a.id + "': demands must be non-negative");
    }
  }
}

// Relabels periods so that S_b1 <= S_b2. Idempotent; the swapped flag is
// sticky so results can always be mapped back.
inline GameInstance Canonicalize(GameInstance g) {
  Validate(g);
  if (g.BaselineSum(1) > g.BaselineSum(2)) {
    for (Agent& a : g.agents) std::swap(a.demand_p1, a.demand_p2);
    g.swapped = !g.swapped;
  }
  return g;
}

// Shifts move demand 2 -> 1, so relabeling periods negates them.
inline ShiftProfile ToOriginal(const GameInstance& canonical, ShiftProfile x) {
  if (canonical.swapped) {
    for (double& v : x) v = -v;
  }
  return x;
}

inline ShiftProfile ToCanonical(const GameInstance& canonical, ShiftProfile x) {
  return ToOriginal(canonical, std::move(x));
}

inline int ToOriginalPeriod(const GameInstance& canonical, int period) {
  return canonical.swapped ? 3 - period : period;
}

// Canonical view of a caller's instance. Solvers work inside the frame and
// map shifts, periods and period demands back out through it.
class Frame {
 public:
  explicit Frame(const GameInstance& g)
      : original_(g),
        game_(Canonicalize(g)),
        flipped_(game_.swapped != g.swapped) {}

  const GameInstance& original() const { return original_; }
  const GameInstance& game() const { return game_; }
  bool flipped() const { return flipped_; }

  ShiftProfile In(ShiftProfile x) const {
    if (static_cast<int>(x.size()) != game_.size()) {
      throw InvalidInput("shift profile length does not match agent count");
    }
    return Flip(std::move(x));
  }
  ShiftProfile Out(ShiftProfile x) const { return Flip(std::move(x)); }
  int OutPeriod(int period) const { return flipped_ ? 3 - period : period; }
  std::pair<double, double> OutDemands(double s1, double s2) const {
    return flipped_ ? std::make_pair(s2, s1) : std::make_pair(s1, s2);
  }

 private:
  ShiftProfile Flip(ShiftProfile x) const {
    if (flipped_) {
      for (double& v : x) v = -v;
    }
    return x;
  }

  GameInstance original_;
  GameInstance game_;
  bool flipped_;
};

inline DerivedPoints DerivePoints(const GameInstance& g) {
  DerivedPoints p;
  const int n = g.size();
  p.critical.resize(n);
  p.balance.resize(n);
  for (int i = 0; i < n; ++i) {
    const Agent& a = g.agents[i];
    p.critical[i] = g.cp_price / (2.0 * a.penalty);
    p.balance[i] = (a.demand_p2 - a.demand_p1) / 2.0;
  }
  const double sb1 = g.BaselineSum(1);
  const double sb2 = g.BaselineSum(2);
  p.system_balance = (sb2 - sb1) / 2.0;
  p.system_average = (sb2 + sb1) / 2.0;
  return p;
}

inline Capability ClassifyAgent(double critical, double balance) {
  if (balance > critical + kClassifyTol) return Capability::kUpperNonCapable;
  if (balance < -critical - kClassifyTol) return Capability::kLowerNonCapable;
  return Capability::kCapable;
}

inline Capability ClassifyAgent(const DerivedPoints& p, int i) {
  return ClassifyAgent(p.critical[i], p.balance[i]);
}

inline std::vector<Capability> ClassifyAgents(const DerivedPoints& p) {
  std::vector<Capability> out(p.critical.size());
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = ClassifyAgent(p.critical[i], p.balance[i]);
  }
  return out;
}

// Expects a canonical instance (b >= 0).
inline GameType ClassifyGame(const DerivedPoints& p) {
  if (p.system_balance > p.CriticalSum() + kClassifyTol) {
    return GameType::kConcave;
  }
  for (size_t i = 0; i < p.critical.size(); ++i) {
    if (ClassifyAgent(p.critical[i], p.balance[i]) != Capability::kCapable) {
      return GameType::kNonConcave;
    }
  }
  return GameType::kQuasiconcave;
}

inline GameType ClassifyGame(const GameInstance& g) {
  return ClassifyGame(DerivePoints(Canonicalize(g)));
}

inline int Indicator(double s1, double s2) { return s1 >= s2 ? 1 : 0; }

// Period demands for a given total shift. Every caller that needs S1/S2 or
// the active period goes through here so that ties are decided identically.
inline std::pair<double, double> PeriodDemands(double sb1, double sb2,
                                               double total_shift) {
  return {sb1 + total_shift, sb2 - total_shift};
}

inline int ActivePeriod(double sb1, double sb2, double total_shift) {
  auto [s1, s2] = PeriodDemands(sb1, sb2, total_shift);
  return Indicator(s1, s2) ? 1 : 2;
}

struct SystemDemand {
  double s1 = 0.0;
  double s2 = 0.0;
  // Agents whose own post-shift demand is negative in some period.
  std::vector<int> negative_agents;
};

inline double TotalShift(const ShiftProfile& x) {
  return std::accumulate(x.begin(), x.end(), 0.0);
}

inline SystemDemand ComputeSystemDemand(const GameInstance& g,
                                        const ShiftProfile& x) {
  if (static_cast<int>(x.size()) != g.size()) {
    throw InvalidInput("shift profile length does not match agent count");
  }
  SystemDemand d;
  std::tie(d.s1, d.s2) =
      PeriodDemands(g.BaselineSum(1), g.BaselineSum(2), TotalShift(x));
  for (int i = 0; i < g.size(); ++i) {
    const Agent& a = g.agents[i];
    if (a.demand_p1 + x[i] < 0.0 || a.demand_p2 - x[i] < 0.0) {
      d.negative_agents.push_back(i);
    }
  }
  return d;
}

// Cost (negated payoff) of agent a when `period` is the CP period.
inline double AgentCost(const Agent& a, double x, int period, double price) {
  const double shifting = a.penalty * x * x;
  return period == 1 ? price * (a.demand_p1 + x) + shifting
                     : price * (a.demand_p2 - x) + shifting;
}

struct PeriodPayoffs {
  double p1 = 0.0;  // f_{i,1}
  double p2 = 0.0;  // f_{i,2}
};

inline PeriodPayoffs AgentPeriodPayoffs(const Agent& a, double x,
                                        double price) {
  return {-AgentCost(a, x, 1, price), -AgentCost(a, x, 2, price)};
}

inline double AgentPayoff(const Agent& a, double x, double s1, double s2,
                          double price) {
  return -AgentCost(a, x, Indicator(s1, s2) ? 1 : 2, price);
}

}  // namespace cpgame

#endif  // CPGAME_GAME_CORE_HPP_
