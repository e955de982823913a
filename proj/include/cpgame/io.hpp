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

#ifndef CPGAME_IO_HPP_
#define CPGAME_IO_HPP_

// JSON and CSV formats used by the command line tool.

#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "cpgame/benchmark.hpp"
#include "cpgame/closed_form.hpp"
#include "cpgame/dynamics.hpp"
#include "cpgame/experiments.hpp"
#include "cpgame/game_core.hpp"

namespace cpgame {

using Json = nlohmann::ordered_json;

namespace internal {

inline const Json& Field(const Json& j, const std::string& key,
                         const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw InvalidInput(where + ": missing field '" + key + "'");
  }
  return j.at(key);
}

inline double Number(const Json& j, const std::string& key,
                     const std::string& where) {
  const Json& v = Field(j, key, where);
  if (!v.is_number()) {
    throw InvalidInput(where + ": field '" + key + "' must be a number");
  }
  return v.get<double>();
}

inline void CheckKeys(const Json& j, const std::set<std::string>& allowed,
                      const std::string& where) {
  if (!j.is_object()) throw InvalidInput(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw InvalidInput(where + ": unknown field '" + it.key() + "'");
    }
  }
}

inline Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("'" + path + "': " + e.what());
  }
}

// Copies the top-level members of `src` into `dst`.
inline void Merge(Json& dst, const Json& src) {
  for (auto it = src.begin(); it != src.end(); ++it) dst[it.key()] = it.value();
}

inline std::string Fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace internal

// ---------------------------------------------------------------------------
// Instances and shift profiles.

inline GameInstance ParseInstance(const Json& j) {
  GameInstance g;
  g.cp_price = internal::Number(j, "cp_price", "instance");
  const Json& agents = internal::Field(j, "agents", "instance");
  if (!agents.is_array()) throw InvalidInput("instance: 'agents' must be an array");
  std::set<std::string> seen;
  for (size_t k = 0; k < agents.size(); ++k) {
    const std::string where = "agents[" + std::to_string(k) + "]";
    const Json& a = agents[k];
    Agent ag;
    const Json& id = internal::Field(a, "id", where);
    ag.id = id.is_string() ? id.get<std::string>() : id.dump();
    if (!seen.insert(ag.id).second) {
      throw InvalidInput(where + ": duplicate id '" + ag.id + "'");
    }
    ag.demand_p1 = internal::Number(a, "demand_p1", where);
    ag.demand_p2 = internal::Number(a, "demand_p2", where);
    ag.penalty = internal::Number(a, "penalty", where);
    g.agents.push_back(ag);
  }
  Validate(g);
  return g;
}

inline GameInstance LoadInstance(const std::string& path) {
  return ParseInstance(internal::ReadJsonFile(path));
}

inline Json ToJson(const GameInstance& g) {
  Json j;
  j["cp_price"] = g.cp_price;
  j["agents"] = Json::array();
  for (const Agent& a : g.agents) {
    j["agents"].push_back({{"id", a.id},
                           {"demand_p1", a.demand_p1},
                           {"demand_p2", a.demand_p2},
                           {"penalty", a.penalty}});
  }
  return j;
}

inline Json ShiftsJson(const GameInstance& g, const ShiftProfile& x) {
  Json j = Json::object();
  for (int i = 0; i < g.size(); ++i) j[g.agents[i].id] = x[i];
  return j;
}

// Accepts {"shifts": {...}}, a bare {id: shift} object or an array.
inline ShiftProfile ParseShiftProfile(const Json& j, const GameInstance& g) {
  const Json& s = j.is_object() && j.contains("shifts") ? j.at("shifts") : j;
  ShiftProfile x(g.size());
  if (s.is_array()) {
    if (static_cast<int>(s.size()) != g.size()) {
      throw InvalidInput("shift profile length does not match agent count");
    }
    for (int i = 0; i < g.size(); ++i) {
      if (!s[i].is_number()) throw InvalidInput("shifts must be numbers");
      x[i] = s[i].get<double>();
    }
    return x;
  }
  for (int i = 0; i < g.size(); ++i) {
    x[i] = internal::Number(s, g.agents[i].id, "shifts");
  }
  return x;
}

// ---------------------------------------------------------------------------
// Result payloads.

// Reported in the canonical frame (S_b1 <= S_b2); `periods_swapped` tells
// whether that differs from the file's labels.
inline Json ClassificationJson(const GameInstance& g) {
  Frame f(g);
  const DerivedPoints p = DerivePoints(f.game());
  Json j;
  j["game_type"] = ToString(ClassifyGame(p));
  j["periods_swapped"] = f.flipped();
  j["system_balance"] = p.system_balance;
  j["system_average"] = p.system_average;
  j["critical_sum"] = p.CriticalSum();
  j["agents"] = Json::array();
  for (int i = 0; i < g.size(); ++i) {
    j["agents"].push_back(
        {{"id", g.agents[i].id},
         {"critical", p.critical[i]},
         {"balance", p.balance[i]},
         {"capability", ToString(ClassifyAgent(p, i))}});
  }
  return j;
}

inline Json EvaluationJson(const GameInstance& g, const ProfileEvaluation& e) {
  Json j;
  j["s1"] = e.s1;
  j["s2"] = e.s2;
  j["cp_period"] = e.cp_period;
  j["balanced"] = e.balanced;
  j["per_agent_cost"] = ShiftsJson(g, e.per_agent_cost);
  j["total_cost"] = e.total_cost;
  if (!e.negative_agents.empty()) {
    Json neg = Json::array();
    for (int i : e.negative_agents) neg.push_back(g.agents[i].id);
    j["negative_demand_agents"] = neg;
  }
  return j;
}

inline Json HybridJson(const GameInstance& g, const HybridShifts& h) {
  Json j;
  j["pinned_set"] = h.pinned_cp_set ? "cp_period" : "non_cp_period";
  Json det = Json::object();
  for (size_t k = 0; k < h.determined.size(); ++k) {
    det[g.agents[h.determined[k]].id] = h.determined_shifts[k];
  }
  j["determined"] = det;
  Json ids = Json::array(), rep = Json::object(), bounds = Json::object();
  for (size_t k = 0; k < h.aggregate_set.size(); ++k) {
    const std::string& id = g.agents[h.aggregate_set[k]].id;
    ids.push_back(id);
    rep[id] = h.representative[k];
    bounds[id] = {h.lower_bounds[k], h.upper_bounds[k]};
  }
  j["aggregate_set"] = ids;
  j["aggregate_target"] = h.aggregate_target;
  j["representative"] = rep;
  j["bounds"] = bounds;
  return j;
}

inline Json VerificationJson(const GameInstance& g, const NeVerification& v) {
  Json j;
  j["passes"] = v.passes;
  j["passes_same_period"] = v.passes_same_period;
  j["tolerance"] = v.tolerance;
  j["max_improvement"] = v.max_improvement;
  j["max_improvement_same_period"] = v.max_improvement_same_period;
  j["improvement"] = ShiftsJson(g, v.improvement);
  j["best_deviation"] = ShiftsJson(g, v.best_deviation);
  return j;
}

inline Json EquilibriumJson(const GameInstance& g, const EquilibriumResult& r) {
  Json j;
  j["game_type"] = ToString(r.game_type);
  j["shifts"] = ShiftsJson(g, r.shifts);
  internal::Merge(j, EvaluationJson(g, r.evaluation));
  if (r.hybrid) j["hybrid"] = HybridJson(g, *r.hybrid);
  return j;
}

inline Json TrajectoryJson(const GameInstance& g, const Trajectory& t) {
  Json j;
  j["game_type"] = ToString(ClassifyGame(g));
  j["shifts"] = ShiftsJson(g, t.final_shifts);
  internal::Merge(j, EvaluationJson(g, EvaluateProfile(g, t.final_shifts)));
  j["converged"] = t.converged;
  j["status"] = ToString(t.status);
  j["convergence_mode"] = ToString(t.mode);
  j["iterations"] = t.iterations;
  j["final_payoff_gap"] = t.final_gap;
  j["final_gradient_norm"] = t.final_gradient_norm;
  j["left_stability_set"] = t.left_stability_set;
  return j;
}

inline Json BenchmarkJson(const GameInstance& g, const BenchmarkReport& b) {
  Json j;
  j["centralized_shifts"] = ShiftsJson(g, b.centralized_shifts);
  j["centralized_cost"] = b.centralized_cost;
  j["game_cost"] = b.game_cost;
  j["peak_ratio"] = b.peak_ratio;
  j["efficiency_loss"] = b.efficiency_loss;
  j["marginal_costs"] = ShiftsJson(g, b.marginal_costs);
  j["marginal_gap"] = b.marginal_gap;
  return j;
}

// ---------------------------------------------------------------------------
// Configs. Absent keys keep their defaults; unknown keys are rejected.

inline SolverConfig ParseSolverConfig(const Json& j,
                                      SolverConfig c = SolverConfig()) {
  internal::CheckKeys(j,
                      {"beta1", "beta2", "tau0", "eps_grad", "eps_gap",
                       "eps_step", "window", "max_iters", "max_backtracks",
                       "record_every", "iterate_recheck"},
                      "solver config");
  const std::string w = "solver config";
  if (j.contains("beta1")) c.beta1 = internal::Number(j, "beta1", w);
  if (j.contains("beta2")) c.beta2 = internal::Number(j, "beta2", w);
  if (j.contains("tau0")) c.tau0 = internal::Number(j, "tau0", w);
  if (j.contains("eps_grad")) c.eps_grad = internal::Number(j, "eps_grad", w);
  if (j.contains("eps_gap")) c.eps_gap = internal::Number(j, "eps_gap", w);
  if (j.contains("eps_step")) c.eps_step = internal::Number(j, "eps_step", w);
  if (j.contains("window")) c.window = internal::Number(j, "window", w);
  if (j.contains("max_iters")) c.max_iters = internal::Number(j, "max_iters", w);
  if (j.contains("max_backtracks")) {
    c.max_backtracks = internal::Number(j, "max_backtracks", w);
  }
  if (j.contains("record_every")) {
    c.record_every = internal::Number(j, "record_every", w);
  }
  if (j.contains("iterate_recheck")) {
    if (!j["iterate_recheck"].is_boolean()) {
      throw InvalidInput("solver config: 'iterate_recheck' must be a boolean");
    }
    c.iterate_recheck = j["iterate_recheck"].get<bool>();
  }
  c.Validate();
  return c;
}

namespace internal {

inline void Range(const Json& j, const std::string& key, double* lo,
                  double* hi, const std::string& where) {
  if (!j.contains(key)) return;
  const Json& r = j.at(key);
  if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
    throw InvalidInput(where + ": '" + key + "' must be [lo, hi]");
  }
  *lo = r[0].get<double>();
  *hi = r[1].get<double>();
}

inline uint64_t Seed(const Json& j, const std::string& where) {
  const Json& s = Field(j, "seed", where);
  if (!s.is_number_integer() || s.get<long long>() < 0) {
    throw InvalidInput(where + ": 'seed' must be a non-negative integer");
  }
  return s.get<uint64_t>();
}

}  // namespace internal

// `seed` is required unless a CLI override is supplied.
inline SweepConfig ParseSweepConfig(const Json& j,
                                    std::optional<uint64_t> seed_override) {
  const std::string w = "sweep config";
  internal::CheckKeys(j,
                      {"n_min", "n_max", "samples_per_n", "demand_range",
                       "penalty_range", "seed", "filter", "method",
                       "max_draws_per_sample", "threads", "solver"},
                      w);
  SweepConfig c;
  if (j.contains("n_min")) c.n_min = internal::Number(j, "n_min", w);
  if (j.contains("n_max")) c.n_max = internal::Number(j, "n_max", w);
  if (j.contains("samples_per_n")) {
    c.samples_per_n = internal::Number(j, "samples_per_n", w);
  }
  internal::Range(j, "demand_range", &c.demand_lo, &c.demand_hi, w);
  internal::Range(j, "penalty_range", &c.penalty_lo, &c.penalty_hi, w);
  c.seed = seed_override ? *seed_override : internal::Seed(j, w);
  if (j.contains("filter")) c.filter = j["filter"].get<std::string>();
  if (j.contains("method")) c.method = j["method"].get<std::string>();
  if (j.contains("max_draws_per_sample")) {
    c.max_draws_per_sample = internal::Number(j, "max_draws_per_sample", w);
  }
  if (j.contains("threads")) c.threads = internal::Number(j, "threads", w);
  if (j.contains("solver")) c.solver = ParseSolverConfig(j["solver"]);
  c.Validate();
  return c;
}

inline RealWorldConfig ParseRealWorldConfig(
    const Json& j, std::optional<uint64_t> seed_override) {
  const std::string w = "real-world config";
  internal::CheckKeys(j,
                      {"cp_price", "levels", "demand_variation",
                       "penalty_variation", "samples", "seed",
                       "system_noncp_avg", "noncp_to_cp_ratio", "method",
                       "threads", "solver"},
                      w);
  RealWorldConfig c;
  if (j.contains("cp_price")) c.cp_price = internal::Number(j, "cp_price", w);
  if (j.contains("levels") && j.contains("demand_variation")) {
    throw InvalidInput(w + ": give either 'levels' or 'demand_variation'");
  }
  if (j.contains("levels")) {
    c.levels.clear();
    for (const Json& v : j["levels"]) {
      if (!v.is_number()) throw InvalidInput(w + ": levels must be numbers");
      c.levels.push_back(v.get<double>());
    }
  }
  if (j.contains("demand_variation")) {
    c.levels = {internal::Number(j, "demand_variation", w)};
  }
  if (j.contains("penalty_variation")) {
    c.penalty_variation = internal::Number(j, "penalty_variation", w);
  }
  if (j.contains("samples")) c.samples = internal::Number(j, "samples", w);
  c.seed = seed_override ? *seed_override : internal::Seed(j, w);
  if (j.contains("system_noncp_avg")) {
    c.system_noncp_avg = internal::Number(j, "system_noncp_avg", w);
  }
  if (j.contains("noncp_to_cp_ratio")) {
    c.noncp_to_cp_ratio = internal::Number(j, "noncp_to_cp_ratio", w);
  }
  if (j.contains("method")) c.method = j["method"].get<std::string>();
  if (j.contains("threads")) c.threads = internal::Number(j, "threads", w);
  if (j.contains("solver")) c.solver = ParseSolverConfig(j["solver"]);
  c.Validate();
  return c;
}

// ---------------------------------------------------------------------------
// CSV writers.

// Keeps every `decimate`-th recorded point plus the last one.
inline void WriteTrajectoryCsv(std::ostream& out, const GameInstance& g,
                               const Trajectory& t, long decimate = 1) {
  if (decimate < 1) decimate = 1;
  out << "iter,period";
  for (const Agent& a : g.agents) out << ",x_" << a.id;
  out << ",S1,S2,V1,V2,payoff_gap\n";
  for (size_t k = 0; k < t.points.size(); ++k) {
    if (k % decimate != 0 && k + 1 != t.points.size()) continue;
    const TrajectoryPoint& p = t.points[k];
    out << p.iter << "," << p.period;
    for (double v : p.x) out << "," << internal::Fmt(v);
    out << "," << internal::Fmt(p.s1) << "," << internal::Fmt(p.s2) << ","
        << internal::Fmt(p.v1) << "," << internal::Fmt(p.v2) << ","
        << internal::Fmt(p.payoff_gap) << "\n";
  }
}

inline void WriteSweepCsv(std::ostream& out, const SweepResult& r) {
  out << "n,sample,game_type,efficiency_loss,peak_ratio\n";
  for (const SweepSample& s : r.samples) {
    out << s.n << "," << s.sample << "," << ToString(s.game_type) << ","
        << internal::Fmt(s.efficiency_loss) << ","
        << internal::Fmt(s.peak_ratio) << "\n";
  }
}

inline void WriteSweepSummaryCsv(std::ostream& out, const SweepResult& r) {
  out << "n,admitted,rejected,budget_exceeded,non_converged,median,q1,q3,iqr,"
         "whisker_lo,whisker_hi,outliers,frac_concave,frac_quasiconcave,"
         "frac_non_concave\n";
  for (const SweepSummary& s : r.summaries) {
    out << s.n << "," << s.admitted << "," << s.rejected << ","
        << s.budget_exceeded << "," << s.non_converged << ","
        << internal::Fmt(s.median) << "," << internal::Fmt(s.q1) << ","
        << internal::Fmt(s.q3) << "," << internal::Fmt(s.iqr()) << ","
        << internal::Fmt(s.whisker_lo) << "," << internal::Fmt(s.whisker_hi)
        << "," << s.outliers << "," << internal::Fmt(s.frac_concave) << ","
        << internal::Fmt(s.frac_quasiconcave) << ","
        << internal::Fmt(s.frac_non_concave) << "\n";
  }
}

inline void WriteRealWorldCsv(std::ostream& out, const RealWorldResult& r) {
  out << "level,sample,participant_id,charge_before,charge_after,shift\n";
  for (const RealWorldSample& s : r.samples) {
    for (size_t i = 0; i < s.participants.size(); ++i) {
      const ParticipantCharge& c = s.participants[i];
      out << internal::Fmt(s.level) << "," << s.sample << ","
          << r.participant_ids[i] << "," << internal::Fmt(c.charge_before)
          << "," << internal::Fmt(c.charge_after) << ","
          << internal::Fmt(c.shift) << "\n";
    }
  }
}

inline void WriteRealWorldSamplesCsv(std::ostream& out,
                                     const RealWorldResult& r) {
  out << "level,sample,game_type,status,iterations,efficiency_loss,"
         "peak_ratio,charge_before,charge_after,savings\n";
  for (const RealWorldSample& s : r.samples) {
    out << internal::Fmt(s.level) << "," << s.sample << ","
        << ToString(s.game_type) << "," << ToString(s.status) << ","
        << s.iterations << "," << internal::Fmt(s.efficiency_loss) << ","
        << internal::Fmt(s.peak_ratio) << "," << internal::Fmt(s.charge_before)
        << "," << internal::Fmt(s.charge_after) << ","
        << internal::Fmt(s.savings()) << "\n";
  }
}

inline void WriteRealWorldSummaryCsv(std::ostream& out,
                                     const RealWorldResult& r) {
  out << "level,samples,converged,median_efficiency_loss,q1_efficiency_loss,"
         "q3_efficiency_loss,max_efficiency_loss,frac_within_1_05,"
         "min_peak_ratio,max_peak_ratio,median_savings,concave,quasiconcave,"
         "non_concave\n";
  for (const RealWorldLevelSummary& L : r.levels) {
    out << internal::Fmt(L.level) << "," << L.samples << "," << L.converged
        << "," << internal::Fmt(L.median_efficiency_loss) << ","
        << internal::Fmt(L.q1_efficiency_loss) << ","
        << internal::Fmt(L.q3_efficiency_loss) << ","
        << internal::Fmt(L.max_efficiency_loss) << ","
        << internal::Fmt(L.frac_within_1_05) << ","
        << internal::Fmt(L.min_peak_ratio) << ","
        << internal::Fmt(L.max_peak_ratio) << ","
        << internal::Fmt(L.median_savings) << "," << L.concave << ","
        << L.quasiconcave << "," << L.non_concave << "\n";
  }
}

}  // namespace cpgame

#endif  // CPGAME_IO_HPP_
