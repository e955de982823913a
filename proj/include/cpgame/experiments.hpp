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

#ifndef CPGAME_EXPERIMENTS_HPP_
#define CPGAME_EXPERIMENTS_HPP_

// Case studies, the agent-number Monte Carlo sweep and the 4CP-style
// real-world pipeline.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cpgame/benchmark.hpp"
#include "cpgame/closed_form.hpp"
#include "cpgame/dynamics.hpp"
#include "cpgame/game_core.hpp"

namespace cpgame {

// ---------------------------------------------------------------------------
// Random streams.
//
// Every sample owns an independent SplitMix64 stream whose state is derived
// from (seed, tag, a, b). Uniforms use the top 53 bits and normals use
// Box-Muller, so draws do not depend on the standard library's distribution
// implementations. Tags: 1 = sweep (a = N, b = sample), 2 = real-world
// (a = level index, b = sample), 3 = synthetic CP records.

class Rng {
 public:
  explicit Rng(uint64_t state) : state_(state) {}

  uint64_t Next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double Uniform() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // (lo, hi)
  double UniformOpen(double lo, double hi) {
    for (;;) {
      const double u = Uniform();
      if (u > 0.0) return lo + (hi - lo) * u;
    }
  }
  double Normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = Uniform();
    const double u2 = Uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    spare_ = rad * std::sin(2.0 * std::numbers::pi * u2);
    return rad * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  uint64_t state_;
  std::optional<double> spare_;
};

inline Rng StreamRng(uint64_t seed, uint64_t tag, uint64_t a, uint64_t b) {
  Rng mix(seed);
  uint64_t s = mix.Next();
  for (uint64_t v : {tag, a, b}) {
    Rng step(s ^ (v * 0xD1B54A32D192ED03ULL));
    s = step.Next();
  }
  return Rng(s);
}

// ---------------------------------------------------------------------------
// Parallel map with deterministic output placement.

inline int DefaultThreads() {
  if (const char* env = std::getenv("CPGAME_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

inline void ParallelFor(long count, int threads,
                        const std::function<void(long)>& body) {
  if (threads <= 0) threads = DefaultThreads();
  threads = static_cast<int>(std::min<long>(threads, std::max(1L, count)));
  if (threads == 1) {
    for (long i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (long i = next++; i < count; i = next++) body(i);
    });
  }
  for (std::thread& th : pool) th.join();
}

// Linear interpolation between order statistics (Hyndman-Fan type 7).
inline double Quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

// ---------------------------------------------------------------------------
// Case studies.

inline GameInstance MakeInstance(double price,
                                 const std::vector<std::array<double, 3>>& rows) {
  GameInstance g;
  g.cp_price = price;
  for (size_t i = 0; i < rows.size(); ++i) {
    g.agents.push_back({std::to_string(i + 1), rows[i][0], rows[i][1], rows[i][2]});
  }
  return g;
}

inline GameInstance TwoAgentCase(double alpha_x, double alpha_y) {
  return MakeInstance(1.0, {{3, 10, alpha_x}, {6, 3, alpha_y}});
}

inline GameInstance SixAgentInstance() {
  return MakeInstance(1.0, {{7, 3, 0.2},
                            {3, 13, 0.1},
                            {10, 4, 0.4},
                            {1, 4, 0.5},
                            {2, 6, 0.2},
                            {5, 3, 0.1}});
}

// Published two-decimal shift vectors for the six-agent instance.
inline ShiftProfile SixAgentPublishedGameShifts() {
  return {-2, 3.85, -1.25, 0.93, 1.97, -1};
}
inline ShiftProfile SixAgentPublishedCentralizedShifts() {
  return {0.36, 0.72, 0.18, 0.15, 0.36, 0.73};
}

struct CaseStudy {
  std::string name;
  GameInstance instance;
  double reported_efficiency_loss = 0.0;
  EquilibriumResult closed;
  Trajectory dynamics;
  BenchmarkReport closed_benchmark;
  BenchmarkReport dynamics_benchmark;
  std::optional<double> published_vector_efficiency_loss;
};

inline std::vector<CaseStudy> RunCaseStudies(
    const SolverConfig& solver = SolverConfig()) {
  std::vector<CaseStudy> out;
  auto add = [&](std::string name, GameInstance g, double reported) {
    CaseStudy c;
    c.name = std::move(name);
    c.instance = std::move(g);
    c.reported_efficiency_loss = reported;
    c.closed = ClosedFormNe(c.instance);
    SolverConfig cfg = solver;
    cfg.record_every = 0;
    c.dynamics = Solve(c.instance, {}, cfg);
    c.closed_benchmark = Benchmark(c.instance, c.closed.shifts);
    c.dynamics_benchmark = Benchmark(c.instance, c.dynamics.final_shifts);
    out.push_back(std::move(c));
  };
  add("two_agent_case_1", TwoAgentCase(0.1, 0.2), 1.125);
  add("two_agent_case_2", TwoAgentCase(0.1, 0.5), 1.0941);
  add("two_agent_case_3", TwoAgentCase(0.6, 0.5), 1.0);
  add("six_agent", SixAgentInstance(), 1.1317);
  CaseStudy& six = out.back();
  six.published_vector_efficiency_loss =
      EfficiencyLoss(six.instance, SixAgentPublishedGameShifts(),
                     CentralizedSolve(six.instance));
  return out;
}

// ---------------------------------------------------------------------------
// Agent-number sweep.

struct SweepConfig {
  int n_min = 2;
  int n_max = 50;
  int samples_per_n = 1000;
  double demand_lo = 0.0, demand_hi = 15.0;
  double penalty_lo = 0.0, penalty_hi = 0.5;
  uint64_t seed = 1;
  // "balanced": admit -sum r < b < sum r. "all": admit every draw.
  std::string filter = "balanced";
  // "closed" or "dynamics".
  std::string method = "closed";
  long max_draws_per_sample = 100000;
  int threads = 0;
  SolverConfig solver;

  void Validate() const {
    if (n_min < 2 || n_max < n_min) throw InvalidInput("need 2 <= n_min <= n_max");
    if (samples_per_n < 1) throw InvalidInput("samples_per_n must be >= 1");
    if (demand_lo < 0.0 || demand_hi <= demand_lo) {
      throw InvalidInput("demand_range must be a non-negative interval");
    }
    if (penalty_lo < 0.0 || penalty_hi <= penalty_lo) {
      throw InvalidInput("penalty_range must be a positive interval");
    }
    if (filter != "balanced" && filter != "all") {
      throw InvalidInput("filter must be 'balanced' or 'all'");
    }
    if (method != "closed" && method != "dynamics") {
      throw InvalidInput("method must be 'closed' or 'dynamics'");
    }
    if (max_draws_per_sample < 1) {
      throw InvalidInput("max_draws_per_sample must be >= 1");
    }
    solver.Validate();
  }
};

inline constexpr double kMinSampledPenalty = 1e-6;

// One draw; penalties below kMinSampledPenalty are redrawn.
inline GameInstance DrawSweepInstance(int n, const SweepConfig& cfg, Rng& rng) {
  GameInstance g;
  g.cp_price = 1.0;
  for (int i = 0; i < n; ++i) {
    Agent a;
    a.id = std::to_string(i + 1);
    a.demand_p1 = rng.UniformOpen(cfg.demand_lo, cfg.demand_hi);
    a.demand_p2 = rng.UniformOpen(cfg.demand_lo, cfg.demand_hi);
    do {
      a.penalty = rng.UniformOpen(cfg.penalty_lo, cfg.penalty_hi);
    } while (a.penalty < kMinSampledPenalty);
    g.agents.push_back(a);
  }
  return g;
}

inline bool SweepAdmits(const GameInstance& g, const std::string& filter) {
  if (filter == "all") return true;
  const DerivedPoints p = DerivePoints(Canonicalize(g));
  const double r = p.CriticalSum();
  return -r < p.system_balance && p.system_balance < r;
}

struct SweepSample {
  int n = 0;
  int sample = 0;
  GameType game_type = GameType::kQuasiconcave;
  double efficiency_loss = 1.0;
  double peak_ratio = 1.0;
  long draws = 0;
  bool admitted = false;
  bool converged = true;
};

struct SweepSummary {
  int n = 0;
  int admitted = 0;
  long rejected = 0;
  int budget_exceeded = 0;
  int non_converged = 0;
  double median = 0.0, q1 = 0.0, q3 = 0.0;
  double whisker_lo = 0.0, whisker_hi = 0.0;
  int outliers = 0;
  double frac_concave = 0.0, frac_quasiconcave = 0.0, frac_non_concave = 0.0;
  double iqr() const { return q3 - q1; }
};

struct SweepResult {
  std::vector<SweepSample> samples;  // admitted samples only, (n, sample) order
  std::vector<SweepSummary> summaries;
};

inline SweepSummary SummarizeSweep(int n, const std::vector<SweepSample>& all) {
  SweepSummary s;
  s.n = n;
  std::vector<double> p;
  int counts[3] = {0, 0, 0};
  for (const SweepSample& x : all) {
    s.rejected += x.draws - (x.admitted ? 1 : 0);
    if (!x.admitted) {
      ++s.budget_exceeded;
      continue;
    }
    ++s.admitted;
    if (!x.converged) ++s.non_converged;
    p.push_back(x.efficiency_loss);
    ++counts[static_cast<int>(x.game_type)];
  }
  if (p.empty()) return s;
  s.median = Quantile(p, 0.5);
  s.q1 = Quantile(p, 0.25);
  s.q3 = Quantile(p, 0.75);
  const double lo_fence = s.q1 - 1.5 * s.iqr(), hi_fence = s.q3 + 1.5 * s.iqr();
  s.whisker_lo = std::numeric_limits<double>::infinity();
  s.whisker_hi = -s.whisker_lo;
  for (double v : p) {
    if (v < lo_fence || v > hi_fence) {
      ++s.outliers;
    } else {
      s.whisker_lo = std::min(s.whisker_lo, v);
      s.whisker_hi = std::max(s.whisker_hi, v);
    }
  }
  const double k = static_cast<double>(p.size());
  s.frac_concave = counts[static_cast<int>(GameType::kConcave)] / k;
  s.frac_quasiconcave = counts[static_cast<int>(GameType::kQuasiconcave)] / k;
  s.frac_non_concave = counts[static_cast<int>(GameType::kNonConcave)] / k;
  return s;
}

inline SweepResult AgentNumberSweep(const SweepConfig& cfg) {
  cfg.Validate();
  const int span = cfg.n_max - cfg.n_min + 1;
  const long total = static_cast<long>(span) * cfg.samples_per_n;
  std::vector<SweepSample> all(total);
  SolverConfig solver = cfg.solver;
  solver.record_every = 0;
  ParallelFor(total, cfg.threads, [&](long k) {
    SweepSample& s = all[k];
    s.n = cfg.n_min + static_cast<int>(k / cfg.samples_per_n);
    s.sample = static_cast<int>(k % cfg.samples_per_n);
    Rng rng = StreamRng(cfg.seed, 1, s.n, s.sample);
    GameInstance g;
    while (s.draws < cfg.max_draws_per_sample) {
      ++s.draws;
      g = DrawSweepInstance(s.n, cfg, rng);
      if (SweepAdmits(g, cfg.filter)) {
        s.admitted = true;
        break;
      }
    }
    if (!s.admitted) return;
    const ShiftProfile cen = CentralizedSolve(g);
    ShiftProfile game;
    if (cfg.method == "dynamics") {
      Trajectory t = Solve(g, {}, solver);
      s.converged = t.converged;
      game = t.final_shifts;
    } else {
      game = ClosedFormNe(g).shifts;
    }
    s.game_type = ClassifyGame(g);
    s.efficiency_loss = EfficiencyLoss(g, game, cen);
    s.peak_ratio = PeakRatio(g, game, cen);
  });

  SweepResult r;
  for (int n = cfg.n_min; n <= cfg.n_max; ++n) {
    const auto first = all.begin() + static_cast<long>(n - cfg.n_min) * cfg.samples_per_n;
    std::vector<SweepSample> block(first, first + cfg.samples_per_n);
    r.summaries.push_back(SummarizeSweep(n, block));
    for (const SweepSample& s : block) {
      if (s.admitted) r.samples.push_back(s);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// 4CP records.

struct CpRecord {
  std::string participant_id;
  std::array<double, 4> cp_demands{};
  double AvgCpDemand() const {
    return (cp_demands[0] + cp_demands[1] + cp_demands[2] + cp_demands[3]) / 4.0;
  }
};

struct CpIngest {
  std::vector<CpRecord> records;
  std::vector<std::string> excluded;  // participants with all-zero demand
};

namespace internal {

inline std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace internal

inline CpIngest ParseCpRecords(std::istream& in) {
  CpIngest out;
  std::string line;
  long row = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> cells = internal::SplitCsv(line);
    if (!header) {
      const std::vector<std::string> want = {"participant_id", "cp1", "cp2",
                                             "cp3", "cp4"};
      if (cells != want) {
        throw InvalidInput("line " + std::to_string(row) +
                           ": expected header participant_id,cp1,cp2,cp3,cp4");
      }
      header = true;
      continue;
    }
    if (cells.size() != 5 || cells[0].empty()) {
      throw InvalidInput("line " + std::to_string(row) +
                         ": expected 5 fields (participant_id,cp1..cp4)");
    }
    CpRecord r;
    r.participant_id = cells[0];
    for (int k = 0; k < 4; ++k) {
      size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cells[k + 1], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cells[k + 1].size() || !std::isfinite(v)) {
        throw InvalidInput("line " + std::to_string(row) + ": cp" +
                           std::to_string(k + 1) + " is not a number");
      }
      if (v < 0.0) {
        throw InvalidInput("line " + std::to_string(row) + ": cp" +
                           std::to_string(k + 1) + " is negative");
      }
      r.cp_demands[k] = v;
    }
    if (r.AvgCpDemand() == 0.0) {
      out.excluded.push_back(r.participant_id);
    } else {
      out.records.push_back(r);
    }
  }
  if (!header) throw InvalidInput("empty CP record file");
  return out;
}

inline CpIngest IngestCpRecords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open CP record file '" + path + "'");
  return ParseCpRecords(in);
}

// Synthetic participants: lognormal average CP demand (median
// `median_kw`, log-sd `log_sd`) with four event readings scattered around
// it, plus `zero_rows` participants that never drew power.
inline void WriteSyntheticCpRecords(std::ostream& out, uint64_t seed,
                                    int participants = 136, int zero_rows = 6,
                                    double median_kw = 20000.0,
                                    double log_sd = 1.2) {
  Rng rng = StreamRng(seed, 3, 0, 0);
  const int total = participants + zero_rows;
  std::vector<int> zero_at;
  for (int k = 0; k < zero_rows; ++k) {
    zero_at.push_back(static_cast<int>((k + 1) * total / (zero_rows + 1)));
  }
  out << "participant_id,cp1,cp2,cp3,cp4\n";
  char buf[64];
  for (int i = 0; i < total; ++i) {
    out << "P" << (i + 1);
    const bool zero =
        std::find(zero_at.begin(), zero_at.end(), i) != zero_at.end();
    const double base = std::exp(std::log(median_kw) + log_sd * rng.Normal());
    for (int k = 0; k < 4; ++k) {
      const double v = zero ? 0.0 : base * std::exp(0.08 * rng.Normal());
      std::snprintf(buf, sizeof(buf), ",%.1f", v);
      out << buf;
    }
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// Real-world study.

struct RealWorldConfig {
  double cp_price = 66.76;
  std::vector<double> levels = {0.25, 0.5, 0.75, 1.0, 1.25};
  double penalty_variation = 0.2;
  int samples = 50;
  uint64_t seed = 1;
  // System-wide average non-CP demand. When absent it is the ratio below
  // times the total CP demand of the participants.
  std::optional<double> system_noncp_avg;
  double noncp_to_cp_ratio = 0.7;
  std::string method = "dynamics";
  int threads = 0;
  SolverConfig solver;

  void Validate() const {
    if (!(cp_price > 0.0)) throw InvalidInput("cp_price must be positive");
    if (levels.empty()) throw InvalidInput("levels must not be empty");
    for (double v : levels) {
      if (!(v >= 0.0)) throw InvalidInput("levels must be non-negative");
    }
    if (!(penalty_variation >= 0.0)) {
      throw InvalidInput("penalty_variation must be non-negative");
    }
    if (samples < 1) throw InvalidInput("samples must be >= 1");
    if (system_noncp_avg && !(*system_noncp_avg > 0.0)) {
      throw InvalidInput("system_noncp_avg must be positive");
    }
    if (!(noncp_to_cp_ratio > 0.0)) {
      throw InvalidInput("noncp_to_cp_ratio must be positive");
    }
    if (method != "closed" && method != "dynamics") {
      throw InvalidInput("method must be 'closed' or 'dynamics'");
    }
    solver.Validate();
  }
};

// Period 2 carries each participant's average CP demand; period 1 carries
// its CP share of `system_noncp_avg`, perturbed by U(-v, v) and floored at
// zero. Penalties are pi / (2 X_{i,2}) perturbed by U(-w, w) and floored at
// the unperturbed value.
inline GameInstance BuildRealWorldInstance(const std::vector<CpRecord>& records,
                                           double system_noncp_avg,
                                           double demand_variation,
                                           double penalty_variation,
                                           double cp_price, Rng& rng) {
  if (records.empty()) throw InvalidInput("no CP records");
  if (!(system_noncp_avg > 0.0)) {
    throw InvalidInput("system_noncp_avg must be positive");
  }
  double total_cp = 0.0;
  for (const CpRecord& r : records) total_cp += r.AvgCpDemand();
  GameInstance g;
  g.cp_price = cp_price;
  for (const CpRecord& r : records) {
    Agent a;
    a.id = r.participant_id;
    a.demand_p2 = r.AvgCpDemand();
    const double share = a.demand_p2 / total_cp;
    const double dv = rng.Uniform(-demand_variation, demand_variation);
    a.demand_p1 = std::max(0.0, share * system_noncp_avg * (1.0 + dv));
    const double base = cp_price / (2.0 * a.demand_p2);
    const double pv = rng.Uniform(-penalty_variation, penalty_variation);
    a.penalty = std::max(base, base * (1.0 + pv));
    g.agents.push_back(a);
  }
  Validate(g);
  return g;
}

struct ParticipantCharge {
  double charge_before = 0.0;
  double charge_after = 0.0;
  double shift = 0.0;
};

struct RealWorldSample {
  int level_index = 0;
  double level = 0.0;
  int sample = 0;
  GameType game_type = GameType::kQuasiconcave;
  bool converged = true;
  SolveStatus status = SolveStatus::kConverged;
  long iterations = 0;
  double efficiency_loss = 1.0;
  double peak_ratio = 1.0;
  double charge_before = 0.0;
  double charge_after = 0.0;
  std::vector<ParticipantCharge> participants;
  double savings() const { return charge_before - charge_after; }
};

// Per-participant CP charges before and after shifting: pi times the
// participant's demand in the system CP period of the respective profile.
inline std::vector<ParticipantCharge> CpCharges(const GameInstance& g,
                                                const ShiftProfile& x) {
  const double sb1 = g.BaselineSum(1), sb2 = g.BaselineSum(2);
  const int before = ActivePeriod(sb1, sb2, 0.0);
  const int after = ActivePeriod(sb1, sb2, TotalShift(x));
  std::vector<ParticipantCharge> out(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const Agent& a = g.agents[i];
    out[i].shift = x[i];
    out[i].charge_before =
        g.cp_price * (before == 1 ? a.demand_p1 : a.demand_p2);
    out[i].charge_after =
        g.cp_price * (after == 1 ? a.demand_p1 + x[i] : a.demand_p2 - x[i]);
  }
  return out;
}

struct RealWorldLevelSummary {
  double level = 0.0;
  int samples = 0;
  int converged = 0;
  double median_efficiency_loss = 0.0;
  double q1_efficiency_loss = 0.0;
  double q3_efficiency_loss = 0.0;
  double max_efficiency_loss = 0.0;
  double frac_within_1_05 = 0.0;
  double min_peak_ratio = 0.0;
  double max_peak_ratio = 0.0;
  double median_savings = 0.0;
  int quasiconcave = 0, non_concave = 0, concave = 0;
};

struct RealWorldResult {
  std::vector<std::string> participant_ids;
  std::vector<RealWorldSample> samples;  // (level, sample) order
  std::vector<RealWorldLevelSummary> levels;
  double system_noncp_avg = 0.0;
};

inline RealWorldResult RealWorldStudy(const std::vector<CpRecord>& records,
                                      const RealWorldConfig& cfg) {
  cfg.Validate();
  if (records.empty()) throw InvalidInput("no CP records");
  RealWorldResult out;
  double total_cp = 0.0;
  for (const CpRecord& r : records) {
    total_cp += r.AvgCpDemand();
    out.participant_ids.push_back(r.participant_id);
  }
  out.system_noncp_avg = cfg.system_noncp_avg.value_or(cfg.noncp_to_cp_ratio * total_cp);
  const long total = static_cast<long>(cfg.levels.size()) * cfg.samples;
  out.samples.resize(total);
  SolverConfig solver = cfg.solver;
  solver.record_every = 0;
  ParallelFor(total, cfg.threads, [&](long k) {
    RealWorldSample& s = out.samples[k];
    s.level_index = static_cast<int>(k / cfg.samples);
    s.level = cfg.levels[s.level_index];
    s.sample = static_cast<int>(k % cfg.samples);
    Rng rng = StreamRng(cfg.seed, 2, s.level_index, s.sample);
    const GameInstance g =
        BuildRealWorldInstance(records, out.system_noncp_avg, s.level,
                               cfg.penalty_variation, cfg.cp_price, rng);
    ShiftProfile game;
    if (cfg.method == "dynamics") {
      const Trajectory t = Solve(g, {}, solver);
      s.converged = t.converged;
      s.status = t.status;
      s.iterations = t.iterations;
      game = t.final_shifts;
    } else {
      game = ClosedFormNe(g).shifts;
    }
    const ShiftProfile cen = CentralizedSolve(g);
    s.game_type = ClassifyGame(g);
    s.efficiency_loss = EfficiencyLoss(g, game, cen);
    s.peak_ratio = PeakRatio(g, game, cen);
    s.participants = CpCharges(g, game);
    for (const ParticipantCharge& c : s.participants) {
      s.charge_before += c.charge_before;
      s.charge_after += c.charge_after;
    }
  });

  for (size_t li = 0; li < cfg.levels.size(); ++li) {
    RealWorldLevelSummary L;
    L.level = cfg.levels[li];
    std::vector<double> p, savings;
    L.min_peak_ratio = std::numeric_limits<double>::infinity();
    L.max_peak_ratio = -L.min_peak_ratio;
    for (int k = 0; k < cfg.samples; ++k) {
      const RealWorldSample& s = out.samples[li * cfg.samples + k];
      ++L.samples;
      switch (s.game_type) {
        case GameType::kConcave:
          ++L.concave;
          break;
        case GameType::kQuasiconcave:
          ++L.quasiconcave;
          break;
        case GameType::kNonConcave:
          ++L.non_concave;
          break;
      }
      if (!s.converged) continue;
      ++L.converged;
      p.push_back(s.efficiency_loss);
      savings.push_back(s.savings());
      L.min_peak_ratio = std::min(L.min_peak_ratio, s.peak_ratio);
      L.max_peak_ratio = std::max(L.max_peak_ratio, s.peak_ratio);
    }
    if (!p.empty()) {
      L.median_efficiency_loss = Quantile(p, 0.5);
      L.q1_efficiency_loss = Quantile(p, 0.25);
      L.q3_efficiency_loss = Quantile(p, 0.75);
      L.max_efficiency_loss = *std::max_element(p.begin(), p.end());
      L.frac_within_1_05 =
          std::count_if(p.begin(), p.end(), [](double v) { return v <= 1.05; }) /
          static_cast<double>(p.size());
      L.median_savings = Quantile(savings, 0.5);
    }
    out.levels.push_back(L);
  }
  return out;
}

}  // namespace cpgame

#endif  // CPGAME_EXPERIMENTS_HPP_
