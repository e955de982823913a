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

// Acceptance gate. One PASS/FAIL line per criterion, then the details that
// decided it. Exit status is the number of failed criteria.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cpgame/cpgame.hpp"

namespace cpgame {
namespace {

const std::string kData = CPGAME_DATA_DIR;

class Criterion {
 public:
  explicit Criterion(std::string title) : title_(std::move(title)) {}

  // Records one check; the criterion passes only if all checks do.
  void Check(bool ok, const std::string& what) {
    ok_ = ok_ && ok;
    notes_ << "    " << (ok ? "ok   " : "MISS ") << what << "\n";
  }
  bool ok() const { return ok_; }
  const std::string& title() const { return title_; }
  std::string notes() const { return notes_.str(); }

 private:
  std::string title_;
  bool ok_ = true;
  std::ostringstream notes_;
};

std::string F(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string F(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, ap);
  va_end(ap);
  return buf;
}

std::string Vec(const ShiftProfile& x) {
  std::string s = "(";
  for (size_t i = 0; i < x.size(); ++i) {
    s += F(i ? ", %.6g" : "%.6g", x[i]);
  }
  return s + ")";
}

double MaxAbsDiff(const ShiftProfile& a, const ShiftProfile& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

GameInstance RandomInstance(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> demand(0.0, 15.0), alpha(0.01, 0.5);
  GameInstance g;
  for (int i = 0; i < n; ++i) {
    const double x1 = demand(rng), x2 = demand(rng);
    g.agents.push_back({std::to_string(i + 1), x1, x2, alpha(rng)});
  }
  return g;
}

// Two-agent published cases.
void TwoAgentCriterion(Criterion& c, const std::string& file, GameType type,
                       const ShiftProfile& ne, double loss, double loss_tol) {
  const GameInstance g = LoadInstance(kData + "/instances/" + file);
  const GameType got = ClassifyGame(g);
  c.Check(got == type, "classified " + ToString(got));
  const EquilibriumResult e = ClosedFormNe(g);
  const double d = MaxAbsDiff(e.shifts, ne);
  c.Check(d <= 1e-9, "NE " + Vec(e.shifts) + F(", |diff| %.2e", d));
  const BenchmarkReport b = Benchmark(g, e.shifts);
  c.Check(std::abs(b.efficiency_loss - loss) <= loss_tol,
          F("efficiency loss %.6f (target %.4f +- %.0e)", b.efficiency_loss,
            loss, loss_tol));
  if (type == GameType::kConcave) {
    const double dc = MaxAbsDiff(e.shifts, b.centralized_shifts);
    c.Check(dc <= 1e-9, F("NE equals centralized, |diff| %.2e", dc));
  } else {
    c.Check(std::abs(b.peak_ratio - 1.0) <= 1e-6,
            F("peak ratio %.12f", b.peak_ratio));
  }
}

void Criterion4(Criterion& c) {
  const GameInstance g = LoadInstance(kData + "/instances/six_agent.json");
  c.Check(ClassifyGame(g) == GameType::kNonConcave,
          "classified " + ToString(ClassifyGame(g)));

  const ShiftProfile cen = CentralizedSolve(g);
  const ShiftProfile table = SixAgentPublishedCentralizedShifts();
  const double dc = MaxAbsDiff(cen, table);
  c.Check(dc <= 0.005, "centralized " + Vec(cen) + " vs table " + Vec(table) +
                           F(", max |diff| %.4f (tol 0.005)", dc));

  const EquilibriumResult e = ClosedFormNe(g);
  const HybridShifts& h = *e.hybrid;
  const bool pinned = h.determined == std::vector<int>{0, 2, 5} &&
                      h.determined_shifts == std::vector<double>{-2.0, -1.25, -1.0};
  c.Check(pinned, "non-CP agents 1, 3, 6 pinned at (-2, -1.25, -1)");
  c.Check(std::abs(h.aggregate_target - 6.75) <= 1e-4,
          F("CP-set aggregate %.9f", h.aggregate_target));

  const double published =
      EfficiencyLoss(g, SixAgentPublishedGameShifts(), cen);
  c.Check(std::abs(published - 1.1317) <= 0.002,
          F("efficiency loss at the published vector %.5f", published));

  const Trajectory t = Solve(g);
  const double p = EfficiencyLoss(g, t.final_shifts, cen);
  c.Check(t.converged && p >= 1.12 && p <= 1.14,
          F("dynamics P %.5f, status %s, x = ", p, ToString(t.status).c_str()) +
              Vec(t.final_shifts));
}

void Criterion5(Criterion& c) {
  std::mt19937_64 rng(20240605);
  const std::array<int, 3> quota = {334, 333, 333};
  std::array<int, 3> count = {0, 0, 0};
  int converged = 0, matched = 0, total = 0;
  double worst = 0.0;
  std::array<double, 3> worst_by_type = {0, 0, 0};
  while (total < 1000) {
    const GameInstance g = RandomInstance(rng, 2);
    const int t = static_cast<int>(ClassifyGame(g));
    if (count[t] >= quota[t]) continue;
    ++count[t];
    ++total;
    SolverConfig cfg;
    cfg.record_every = 0;
    const Trajectory tr = Solve(g, {}, cfg);
    if (!tr.converged) continue;
    ++converged;
    const double d = MaxAbsDiff(tr.final_shifts, ClosedFormNe(g).shifts);
    worst = std::max(worst, d);
    worst_by_type[t] = std::max(worst_by_type[t], d);
    if (d <= 1e-5) ++matched;
  }
  c.Check(converged == total, F("converged %d / %d", converged, total));
  c.Check(matched == total,
          F("within 1e-5 of closed form %d / %d; worst %.2e (concave %.2e, "
            "quasiconcave %.2e, non-concave %.2e)",
            matched, total, worst, worst_by_type[0], worst_by_type[1],
            worst_by_type[2]));
}

void Criterion6(Criterion& c) {
  std::mt19937_64 rng(20240606);
  long p_below = 0, balanced = 0, peak_bad = 0, sum_checked = 0, sum_bad = 0;
  long gap_checked = 0;
  double worst_peak = 0.0, worst_sum = 0.0, worst_gap = 0.0, min_p = 1e300;
  for (int k = 0; k < 10000; ++k) {
    const GameInstance g = RandomInstance(rng, 2 + k % 19);
    const EquilibriumResult e = ClosedFormNe(g);
    const ShiftProfile cen = CentralizedSolve(g);
    const double p = EfficiencyLoss(g, e.shifts, cen);
    min_p = std::min(min_p, p);
    if (p < 1.0) ++p_below;
    if (e.evaluation.balanced) {
      ++balanced;
      const double d = std::abs(PeakRatio(g, e.shifts, cen) - 1.0);
      worst_peak = std::max(worst_peak, d);
      if (d > 1e-6) ++peak_bad;
    }
    if (e.game_type != GameType::kConcave) {
      ++sum_checked;
      const Frame f(g);
      const double b = DerivePoints(f.game()).system_balance;
      const double d = std::abs(TotalShift(f.In(e.shifts)) - b);
      worst_sum = std::max(worst_sum, d / std::max(1.0, b));
      if (d > 1e-9 * std::max(1.0, b)) ++sum_bad;
      if (g.size() == 2) {
        ++gap_checked;
        worst_gap = std::max(worst_gap, MarginalGapIdentity(g, e.shifts).residual);
      }
    }
  }
  c.Check(p_below == 0, F("(a) P >= 1 on 10000 instances; min P %.15f", min_p));
  c.Check(peak_bad == 0, F("(b) peak ratio 1 +- 1e-6 at %ld balanced equilibria; "
                           "worst |ratio - 1| %.2e", balanced, worst_peak));
  c.Check(sum_bad == 0, F("(c) sum x = b at %ld equilibria; worst rel %.2e",
                          sum_checked, worst_sum));
  c.Check(gap_checked > 0 && worst_gap <= 1e-9,
          F("(d) marginal gap identity on %ld two-agent balanced equilibria; "
            "worst residual %.2e", gap_checked, worst_gap));

  // (e) Strict decrease is asserted whenever the Armijo margin
  // beta1 |dx|^2 / tau0 exceeds the double resolution of V; below that
  // only non-increase is observable.
  long strict = 0, strict_bad = 0, weak = 0, weak_bad = 0, segments_pts = 0;
  int trajectories = 0;
  for (int k = 0; k < 600; ++k) {
    const GameInstance g = RandomInstance(rng, 2 + k % 12);
    const SolverConfig cfg;
    const Trajectory t = Solve(g, {}, cfg);
    ++trajectories;
    const double tau0 = 1.0 / (4.0 * g.MaxPenalty());
    for (size_t j = 1; j < t.points.size(); ++j) {
      const TrajectoryPoint& a = t.points[j - 1];
      const TrajectoryPoint& b = t.points[j];
      if (a.period != b.period) continue;
      ++segments_pts;
      double dx2 = 0.0;
      for (size_t i = 0; i < a.x.size(); ++i) {
        dx2 += (b.x[i] - a.x[i]) * (b.x[i] - a.x[i]);
      }
      if (dx2 == 0.0) continue;
      const double va = a.period == 1 ? a.v1 : a.v2;
      const double vb = b.period == 1 ? b.v1 : b.v2;
      const double res = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(va);
      if (cfg.beta1 * dx2 / tau0 > res) {
        ++strict;
        if (!(vb < va)) ++strict_bad;
      } else {
        ++weak;
        if (vb > va + res) ++weak_bad;
      }
    }
  }
  c.Check(strict_bad == 0 && weak_bad == 0 && strict > 0,
          F("(e) V_p decreasing within constant-period segments of %d "
            "trajectories: %ld strict steps (%ld violations), %ld sub-resolution "
            "steps (%ld violations)", trajectories, strict, strict_bad, weak,
            weak_bad));

  long fd_bad = 0;
  double worst_fd = 0.0;
  std::uniform_real_distribution<double> ux(-10.0, 10.0), upi(0.5, 5.0);
  for (int k = 0; k < 1000; ++k) {
    GameInstance g = RandomInstance(rng, 2 + k % 5);
    g.cp_price = upi(rng);
    ShiftProfile x(g.size());
    for (double& v : x) v = ux(rng);
    const int period = 1 + k % 2;
    const std::vector<double> grad = Gradient(g, x, period);
    for (int i = 0; i < g.size(); ++i) {
      const Agent& a = g.agents[i];
      const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
      const double fd = (AgentCost(a, x[i] - h, period, g.cp_price) -
                         AgentCost(a, x[i] + h, period, g.cp_price)) /
                        (2.0 * h);
      const double rel = std::abs(grad[i] - fd) / std::max(1.0, std::abs(fd));
      worst_fd = std::max(worst_fd, rel);
      if (rel > 1e-6) ++fd_bad;
    }
  }
  c.Check(fd_bad == 0, F("(f) gradients vs central differences at 1000 points; "
                         "worst rel %.2e", worst_fd));
}

void Criterion7(Criterion& c) {
  const SweepConfig cfg = ParseSweepConfig(
      internal::ReadJsonFile(kData + "/configs/sweep.json"), std::nullopt);
  const SweepResult r = AgentNumberSweep(cfg);
  const SweepSummary& first = r.summaries.front();
  const SweepSummary& last = r.summaries.back();
  const double ratio = first.iqr() / last.iqr();
  c.Check(first.n == 2 && last.n == 50 && first.admitted == cfg.samples_per_n &&
              last.admitted == cfg.samples_per_n,
          F("N = %d..%d, %d admitted samples per N, seed %llu", first.n, last.n,
            cfg.samples_per_n, static_cast<unsigned long long>(cfg.seed)));
  c.Check(ratio >= 3.0,
          F("IQR(P) at N=2 %.5f, at N=50 %.5f, ratio %.3f (need >= 3); medians "
            "%.5f, %.5f", first.iqr(), last.iqr(), ratio, first.median,
            last.median));
  c.Check(last.frac_non_concave > 0.99,
          F("non-concave fraction at N=50 %.4f", last.frac_non_concave));
}

void Criterion8(Criterion& c) {
  const CpIngest in = IngestCpRecords(kData + "/synthetic_4cp.csv");
  const RealWorldConfig cfg = ParseRealWorldConfig(
      internal::ReadJsonFile(kData + "/configs/realworld.json"), std::nullopt);
  const RealWorldResult r = RealWorldStudy(in.records, cfg);
  c.Check(in.records.size() == 136,
          F("%zu participants (%zu all-zero rows excluded)", in.records.size(),
            in.excluded.size()));
  int converged = 0, peak_bad = 0;
  double worst_peak = 0.0;
  for (const RealWorldSample& s : r.samples) {
    if (!s.converged) continue;
    ++converged;
    const double d = std::abs(s.peak_ratio - 1.0);
    worst_peak = std::max(worst_peak, d);
    if (d > 1e-6) ++peak_bad;
  }
  c.Check(peak_bad == 0 && converged > 0,
          F("peak ratio 1 +- 1e-6 on %d / %zu converged samples; worst %.2e",
            converged, r.samples.size(), worst_peak));
  bool within = true, monotone = true;
  std::string medians;
  for (size_t k = 0; k < r.levels.size(); ++k) {
    const RealWorldLevelSummary& L = r.levels[k];
    within = within && L.converged > 0 && L.median_efficiency_loss <= 1.05;
    if (k > 0 && L.median_efficiency_loss < r.levels[k - 1].median_efficiency_loss) {
      monotone = false;
    }
    medians += F(" %.2f:%.5f", L.level, L.median_efficiency_loss);
  }
  c.Check(within, "median P per level <= 1.05:" + medians);
  c.Check(monotone, "median P non-decreasing across levels");
}

}  // namespace
}  // namespace cpgame

int main() {
  using cpgame::Criterion;
  struct Item {
    std::string title;
    double budget_s;
    std::function<void(Criterion&)> run;
  };
  const std::vector<Item> items = {
      {"two-agent case 1 (quasiconcave)", 1.0,
       [](Criterion& c) {
         cpgame::TwoAgentCriterion(c, "two_agent_case1.json",
                                   cpgame::GameType::kQuasiconcave, {3.5, -1.5},
                                   1.125, 1e-3);
       }},
      {"two-agent case 2 (non-concave)", 1.0,
       [](Criterion& c) {
         cpgame::TwoAgentCriterion(c, "two_agent_case2.json",
                                   cpgame::GameType::kNonConcave, {3.0, -1.0},
                                   1.0941, 1e-3);
       }},
      {"two-agent case 3 (concave)", 1.0,
       [](Criterion& c) {
         cpgame::TwoAgentCriterion(c, "two_agent_case3.json",
                                   cpgame::GameType::kConcave, {5.0 / 6.0, 1.0},
                                   1.0, 1e-9);
       }},
      {"six-agent instance", 5.0, cpgame::Criterion4},
      {"dynamics vs closed form, 1000 two-agent instances", 60.0,
       cpgame::Criterion5},
      {"property suite (a)-(f)", 120.0, cpgame::Criterion6},
      {"agent-number sweep N = 2..50", 600.0, cpgame::Criterion7},
      {"real-world pipeline on synthetic records", 300.0, cpgame::Criterion8},
  };

  int failed = 0;
  std::string details;
  for (size_t k = 0; k < items.size(); ++k) {
    Criterion c(items[k].title);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      items[k].run(c);
    } catch (const std::exception& e) {
      c.Check(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.Check(secs < items[k].budget_s,
            cpgame::F("runtime %.3f s (budget %.0f s)", secs, items[k].budget_s));
    if (!c.ok()) ++failed;
    std::printf("%s criterion %zu: %s [%.3f s]\n", c.ok() ? "PASS" : "FAIL",
                k + 1, c.title().c_str(), secs);
    std::fflush(stdout);
    details += cpgame::F("criterion %zu:\n", k + 1) + c.notes();
  }
  std::printf("\n%s", details.c_str());
  std::printf("\n%d of %zu criteria passed\n",
              static_cast<int>(items.size()) - failed, items.size());
  return failed;
}
