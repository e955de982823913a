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

// Command line front end. Exit codes: 0 computed (non-convergence is
// flagged in the payload), 1 internal error, 2 bad input.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cpgame/cpgame.hpp"

namespace {

using cpgame::Json;

constexpr int kOk = 0;
constexpr int kInternal = 1;
constexpr int kBadInput = 2;

std::ofstream OpenOut(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  return out;
}

std::filesystem::path PrepareDir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir + "': " + ec.message());
  return p;
}

struct SolveArgs {
  std::string instance;
  std::string method = "closed";
  bool verify = false;
  std::string format = "json";
  std::string config;
  std::string trajectory;
  long decimate = 1;
  std::string evaluate;
  double grid_step = 0.0;
};

cpgame::SolverConfig LoadSolverConfig(const std::string& path) {
  if (path.empty()) return cpgame::SolverConfig();
  return cpgame::ParseSolverConfig(cpgame::internal::ReadJsonFile(path));
}

void PrintCsvProfile(const cpgame::GameInstance& g,
                     const cpgame::ShiftProfile& x,
                     const cpgame::ProfileEvaluation& e) {
  std::cout << "id,shift,cost\n";
  for (int i = 0; i < g.size(); ++i) {
    std::cout << g.agents[i].id << "," << cpgame::internal::Fmt(x[i]) << ","
              << cpgame::internal::Fmt(e.per_agent_cost[i]) << "\n";
  }
}

int RunSolve(const SolveArgs& a) {
  const cpgame::GameInstance g = cpgame::LoadInstance(a.instance);
  Json out;
  cpgame::ShiftProfile shifts;
  if (!a.evaluate.empty()) {
    shifts = cpgame::ParseShiftProfile(cpgame::internal::ReadJsonFile(a.evaluate), g);
    out["method"] = "evaluate";
    out["game_type"] = cpgame::ToString(cpgame::ClassifyGame(g));
    out["shifts"] = cpgame::ShiftsJson(g, shifts);
    cpgame::internal::Merge(
        out, cpgame::EvaluationJson(g, cpgame::EvaluateProfile(g, shifts)));
  } else if (a.method == "dynamics") {
    cpgame::SolverConfig cfg = LoadSolverConfig(a.config);
    if (a.trajectory.empty()) cfg.record_every = 0;
    const cpgame::Trajectory t = cpgame::Solve(g, {}, cfg);
    shifts = t.final_shifts;
    out["method"] = "dynamics";
    cpgame::internal::Merge(out, cpgame::TrajectoryJson(g, t));
    if (!t.converged) {
      std::cerr << "warning: dynamics did not converge (" << cpgame::ToString(t.status)
                << ")\n";
    }
    if (!a.trajectory.empty()) {
      std::ofstream f = OpenOut(a.trajectory);
      cpgame::WriteTrajectoryCsv(f, g, t, a.decimate);
    }
  } else {
    if (!a.config.empty()) {
      throw cpgame::InvalidInput("--config only applies to --method dynamics");
    }
    const cpgame::EquilibriumResult r = cpgame::ClosedFormNe(g);
    shifts = r.shifts;
    out["method"] = "closed";
    cpgame::internal::Merge(out, cpgame::EquilibriumJson(g, r));
  }
  if (a.verify) {
    out["verification"] = cpgame::VerificationJson(
        g, cpgame::VerifyNe(g, shifts, a.grid_step));
  }
  if (a.format == "csv") {
    PrintCsvProfile(g, shifts, cpgame::EvaluateProfile(g, shifts));
  } else {
    std::cout << out.dump(2) << "\n";
  }
  return kOk;
}

int RunBenchmark(const std::string& path, bool with_dynamics,
                 const std::string& config) {
  const cpgame::GameInstance g = cpgame::LoadInstance(path);
  const cpgame::EquilibriumResult closed = cpgame::ClosedFormNe(g);
  Json out;
  out["game_type"] = cpgame::ToString(closed.game_type);
  out["closed"] = cpgame::BenchmarkJson(g, cpgame::Benchmark(g, closed.shifts));
  out["closed"]["game_shifts"] = cpgame::ShiftsJson(g, closed.shifts);
  if (g.size() == 2 && closed.game_type != cpgame::GameType::kConcave) {
    const cpgame::MarginalGapCheck m = cpgame::MarginalGapIdentity(g, closed.shifts);
    out["closed"]["marginal_gap_identity"] = {
        {"lhs", m.lhs}, {"rhs", m.rhs}, {"residual", m.residual}};
  }
  if (with_dynamics) {
    cpgame::SolverConfig cfg = LoadSolverConfig(config);
    cfg.record_every = 0;
    const cpgame::Trajectory t = cpgame::Solve(g, {}, cfg);
    out["dynamics"] = cpgame::BenchmarkJson(g, cpgame::Benchmark(g, t.final_shifts));
    out["dynamics"]["game_shifts"] = cpgame::ShiftsJson(g, t.final_shifts);
    out["dynamics"]["converged"] = t.converged;
    out["dynamics"]["iterations"] = t.iterations;
  }
  std::cout << out.dump(2) << "\n";
  return kOk;
}

int RunSweep(const std::string& config, const std::string& out_dir,
             std::optional<uint64_t> seed, int threads) {
  cpgame::SweepConfig cfg =
      cpgame::ParseSweepConfig(cpgame::internal::ReadJsonFile(config), seed);
  if (threads > 0) cfg.threads = threads;
  const cpgame::SweepResult r = cpgame::AgentNumberSweep(cfg);
  const auto dir = PrepareDir(out_dir);
  {
    std::ofstream f = OpenOut(dir / "sweep.csv");
    cpgame::WriteSweepCsv(f, r);
  }
  {
    std::ofstream f = OpenOut(dir / "sweep_summary.csv");
    cpgame::WriteSweepSummaryCsv(f, r);
  }
  for (const cpgame::SweepSummary& s : r.summaries) {
    std::cout << "n=" << s.n << " admitted=" << s.admitted
              << " median=" << cpgame::internal::Fmt(s.median)
              << " iqr=" << cpgame::internal::Fmt(s.iqr())
              << " non_concave=" << cpgame::internal::Fmt(s.frac_non_concave);
    if (s.budget_exceeded) std::cout << " budget_exceeded=" << s.budget_exceeded;
    if (s.non_converged) std::cout << " non_converged=" << s.non_converged;
    std::cout << "\n";
  }
  return kOk;
}

int RunRealWorld(const std::string& records, const std::string& config,
                 const std::string& out_dir, std::optional<uint64_t> seed,
                 int threads) {
  const cpgame::CpIngest in = cpgame::IngestCpRecords(records);
  for (const std::string& id : in.excluded) {
    std::cerr << "note: excluded participant '" << id << "' (zero CP demand)\n";
  }
  cpgame::RealWorldConfig cfg =
      cpgame::ParseRealWorldConfig(cpgame::internal::ReadJsonFile(config), seed);
  if (threads > 0) cfg.threads = threads;
  const cpgame::RealWorldResult r = cpgame::RealWorldStudy(in.records, cfg);
  const auto dir = PrepareDir(out_dir);
  {
    std::ofstream f = OpenOut(dir / "realworld.csv");
    cpgame::WriteRealWorldCsv(f, r);
  }
  {
    std::ofstream f = OpenOut(dir / "realworld_samples.csv");
    cpgame::WriteRealWorldSamplesCsv(f, r);
  }
  {
    std::ofstream f = OpenOut(dir / "realworld_summary.csv");
    cpgame::WriteRealWorldSummaryCsv(f, r);
  }
  std::cout << "participants=" << in.records.size()
            << " excluded=" << in.excluded.size() << " system_noncp_avg="
            << cpgame::internal::Fmt(r.system_noncp_avg) << "\n";
  for (const cpgame::RealWorldLevelSummary& L : r.levels) {
    std::cout << "level=" << cpgame::internal::Fmt(L.level)
              << " converged=" << L.converged << "/" << L.samples
              << " median_P=" << cpgame::internal::Fmt(L.median_efficiency_loss)
              << " max_P=" << cpgame::internal::Fmt(L.max_efficiency_loss)
              << " peak_ratio=[" << cpgame::internal::Fmt(L.min_peak_ratio) << ","
              << cpgame::internal::Fmt(L.max_peak_ratio) << "]"
              << " median_savings=" << cpgame::internal::Fmt(L.median_savings)
              << "\n";
  }
  return kOk;
}

int RunCases() {
  Json out = Json::array();
  for (const cpgame::CaseStudy& c : cpgame::RunCaseStudies()) {
    Json j;
    j["name"] = c.name;
    j["game_type"] = cpgame::ToString(c.closed.game_type);
    j["closed_shifts"] = cpgame::ShiftsJson(c.instance, c.closed.shifts);
    j["dynamics_shifts"] = cpgame::ShiftsJson(c.instance, c.dynamics.final_shifts);
    j["dynamics_converged"] = c.dynamics.converged;
    j["dynamics_iterations"] = c.dynamics.iterations;
    j["centralized_shifts"] =
        cpgame::ShiftsJson(c.instance, c.closed_benchmark.centralized_shifts);
    j["efficiency_loss_closed"] = c.closed_benchmark.efficiency_loss;
    j["efficiency_loss_dynamics"] = c.dynamics_benchmark.efficiency_loss;
    j["efficiency_loss_reported"] = c.reported_efficiency_loss;
    if (c.published_vector_efficiency_loss) {
      j["efficiency_loss_published_vector"] = *c.published_vector_efficiency_loss;
    }
    j["peak_ratio_closed"] = c.closed_benchmark.peak_ratio;
    out.push_back(j);
  }
  std::cout << out.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Coincident-peak shaving game engine.\n"
      "Exit codes: 0 computed (non-convergence is flagged in the payload), "
      "1 internal error, 2 bad input.\n"
      "CPGAME_THREADS sets the default worker count for sweep and realworld."};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<uint64_t> seed;
  app.add_option("--seed", seed, "Override the seed of randomized commands");
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: CPGAME_THREADS or all cores)");

  std::string instance;
  auto* classify = app.add_subcommand("classify", "Derived points, capabilities and game type");
  classify->add_option("instance", instance, "Instance JSON")->required();

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Equilibrium by closed form or dynamics");
  solve->add_option("instance", sa.instance, "Instance JSON")->required();
  solve->add_option("--method", sa.method)->check(CLI::IsMember({"closed", "dynamics"}));
  solve->add_flag("--verify", sa.verify, "Append the unilateral-deviation report");
  solve->add_option("--format", sa.format)->check(CLI::IsMember({"json", "csv"}));
  solve->add_option("--config", sa.config, "Solver config JSON (dynamics)");
  solve->add_option("--trajectory", sa.trajectory, "Write the trajectory CSV here");
  solve->add_option("--decimate", sa.decimate, "Keep every k-th trajectory row")
      ->check(CLI::PositiveNumber);
  solve->add_option("--evaluate", sa.evaluate, "Evaluate a shift profile JSON instead of solving");
  solve->add_option("--grid-step", sa.grid_step, "Deviation grid step for --verify");

  SolveArgs sim;
  sim.method = "dynamics";
  auto* simulate = app.add_subcommand("simulate", "Shorthand for solve --method dynamics");
  simulate->add_option("instance", sim.instance, "Instance JSON")->required();
  simulate->add_option("--config", sim.config, "Solver config JSON");
  simulate->add_option("--trajectory", sim.trajectory, "Write the trajectory CSV here");
  simulate->add_option("--decimate", sim.decimate)->check(CLI::PositiveNumber);
  simulate->add_flag("--verify", sim.verify);

  bool bench_dynamics = false;
  std::string bench_config;
  auto* bench = app.add_subcommand("benchmark", "Centralized optimum, peak ratio, efficiency loss");
  bench->add_option("instance", instance, "Instance JSON")->required();
  bench->add_flag("--dynamics", bench_dynamics, "Also benchmark the dynamics limit");
  bench->add_option("--config", bench_config, "Solver config JSON");

  std::string config, out_dir, records;
  auto* sweep = app.add_subcommand("sweep", "Agent-number Monte Carlo sweep");
  sweep->add_option("--config", config, "Sweep config JSON")->required();
  sweep->add_option("--out", out_dir, "Output directory")->required();

  auto* rw = app.add_subcommand("realworld", "4CP-style real-world study");
  rw->add_option("--records", records, "CP record CSV")->required();
  rw->add_option("--config", config, "Real-world config JSON")->required();
  rw->add_option("--out", out_dir, "Output directory")->required();

  std::string gen_out;
  int participants = 136, zero_rows = 6;
  auto* gen = app.add_subcommand("generate-records", "Write a synthetic CP record CSV");
  gen->add_option("--out", gen_out, "Output CSV")->required();
  gen->add_option("--participants", participants)->check(CLI::PositiveNumber);
  gen->add_option("--zero-rows", zero_rows)->check(CLI::NonNegativeNumber);

  auto* cases = app.add_subcommand("cases", "Two-agent cases and the six-agent example");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kBadInput;
  }

  try {
    if (*classify) {
      std::cout << cpgame::ClassificationJson(cpgame::LoadInstance(instance)).dump(2)
                << "\n";
      return kOk;
    }
    if (*solve) return RunSolve(sa);
    if (*simulate) return RunSolve(sim);
    if (*bench) return RunBenchmark(instance, bench_dynamics, bench_config);
    if (*sweep) return RunSweep(config, out_dir, seed, threads);
    if (*rw) return RunRealWorld(records, config, out_dir, seed, threads);
    if (*gen) {
      std::ofstream f = OpenOut(gen_out);
      cpgame::WriteSyntheticCpRecords(f, seed.value_or(1), participants, zero_rows);
      return kOk;
    }
    if (*cases) return RunCases();
  } catch (const cpgame::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
