#pragma once

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "proxpath/engine.hpp"
#include "proxpath/export_io.hpp"
#include "proxpath/local_planner.hpp"
#include "proxpath/scenario_io.hpp"
#include "proxpath/types.hpp"
#include "proxpath/verify.hpp"

namespace proxpath::cli {

// Exit codes: 0 success, 1 usage or parse failure, 2 infeasible or
// unconverged result.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInfeasible = 2;

namespace detail {

inline double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(
             clock::now().time_since_epoch())
      .count();
}

struct CommonFlags {
  std::string algorithm = "twa";
  double rho0 = 1.0;
  double tol = 0.0;
  int max_iters = 20000;
  std::uint64_t seed = 0;
  int workers = 0;  // 0: PROXPATH_WORKERS env or 4
  int restarts = 1;
  double init_noise = 0.01;

  void attach(CLI::App* app) {
    app->add_option("--algorithm", algorithm, "admm or twa")
        ->check(CLI::IsMember({"admm", "twa"}));
    app->add_option("--rho0", rho0, "base consensus weight");
    app->add_option("--tol", tol, "residual tolerance (0 = auto)");
    app->add_option("--max-iters", max_iters, "iteration budget");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--workers", workers, "worker threads (0 = env/default)");
    app->add_option("--restarts", restarts, "random restarts, best kept");
    app->add_option("--init-noise", init_noise,
                    "initialization noise, relative to smallest radius");
  }

  SolveOptions to_options() const {
    SolveOptions o;
    o.algorithm = algorithm == "admm" ? Algorithm::ADMM : Algorithm::TWA;
    o.rho0 = rho0;
    o.tol = tol;
    o.max_iters = max_iters;
    o.seed = seed;
    o.init_noise = init_noise;
    o.workers = workers;
    if (o.workers <= 0) {
      if (const char* env = std::getenv("PROXPATH_WORKERS")) {
        o.workers = std::atoi(env);
      }
    }
    if (o.workers <= 0) o.workers = 4;
    return o;
  }
};

inline void export_artifact(const Solution& sol, const Scenario& scenario,
                            const std::string& format,
                            const std::string& out_path, std::ostream& fallback,
                            const RunReport& report) {
  std::ofstream file;
  std::ostream* out = &fallback;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write " + out_path);
    out = &file;
  }
  if (format == "csv") {
    write_paths_csv(*out, sol.paths);
  } else if (format == "svg") {
    write_paths_svg(*out, scenario, sol.paths);
  } else {
    write_report(*out, report);
  }
}

}  // namespace detail

// Runs the command line given argv-style arguments (program name excluded),
// writing to the supplied streams. Kept in-process for testability.
inline int run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"multi-agent path planning via consensus proximal operators"};
  app.require_subcommand(1);

  // ---- solve ----
  auto* solve_cmd = app.add_subcommand("solve", "global beginning-to-end solve");
  std::string solve_scenario_path;
  std::string solve_out, solve_format = "report";
  detail::CommonFlags solve_flags;
  solve_cmd->add_option("scenario", solve_scenario_path, "scenario file")
      ->required();
  solve_flags.attach(solve_cmd);
  solve_cmd->add_option("--out", solve_out, "output file (default stdout)");
  solve_cmd->add_option("--format", solve_format, "csv, svg, or report")
      ->check(CLI::IsMember({"csv", "svg", "report"}));

  // ---- local ----
  auto* local_cmd = app.add_subcommand("local", "receding-horizon planning");
  std::string local_scenario_path, local_out, local_format = "report";
  detail::CommonFlags local_flags;
  int local_max_steps = 500;
  double local_goal_tol = 0.0;
  local_cmd->add_option("scenario", local_scenario_path, "scenario file")
      ->required();
  local_flags.attach(local_cmd);
  local_cmd->add_option("--max-steps", local_max_steps, "step budget");
  local_cmd->add_option("--goal-tol", local_goal_tol,
                        "goal arrival tolerance (0 = auto)");
  local_cmd->add_option("--out", local_out, "output file (default stdout)");
  local_cmd->add_option("--format", local_format, "csv, svg, or report")
      ->check(CLI::IsMember({"csv", "svg", "report"}));

  // ---- profile ----
  auto* profile_cmd =
      app.add_subcommand("profile", "collision-operator case distribution");
  std::string profile_scenario_path;
  detail::CommonFlags profile_flags;
  bool profile_local = false;
  profile_cmd->add_option("scenario", profile_scenario_path, "scenario file")
      ->required();
  profile_flags.attach(profile_cmd);
  profile_cmd->add_flag("--local", profile_local,
                        "profile the receding-horizon mode instead");

  // ---- verify ----
  auto* verify_cmd =
      app.add_subcommand("verify", "certify a solution file against a scenario");
  std::string verify_scenario_path, verify_paths_path;
  double verify_tol = 1e-6;
  verify_cmd->add_option("paths", verify_paths_path, "trajectory CSV")
      ->required();
  verify_cmd
      ->add_option("--scenario", verify_scenario_path, "scenario file")
      ->required();
  verify_cmd->add_option("--tol", verify_tol, "clearance tolerance");

  // ---- gen-conf1 ----
  auto* gen_cmd = app.add_subcommand("gen-conf1", "antipodal circle scenario");
  int gen_p = 8, gen_d = 2, gen_eta = 20;
  double gen_circle = 3.0, gen_radius = 0.918;
  std::string gen_out;
  gen_cmd->add_option("--p", gen_p, "agent count (even)");
  gen_cmd->add_option("--d", gen_d, "dimension (2 or 3)");
  gen_cmd->add_option("--circle-radius", gen_circle, "placement radius");
  gen_cmd->add_option("--agent-radius", gen_radius, "agent radius");
  gen_cmd->add_option("--eta", gen_eta, "segments per path");
  gen_cmd->add_option("--out", gen_out, "output file (default stdout)");

  std::vector<const char*> argv;
  argv.push_back("proxpath");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*solve_cmd) {
      const Scenario scenario = parse_scenario(solve_scenario_path);
      const SolveOptions opts = solve_flags.to_options();
      RunReport report;
      const double t0 = detail::now_ms();
      const double t1 = detail::now_ms();
      Solution sol = solve_flags.restarts > 1
                         ? run_restarts(scenario, opts, solve_flags.restarts)
                         : proxpath::run(scenario, opts);
      const double t2 = detail::now_ms();

      report.scenario_hash = scenario_hash(scenario);
      report.algorithm = solve_flags.algorithm;
      report.seed = opts.seed;
      report.workers = opts.workers;
      report.rho0 = opts.rho0;
      report.tol = opts.effective_tol(scenario);
      report.iterations = sol.iterations;
      report.converged = sol.converged;
      report.objective = sol.objective;
      report.lower_bound = straight_line_objective(scenario);
      report.final_residual =
          sol.residual_history.empty() ? 0.0 : sol.residual_history.back();
      report.case_stats = sol.case_stats;
      report.build_ms = t1 - t0;
      report.solve_ms = t2 - t1;
      report.diagnostics = sol.diagnostics;

      const double t3 = detail::now_ms();
      report.export_ms = detail::now_ms() - t3;
      detail::export_artifact(sol, scenario, solve_format, solve_out, out,
                              report);
      if (!solve_out.empty() && solve_format != "report") {
        write_report(out, report);
      }
      return sol.converged ? kExitOk : kExitInfeasible;
    }

    if (*local_cmd) {
      const Scenario scenario = parse_scenario(local_scenario_path);
      LocalOptions lopts;
      lopts.solve = local_flags.to_options();
      lopts.max_steps = local_max_steps;
      lopts.goal_tol = local_goal_tol;
      const double t1 = detail::now_ms();
      const LocalRunResult res = run_local(scenario, lopts);
      const double t2 = detail::now_ms();

      RunReport report;
      report.scenario_hash = scenario_hash(scenario);
      report.algorithm = local_flags.algorithm;
      report.seed = lopts.solve.seed;
      report.workers = lopts.solve.workers;
      report.rho0 = lopts.solve.rho0;
      report.tol = lopts.solve.effective_tol(scenario);
      report.iterations = res.state.step;
      report.converged = res.reached;
      report.objective = res.worst_clearance;
      report.case_stats = res.case_stats;
      report.solve_ms = t2 - t1;
      report.diagnostics = res.diagnostics;

      Solution view;
      view.paths = res.state.history;
      view.converged = res.reached;
      detail::export_artifact(view, scenario, local_format, local_out, out,
                              report);
      if (!local_out.empty() && local_format != "report") {
        write_report(out, report);
      }
      return res.reached ? kExitOk : kExitInfeasible;
    }

    if (*profile_cmd) {
      const Scenario scenario = parse_scenario(profile_scenario_path);
      CaseStats stats;
      bool ok = true;
      if (profile_local) {
        LocalOptions lopts;
        lopts.solve = profile_flags.to_options();
        const LocalRunResult res = run_local(scenario, lopts);
        stats = res.case_stats;
        ok = res.reached;
      } else {
        const Solution sol =
            proxpath::run(scenario, profile_flags.to_options());
        stats = sol.case_stats;
        ok = sol.converged;
      }
      const double total =
          static_cast<double>(std::max<std::uint64_t>(stats.total(), 1));
      char line[128];
      out << "case        count        fraction\n";
      std::snprintf(line, sizeof(line), "%-10s %10llu %11.3f\n", "trivial",
                    static_cast<unsigned long long>(stats.trivial),
                    stats.trivial / total);
      out << line;
      std::snprintf(line, sizeof(line), "%-10s %10llu %11.3f\n", "easy",
                    static_cast<unsigned long long>(stats.easy),
                    stats.easy / total);
      out << line;
      std::snprintf(line, sizeof(line), "%-10s %10llu %11.3f\n", "expensive",
                    static_cast<unsigned long long>(stats.expensive),
                    stats.expensive / total);
      out << line;
      return ok ? kExitOk : kExitInfeasible;
    }

    if (*verify_cmd) {
      const Scenario scenario = parse_scenario(verify_scenario_path);
      std::ifstream in(verify_paths_path);
      if (!in) {
        err << "error: cannot open " << verify_paths_path << "\n";
        return kExitUsage;
      }
      const std::vector<Path> paths = read_paths_csv(in);
      if (paths.size() != scenario.agents.size()) {
        err << "error: trajectory file has " << paths.size()
            << " agents, scenario has " << scenario.agents.size() << "\n";
        return kExitUsage;
      }
      const PathFeasibilityReport rep =
          path_feasibility(paths, scenario, verify_tol);
      out << "feasible: " << (rep.feasible ? "true" : "false") << "\n";
      out << "worst_pair_clearance: "
          << proxpath::detail::fmt_double(rep.worst_pair_clearance) << "\n";
      out << "worst_wall_clearance: "
          << proxpath::detail::fmt_double(rep.worst_wall_clearance) << "\n";
      if (!rep.feasible) out << "witness: " << rep.witness() << "\n";
      return rep.feasible ? kExitOk : kExitInfeasible;
    }

    if (*gen_cmd) {
      const Scenario scenario =
          conf1(gen_p, gen_d, gen_circle, gen_radius, gen_eta);
      if (gen_out.empty()) {
        out << serialize_scenario(scenario);
      } else {
        write_scenario(scenario, gen_out);
      }
      return kExitOk;
    }
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace proxpath::cli
