#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "proxpath/engine.hpp"
#include "proxpath/graph.hpp"
#include "proxpath/types.hpp"
#include "proxpath/verify.hpp"

namespace proxpath {

// Receding-horizon planner: repeatedly solves a one-segment graph from the
// current positions, with the far endpoint pulled toward each goal rather
// than anchored, and executes the solved step. Every executed segment is
// re-certified before it is committed.

struct PlannerState {
  std::vector<Vec> positions;
  int step = 0;
  double tau = 1.0;  // horizon duration mapped onto the single segment
  std::vector<Path> history;  // per agent, one entry per executed step
};

struct LocalOptions {
  SolveOptions solve;
  double goal_tol = 0.0;   // <= 0 selects 0.02 * smallest radius
  int max_steps = 500;
  double step_cap = 0.0;   // <= 0 caps each step at the smallest radius

  double effective_goal_tol(const Scenario& s) const {
    return goal_tol > 0.0 ? goal_tol : 0.02 * s.min_radius();
  }
  double effective_step_cap(const Scenario& s) const {
    return step_cap > 0.0 ? step_cap : s.min_radius();
  }
};

struct LocalRunResult {
  PlannerState state;
  bool reached = false;
  CaseStats case_stats;
  double worst_clearance = kInf;
  std::string diagnostics;
};

struct StalledError : std::runtime_error {
  explicit StalledError(int step)
      : std::runtime_error("local planner stalled at step " +
                           std::to_string(step)) {}
};

inline PlannerState make_planner_state(const Scenario& s, double tau = 1.0) {
  PlannerState st;
  st.tau = tau;
  st.positions.reserve(s.agents.size());
  st.history.resize(s.agents.size());
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    st.positions.push_back(s.agents[i].start);
    st.history[i].push_back(s.agents[i].start);
  }
  return st;
}

namespace detail {

inline double executed_step_clearance(const std::vector<Vec>& from,
                                      const std::vector<Vec>& to,
                                      const Scenario& s) {
  double worst = kInf;
  const int p = static_cast<int>(from.size());
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      const FeasibilityReport r =
          sip_feasible(from[i], from[j], to[i], to[j],
                       s.agents[i].radius + s.agents[j].radius, 1001, 0.0);
      worst = std::min(worst, r.worst_clearance);
    }
    for (const Obstacle& o : s.obstacles) {
      const FeasibilityReport r =
          wall_feasible(from[i], to[i], o, s.agents[i].radius, 101, 0.0);
      worst = std::min(worst, r.worst_clearance);
    }
  }
  return worst;
}

}  // namespace detail

// One horizon step. Retries with fresh noise when the inner solve fails its
// clearance certificate; throws StalledError after five failed attempts.
inline PlannerState plan_step(const PlannerState& st, const Scenario& s,
                              const LocalOptions& opts,
                              CaseStats* cases = nullptr,
                              double* step_clearance = nullptr) {
  Scenario step_scenario = s;
  const double cap = st.tau * opts.effective_step_cap(s);
  step_scenario.max_speed =
      s.max_speed > 0.0 ? std::min(s.max_speed, cap) : cap;

  for (int attempt = 0; attempt < 5; ++attempt) {
    FactorGraph g =
        build_local_graph(st.positions, step_scenario, opts.solve.goal_pull);
    SolveOptions inner = opts.solve;
    inner.seed = opts.solve.seed + 0x9e37 * static_cast<std::uint64_t>(
                                                st.step * 7 + attempt + 1);
    inner.max_iters = std::min(inner.max_iters, 4000);
    Solution sol = run_on_graph(g, inner);
    if (cases) cases->add(sol.case_stats);
    if (!sol.converged) continue;

    std::vector<Vec> next(st.positions.size());
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] = sol.paths[i][1];
    }
    const double clearance =
        detail::executed_step_clearance(st.positions, next, s);
    if (clearance < -opts.solve.feas_tol) continue;

    PlannerState out = st;
    out.positions = std::move(next);
    out.step = st.step + 1;
    for (std::size_t i = 0; i < out.positions.size(); ++i) {
      out.history[i].push_back(out.positions[i]);
    }
    if (step_clearance) *step_clearance = clearance;
    return out;
  }
  throw StalledError(st.step);
}

// Drives plan_step until every agent is within tolerance of its goal or the
// step budget runs out.
inline LocalRunResult run_local(const Scenario& s, const LocalOptions& opts) {
  LocalRunResult out;
  out.state = make_planner_state(s, 1.0);
  const double goal_tol = opts.effective_goal_tol(s);

  auto all_at_goal = [&]() {
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
      if ((out.state.positions[i] - s.agents[i].goal).norm() > goal_tol)
        return false;
    }
    return true;
  };

  try {
    while (out.state.step < opts.max_steps) {
      if (all_at_goal()) {
        out.reached = true;
        break;
      }
      double clearance = kInf;
      out.state = plan_step(out.state, s, opts, &out.case_stats, &clearance);
      out.worst_clearance = std::min(out.worst_clearance, clearance);
    }
    if (!out.reached && all_at_goal()) out.reached = true;
    if (!out.reached) {
      out.diagnostics = "step budget exhausted before reaching goals";
    }
  } catch (const StalledError& e) {
    out.diagnostics = e.what();
  }
  return out;
}

}  // namespace proxpath
