#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "proxpath/assignment.hpp"
#include "proxpath/collision.hpp"
#include "proxpath/graph.hpp"
#include "proxpath/landmark.hpp"
#include "proxpath/parallel.hpp"
#include "proxpath/quadratic.hpp"
#include "proxpath/types.hpp"
#include "proxpath/verify.hpp"
#include "proxpath/wall.hpp"

namespace proxpath {

enum class Algorithm { ADMM, TWA };

struct SolveOptions {
  Algorithm algorithm = Algorithm::TWA;
  double rho0 = 1.0;
  int max_iters = 20000;
  double tol = 0.0;  // <= 0 selects 1e-4 * smallest agent radius
  std::uint64_t seed = 0;
  int workers = 4;
  double init_noise = 0.01;  // times the smallest radius
  double goal_pull = 1.0;    // local-mode horizon attraction
  double feas_tol = 1e-6;    // clearance certificate tolerance
  // Update relaxation: estimates enter the consensus and dual steps as
  // relax * x + (1 - relax) * z. Values below 1 damp the push/relax limit
  // cycles that hard clearance constraints excite; 1 is the undamped
  // update.
  double relax = 0.8;

  double effective_tol(const Scenario& s) const {
    return tol > 0.0 ? tol : 1e-4 * s.min_radius();
  }
};

struct CaseStats {
  std::uint64_t trivial = 0, easy = 0, expensive = 0;

  std::uint64_t total() const { return trivial + easy + expensive; }
  void add(const CaseStats& o) {
    trivial += o.trivial;
    easy += o.easy;
    expensive += o.expensive;
  }
};

struct Solution {
  std::vector<Path> paths;
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;
  CaseStats case_stats;
  double objective = 0.0;
  std::string diagnostics;
};

struct IterateResult {
  double residual = 0.0;
  bool nonfinite = false;
};

// Reference consensus rule, also used by the variable sweep below: weighted
// mean of (estimate + dual); infinite weights dominate and average among
// themselves; an all-zero neighborhood leaves the previous value in place.
inline Vec consensus_combine(const std::vector<Vec>& values,
                             const std::vector<double>& weights,
                             const Vec& previous) {
  bool any_inf = false;
  double wsum = 0.0;
  for (double w : weights) {
    if (w == kInf) any_inf = true;
    else wsum += w;
  }
  Vec out = Vec::Zero(previous.size());
  if (any_inf) {
    int count = 0;
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (weights[k] == kInf) {
        out += values[k];
        ++count;
      }
    }
    return out / count;
  }
  if (wsum > 0.0) {
    for (std::size_t k = 0; k < values.size(); ++k) {
      out += weights[k] * values[k];
    }
    return out / wsum;
  }
  return previous;
}

namespace detail {

inline Eigen::Map<const Vec> edge_n_map(const FactorGraph& g, int e) {
  return {g.edge_n(e), g.edge_len(e)};
}

inline void write_edge_x(FactorGraph& g, int e, const Vec& value) {
  Eigen::Map<Vec>(g.edge_x(e), g.edge_len(e)) = value;
}

// Outgoing-weight rule: zero when the operator left the message unchanged,
// the standard weight otherwise; anchors are certain.
inline void set_out_weights(FactorGraph& g, const OpNode& op,
                            const SolveOptions& opts) {
  const bool twa = opts.algorithm == Algorithm::TWA;
  for (int k = 0; k < op.edge_count; ++k) {
    const int e = op.first_edge + k;
    if (!twa) {
      g.rho_out[e] = opts.rho0;
      continue;
    }
    if (op.kind == OpKind::Position) {
      g.rho_out[e] = kInf;
      continue;
    }
    const int len = g.edge_len(e);
    const double* xv = g.edge_x(e);
    const double* nv = g.edge_n(e);
    double diff = 0.0;
    for (int c = 0; c < len; ++c) diff = std::max(diff, std::abs(xv[c] - nv[c]));
    g.rho_out[e] = diff <= 1e-12 ? 0.0 : opts.rho0;
  }
}

inline void apply_operator(FactorGraph& g, int op_id,
                           const SolveOptions& opts, CaseStats& cases) {
  OpNode& op = g.ops[op_id];
  const int e0 = op.first_edge;
  switch (op.kind) {
    case OpKind::Position: {
      write_edge_x(g, e0, op.target);
      break;
    }
    case OpKind::Goal: {
      const double rho = g.rho_in[e0];
      const Vec n = edge_n_map(g, e0);
      Vec x;
      if (rho == kInf) {
        x = n;
      } else if (rho <= 0.0) {
        x = op.target;
      } else {
        x = (rho * n + 2.0 * op.coeff * op.target) / (2.0 * op.coeff + rho);
      }
      write_edge_x(g, e0, x);
      break;
    }
    case OpKind::Velocity: {
      QuadPairQuery q;
      q.n_lo = edge_n_map(g, e0);
      q.n_hi = edge_n_map(g, e0 + 1);
      q.rho_lo = g.rho_in[e0];
      q.rho_hi = g.rho_in[e0 + 1];
      q.coeff = op.coeff;
      const PairResult r = velocity_prox(q, g.scenario.max_speed);
      write_edge_x(g, e0, r.x_lo);
      write_edge_x(g, e0 + 1, r.x_hi);
      break;
    }
    case OpKind::Direction: {
      const TripleResult r = direction_prox(
          edge_n_map(g, e0), edge_n_map(g, e0 + 1), edge_n_map(g, e0 + 2),
          g.rho_in[e0], g.rho_in[e0 + 1], g.rho_in[e0 + 2], op.coeff);
      write_edge_x(g, e0, r.x0);
      write_edge_x(g, e0 + 1, r.x1);
      write_edge_x(g, e0 + 2, r.x2);
      break;
    }
    case OpKind::Collision: {
      CollisionQuery q;
      q.n_lo = edge_n_map(g, e0);
      q.n_lo_p = edge_n_map(g, e0 + 1);
      q.n_hi = edge_n_map(g, e0 + 2);
      q.n_hi_p = edge_n_map(g, e0 + 3);
      q.rho_lo = g.rho_in[e0];
      q.rho_lo_p = g.rho_in[e0 + 1];
      q.rho_hi = g.rho_in[e0 + 2];
      q.rho_hi_p = g.rho_in[e0 + 3];
      q.radius_sum = op.coeff;
      const CollisionResult r = solve_collision_prox(q);
      write_edge_x(g, e0, r.x_lo);
      write_edge_x(g, e0 + 1, r.x_lo_p);
      write_edge_x(g, e0 + 2, r.x_hi);
      write_edge_x(g, e0 + 3, r.x_hi_p);
      switch (r.case_class) {
        case CaseClass::Trivial: cases.trivial++; break;
        case CaseClass::EasyAt0:
        case CaseClass::EasyAt1: cases.easy++; break;
        case CaseClass::Expensive: cases.expensive++; break;
      }
      break;
    }
    case OpKind::Wall: {
      WallQuery q;
      q.n_lo = edge_n_map(g, e0);
      q.n_hi = edge_n_map(g, e0 + 1);
      q.rho_lo = g.rho_in[e0];
      q.rho_hi = g.rho_in[e0 + 1];
      q.obstacle = g.scenario.obstacles[op.a];
      q.agent_radius = g.scenario.agents[op.b].radius;
      const WallResult r = solve_wall_prox(q);
      write_edge_x(g, e0, r.x_lo);
      write_edge_x(g, e0 + 1, r.x_hi);
      break;
    }
    case OpKind::Landmark: {
      const LandmarkGroup& lg = g.scenario.landmark_groups[op.a];
      const int p = g.num_agents;
      const int span = lg.span();
      WindowMessages msgs(p);
      WindowWeights rho(p);
      for (int i = 0; i < p; ++i) {
        msgs[i].resize(span);
        rho[i].resize(span);
        for (int t = 0; t < span; ++t) {
          const int e = e0 + i * span + t;
          msgs[i][t] = edge_n_map(g, e);
          rho[i][t] = g.rho_in[e];
        }
      }
      const int m = static_cast<int>(lg.trajectories.size());
      std::vector<SigmaMessage> sm(m);
      std::vector<int> sigma_edges(m, -1);
      int next = e0 + p * span;
      for (int j = 0; j < m; ++j) {
        if (!g.sigma_var.empty() && g.sigma_var[op.a][j] >= 0) {
          sigma_edges[j] = next;
          sm[j].values = edge_n_map(g, next);
          sm[j].weight = g.rho_in[next];
          ++next;
        } else {
          sm[j].values = Vec::Zero(p + 1);
          sm[j].weight = 0.0;
        }
      }
      const LandmarkResult r = landmark_prox_shared(msgs, rho, lg, sm);
      for (int i = 0; i < p; ++i) {
        for (int t = 0; t < span; ++t) {
          write_edge_x(g, e0 + i * span + t, r.x[i][t]);
        }
      }
      for (int j = 0; j < m; ++j) {
        if (sigma_edges[j] >= 0) write_edge_x(g, sigma_edges[j], r.sigma[j]);
      }
      break;
    }
    case OpKind::SigmaEq: {
      SigmaMessage a, b;
      a.values = edge_n_map(g, e0);
      a.weight = g.rho_in[e0];
      b.values = edge_n_map(g, e0 + 1);
      b.weight = g.rho_in[e0 + 1];
      const auto [sa, sb] = sigma_equality_prox(a, b);
      write_edge_x(g, e0, sa);
      write_edge_x(g, e0 + 1, sb);
      break;
    }
  }
  set_out_weights(g, op, opts);
}

}  // namespace detail

// One full cycle: operator stage (parallel), then the consensus, dual and
// message sweep. Returns the max-norm disagreement between estimates and
// consensus values.
inline IterateResult iterate(FactorGraph& g, const SolveOptions& opts,
                             ThreadPool& pool, CaseStats* case_out = nullptr) {
  const bool twa = opts.algorithm == Algorithm::TWA;

  std::vector<CaseStats> chunk_cases(pool.workers() + 1);
  std::atomic<int> chunk_counter{0};
  pool.parallel_for(g.ops.size(), [&](std::size_t lo, std::size_t hi) {
    CaseStats local;
    for (std::size_t i = lo; i < hi; ++i) {
      detail::apply_operator(g, static_cast<int>(i), opts, local);
    }
    chunk_cases[chunk_counter.fetch_add(1)] = local;
  });
  if (case_out) {
    for (const CaseStats& c : chunk_cases) case_out->add(c);
  }

  IterateResult res;
  const double relax = std::clamp(opts.relax, 0.05, 1.0);
  std::vector<double> xhat;
  for (std::size_t v = 0; v < g.vars.size(); ++v) {
    const VarNode& var = g.vars[v];
    const int len = var.len;
    double* zv = g.z.data() + var.offset;

    bool any_inf = false;
    double wsum = 0.0;
    for (int e : var.edges) {
      const double w = g.rho_out[e];
      if (w == kInf) any_inf = true;
      else wsum += w;
    }

    // Damped estimates; anchors (infinite weight) are taken as-is so pinned
    // variables settle immediately.
    xhat.assign(var.edges.size() * static_cast<std::size_t>(len), 0.0);
    for (std::size_t k = 0; k < var.edges.size(); ++k) {
      const int e = var.edges[k];
      const double* xe = g.edge_x(e);
      const double blend = g.rho_out[e] == kInf ? 1.0 : relax;
      for (int c = 0; c < len; ++c) {
        xhat[k * len + c] = blend * xe[c] + (1.0 - blend) * zv[c];
      }
    }

    if (any_inf) {
      int count = 0;
      for (int c = 0; c < len; ++c) zv[c] = 0.0;
      for (std::size_t k = 0; k < var.edges.size(); ++k) {
        const int e = var.edges[k];
        if (g.rho_out[e] != kInf) continue;
        const double* ue = g.edge_u(e);
        for (int c = 0; c < len; ++c) zv[c] += xhat[k * len + c] + ue[c];
        ++count;
      }
      for (int c = 0; c < len; ++c) zv[c] /= count;
    } else if (wsum > 0.0) {
      for (int c = 0; c < len; ++c) zv[c] = 0.0;
      for (std::size_t k = 0; k < var.edges.size(); ++k) {
        const int e = var.edges[k];
        const double w = g.rho_out[e];
        if (w == 0.0) continue;
        const double* ue = g.edge_u(e);
        for (int c = 0; c < len; ++c) {
          zv[c] += w * (xhat[k * len + c] + ue[c]);
        }
      }
      for (int c = 0; c < len; ++c) zv[c] /= wsum;
    }  // all-zero: z keeps its previous value

    // Next-iteration incoming weight mirrors this node's certainty.
    const double certainty = any_inf ? kInf : (wsum > 0.0 ? opts.rho0 : 0.0);

    for (std::size_t k = 0; k < var.edges.size(); ++k) {
      const int e = var.edges[k];
      double* ue = g.edge_u(e);
      const double* xe = g.edge_x(e);
      double* ne = g.edge_n(e);
      // Duals update on every edge: a zero-weight edge echoes its message,
      // so its dual self-cancels as consensus settles. Freezing it instead
      // parks the iteration at a permanent non-zero residual.
      for (int c = 0; c < len; ++c) {
        const double r = std::abs(xe[c] - zv[c]);
        if (std::isnan(r)) res.nonfinite = true;
        else if (r > res.residual) res.residual = r;
        ue[c] += xhat[k * len + c] - zv[c];
        ne[c] = zv[c] - ue[c];
        if (!std::isfinite(ne[c])) res.nonfinite = true;
      }
      g.rho_in[e] = twa ? certainty : opts.rho0;
    }
  }
  return res;
}

inline IterateResult iterate(FactorGraph& g, const SolveOptions& opts,
                             CaseStats* case_out = nullptr) {
  ThreadPool serial(1);
  return iterate(g, opts, serial, case_out);
}

// Straight-line interpolation start -> goal, with seeded uniform noise on
// every unpinned break-point to break symmetric deadlocks.
inline void initialize_graph(FactorGraph& g, const SolveOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  const double mag = opts.init_noise * g.scenario.min_radius();
  std::uniform_real_distribution<double> noise(-mag, mag);

  for (std::size_t v = 0; v < g.vars.size(); ++v) {
    const VarNode& var = g.vars[v];
    double* zv = g.z.data() + var.offset;
    if (var.agent >= 0) {
      const Agent& ag = g.scenario.agents[var.agent];
      const double frac = g.eta > 0 ? static_cast<double>(var.s) / g.eta : 0.0;
      for (int c = 0; c < var.len; ++c) {
        zv[c] = (1.0 - frac) * ag.start[c] + frac * ag.goal[c];
        if (!var.pinned) zv[c] += noise(rng);
      }
    } else {
      for (int c = 0; c < var.len; ++c) {
        zv[c] = 1.0 / var.len;  // neutral assignment belief
      }
    }
  }
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const VarNode& var = g.vars[g.edges[e].var];
    const double* zv = g.z.data() + var.offset;
    double* xe = g.edge_x(static_cast<int>(e));
    double* ue = g.edge_u(static_cast<int>(e));
    double* ne = g.edge_n(static_cast<int>(e));
    for (int c = 0; c < var.len; ++c) {
      xe[c] = zv[c];
      ue[c] = 0.0;
      ne[c] = zv[c];
    }
    g.rho_in[e] = opts.rho0;
    g.rho_out[e] = opts.rho0;
  }
}

inline std::vector<Path> extract_paths(const FactorGraph& g) {
  std::vector<Path> paths(g.num_agents);
  for (int i = 0; i < g.num_agents; ++i) {
    paths[i].resize(g.eta + 1);
    for (int s = 0; s <= g.eta; ++s) {
      const int v = g.point_var(i, s);
      paths[i][s] = Eigen::Map<const Vec>(g.var_z(v), g.vars[v].len);
    }
  }
  return paths;
}

// Finite part of the objective on final paths: velocity and direction
// penalties plus optimally assigned landmark costs. Hard terms (anchors,
// clearances) are validated separately and contribute nothing when met.
inline double evaluate_objective(const std::vector<Path>& paths,
                                 const Scenario& s) {
  double total = 0.0;
  for (const Path& path : paths) {
    for (std::size_t seg = 0; seg + 1 < path.size(); ++seg) {
      total += s.vel_cost * (path[seg + 1] - path[seg]).squaredNorm();
    }
    if (s.dir_cost > 0.0) {
      for (std::size_t seg = 0; seg + 2 < path.size(); ++seg) {
        total += s.dir_cost *
                 (path[seg] - 2.0 * path[seg + 1] + path[seg + 2])
                     .squaredNorm();
      }
    }
  }
  for (const LandmarkGroup& lg : s.landmark_groups) {
    const int p = static_cast<int>(paths.size());
    const int m = static_cast<int>(lg.trajectories.size());
    CostMatrix cm;
    cm.costs = Eigen::MatrixXd::Zero(m, p);
    cm.skip_costs = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < m; ++j) {
      const LandmarkTrajectory& traj = lg.trajectories[j];
      cm.skip_costs(j) = traj.skip_cost;
      for (int i = 0; i < p; ++i) {
        double w = 0.0;
        for (int t = 0; t < lg.span(); ++t) {
          const double d2 =
              (paths[i][lg.s_begin + t] - traj.points[t]).squaredNorm();
          const double c = traj.follow_costs[t];
          if (c == kInf) {
            w += d2 <= 1e-8 ? 0.0 : 1e30;  // exact-follow miss
          } else {
            w += c * d2;
          }
        }
        cm.costs(j, i) = w;
      }
    }
    total += hungarian_solve(cm).total;
  }
  return total;
}

// Kinetic cost of going straight at constant speed, ignoring clearances:
// unbeatable by any feasible solution of the same scenario.
inline double straight_line_objective(const Scenario& s) {
  double total = 0.0;
  for (const Agent& a : s.agents) {
    total += s.vel_cost * (a.goal - a.start).squaredNorm() / s.eta;
  }
  return total;
}

namespace detail {

inline Solution finish_solution(FactorGraph& g, const SolveOptions& opts,
                                Solution sol, bool streak_reached) {
  sol.paths = extract_paths(g);
  sol.objective = evaluate_objective(sol.paths, g.scenario);
  const PathFeasibilityReport rep =
      path_feasibility(sol.paths, g.scenario, opts.feas_tol);
  sol.converged = streak_reached && rep.feasible;
  if (!rep.feasible) {
    sol.diagnostics += std::string(sol.diagnostics.empty() ? "" : "; ") +
                       "clearance violated: " + rep.witness();
  }
  return sol;
}

}  // namespace detail

// Iterates a prepared graph to tolerance, then certifies the result. The
// stopping rule needs both a settled consensus (ten consecutive sub-tol
// residuals) and a passing clearance certificate; while settled but not yet
// certified, the certificate is re-polled as the contraction keeps
// polishing the paths.
//
// Two stall modes get automatic treatment, both seeded and deterministic:
// residual plateaus first lower the relaxation factor (damping the
// push/relax cycles that clearance constraints excite), and once damping is
// exhausted the state is re-initialized with stronger symmetry-breaking
// noise. Iterations spent across all escalations count against the one
// budget.
inline Solution run_on_graph(FactorGraph& g, const SolveOptions& opts) {
  ThreadPool pool(opts.workers);
  SolveOptions cur = opts;
  initialize_graph(g, cur);
  const double tol = opts.effective_tol(g.scenario);

  Solution sol;
  int below = 0;
  bool certified = false;
  int window = 0;
  int restarts = 0;
  double window_best = kInf, prev_window_best = kInf;
  constexpr int kWindow = 300;
  sol.residual_history.reserve(std::min(opts.max_iters, 65536));

  for (int it = 0; it < opts.max_iters; ++it) {
    const IterateResult r = iterate(g, cur, pool, &sol.case_stats);
    sol.iterations = it + 1;
    sol.residual_history.push_back(r.residual);
    if (r.nonfinite) {
      sol.diagnostics = "aborted: non-finite value at iteration " +
                        std::to_string(it + 1);
      return detail::finish_solution(g, opts, std::move(sol), false);
    }
    below = r.residual < tol ? below + 1 : 0;
    if (below >= 10 && (below - 10) % 25 == 0) {
      if (path_feasibility(extract_paths(g), g.scenario, opts.feas_tol)
              .feasible) {
        certified = true;
        break;
      }
    }

    window_best = std::min(window_best, r.residual);
    if (++window < kWindow || below > 0) continue;
    window = 0;
    const bool plateaued = window_best > 0.5 * prev_window_best;
    prev_window_best = window_best;
    window_best = kInf;
    if (!plateaued) continue;
    if (cur.relax > 0.2) {
      cur.relax = std::max(0.2, cur.relax * 0.6);
    } else {
      // damping exhausted: restart from a noisier initialization
      ++restarts;
      cur.relax = opts.relax;
      cur.seed = opts.seed + 0x9e3779b97f4a7c15ULL * restarts;
      cur.init_noise =
          std::min(1.0, std::max(opts.init_noise, 0.05) * (1 << restarts));
      initialize_graph(g, cur);
      prev_window_best = kInf;
    }
  }
  if (!certified) {
    sol.diagnostics =
        below >= 10
            ? "consensus settled but the clearance certificate kept failing"
            : "consensus residual did not settle below " +
                  std::to_string(tol) + " within " +
                  std::to_string(opts.max_iters) + " iterations";
  }
  return detail::finish_solution(g, opts, std::move(sol), certified);
}

// Full solve: build, initialize, iterate to tolerance, certify.
inline Solution run(const Scenario& scenario, const SolveOptions& opts) {
  FactorGraph g = build_graph(scenario);
  return run_on_graph(g, opts);
}

// Multi-seed helper: best converged solution by objective, else the last
// attempt.
inline Solution run_restarts(const Scenario& scenario,
                             const SolveOptions& opts, int restarts) {
  Solution best;
  bool have = false;
  for (int r = 0; r < restarts; ++r) {
    SolveOptions o = opts;
    o.seed = opts.seed + static_cast<std::uint64_t>(r);
    Solution sol = run(scenario, o);
    const bool better =
        !have || (sol.converged && !best.converged) ||
        (sol.converged == best.converged && sol.objective < best.objective);
    if (better) {
      best = std::move(sol);
      have = true;
    }
  }
  return best;
}

}  // namespace proxpath
