#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "proxpath/collision.hpp"
#include "proxpath/types.hpp"
#include "proxpath/wall.hpp"

namespace proxpath {

// Independent brute-force verification: certified clearance checks and a
// penalty-method minimizer used as a cross-check oracle for the closed-form
// operators. Nothing here reuses the closed-form solution path.

struct FeasibilityReport {
  bool feasible = true;
  double worst_alpha = 0.0;
  double worst_clearance = kInf;
  int grid_size = 0;
};

// Minimum clearance of two linearly interpolated bodies over the whole
// fraction range. The analytic interior minimizer of the convex distance
// profile is always evaluated alongside the grid, so the minimum is exact
// rather than sampled.
inline FeasibilityReport sip_feasible(const Vec& x_lo, const Vec& x_lo_p,
                                      const Vec& x_hi, const Vec& x_hi_p,
                                      double radius_sum, int grid_size = 1001,
                                      double tol = 1e-6) {
  const Vec a = x_lo - x_lo_p;   // separation at fraction 1
  const Vec b = x_hi - x_hi_p;   // separation at fraction 0
  FeasibilityReport rep;
  rep.grid_size = grid_size;

  auto probe = [&](double alpha) {
    const double clearance =
        (alpha * a + (1.0 - alpha) * b).norm() - radius_sum;
    if (clearance < rep.worst_clearance) {
      rep.worst_clearance = clearance;
      rep.worst_alpha = alpha;
    }
  };

  for (int k = 0; k < grid_size; ++k) {
    probe(static_cast<double>(k) / (grid_size - 1));
  }
  const double seg2 = (a - b).squaredNorm();
  if (seg2 > 0.0) {
    probe(std::clamp(b.dot(b - a) / seg2, 0.0, 1.0));
  }

  rep.feasible = rep.worst_clearance >= -tol;
  return rep;
}

// Same certificate for a segment obstacle: worst clearance over path
// fraction and wall fraction, including the exact segment-segment closest
// pair.
inline FeasibilityReport wall_feasible(const Vec& x_lo, const Vec& x_hi,
                                       const Obstacle& o, double agent_radius,
                                       int grid_size = 101,
                                       double tol = 1e-6) {
  const double radius = agent_radius + o.thickness;
  FeasibilityReport rep;
  rep.grid_size = grid_size;

  auto probe = [&](double alpha, double beta) {
    const Vec point = alpha * x_lo + (1.0 - alpha) * x_hi;
    const double clearance =
        (point - (beta * o.a + (1.0 - beta) * o.b)).norm() - radius;
    if (clearance < rep.worst_clearance) {
      rep.worst_clearance = clearance;
      rep.worst_alpha = alpha;
    }
  };

  for (int i = 0; i < grid_size; ++i) {
    for (int j = 0; j < grid_size; ++j) {
      probe(static_cast<double>(i) / (grid_size - 1),
            static_cast<double>(j) / (grid_size - 1));
    }
  }
  double s = 0.0, t = 0.0;
  detail::segment_segment_distance(x_hi, x_lo, o.b, o.a, &s, &t);
  probe(s, t);

  rep.feasible = rep.worst_clearance >= -tol;
  return rep;
}

struct OracleResult {
  std::vector<Vec> points;  // same count and order as the query messages
  double objective = 0.0;
};

namespace detail {

// Penalty-method minimizer shared by the collision and wall oracles. The
// free points start from perturbed messages and descend
//   f(x) + mu * sum_k max(0, R - dist_k(x))^2
// with mu escalating tenfold per stage, followed by an outward push until
// the exact clearance certificate passes.
struct PenaltyProblem {
  std::vector<Vec> n;
  std::vector<double> rho;
  double radius = 1.0;
  // dist(x, k) and its gradient contribution are supplied by the caller.
  int constraint_count = 0;
  std::function<double(const std::vector<Vec>&, int, std::vector<Vec>*)>
      clearance;  // returns dist - R; accumulates d(dist)/dx into grads
  std::function<double(const std::vector<Vec>&)> exact_worst;  // certified
  std::function<void(std::vector<Vec>&, double)> push_out;     // repair step
};

inline double penalty_objective(const PenaltyProblem& pb,
                                const std::vector<Vec>& x, double mu,
                                std::vector<Vec>* grads) {
  double val = 0.0;
  if (grads) {
    for (std::size_t i = 0; i < x.size(); ++i) grads->at(i).setZero();
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (pb.rho[i] == kInf) continue;  // pinned points never move
    val += 0.5 * pb.rho[i] * (x[i] - pb.n[i]).squaredNorm();
    if (grads) grads->at(i) += pb.rho[i] * (x[i] - pb.n[i]);
  }
  for (int k = 0; k < pb.constraint_count; ++k) {
    std::vector<Vec> cgrad;
    if (grads) {
      cgrad.assign(x.size(), Vec::Zero(x[0].size()));
    }
    const double gap = pb.clearance(x, k, grads ? &cgrad : nullptr);
    if (gap < 0.0) {
      val += mu * gap * gap;
      if (grads) {
        for (std::size_t i = 0; i < x.size(); ++i) {
          grads->at(i) += (2.0 * mu * gap) * cgrad[i];
        }
      }
    }
  }
  return val;
}

inline double plain_objective(const PenaltyProblem& pb,
                              const std::vector<Vec>& x) {
  double val = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (pb.rho[i] == kInf) continue;
    val += 0.5 * pb.rho[i] * (x[i] - pb.n[i]).squaredNorm();
  }
  return val;
}

inline OracleResult run_penalty_oracle(const PenaltyProblem& pb, int restarts,
                                       int mu_stages, std::uint64_t seed,
                                       double feas_tol) {
  const int d = static_cast<int>(pb.n[0].size());
  const std::size_t np = pb.n.size();

  // Cheap exit: the messages themselves may already be feasible, and they
  // are the unconstrained optimum.
  if (pb.exact_worst(pb.n) >= 0.0) {
    OracleResult res;
    res.points = pb.n;
    res.objective = 0.0;
    return res;
  }

  double rho_scale = 0.0;
  for (double r : pb.rho) {
    if (std::isfinite(r)) rho_scale = std::max(rho_scale, r);
  }
  if (rho_scale <= 0.0) rho_scale = 1.0;

  OracleResult best;
  bool found = false;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int r = 0; r < restarts; ++r) {
    std::vector<Vec> x = pb.n;
    if (r > 0) {
      const double mag = 0.2 * pb.radius;
      for (std::size_t i = 0; i < np; ++i) {
        if (pb.rho[i] == kInf) continue;
        for (int k = 0; k < d; ++k) x[i][k] += mag * gauss(rng);
      }
    }

    double mu = 10.0 * rho_scale;
    std::vector<Vec> grads(np, Vec::Zero(d));
    for (int stage = 0; stage < mu_stages; ++stage, mu *= 10.0) {
      for (int it = 0; it < 80; ++it) {
        const double f0 = penalty_objective(pb, x, mu, &grads);
        double gnorm2 = 0.0;
        for (std::size_t i = 0; i < np; ++i) {
          if (pb.rho[i] == kInf) continue;
          gnorm2 += grads[i].squaredNorm();
        }
        if (gnorm2 < 1e-22 * (1.0 + f0)) break;
        double step = 1.0 / (rho_scale + mu);
        bool moved = false;
        for (int bt = 0; bt < 40; ++bt, step *= 0.5) {
          std::vector<Vec> trial = x;
          for (std::size_t i = 0; i < np; ++i) {
            if (pb.rho[i] == kInf) continue;
            trial[i] -= step * grads[i];
          }
          const double f1 = penalty_objective(pb, trial, mu, nullptr);
          if (f1 < f0 - 1e-4 * step * gnorm2) {
            x = std::move(trial);
            moved = true;
            break;
          }
        }
        if (!moved) break;
      }
    }

    // Outward repair until the exact certificate passes.
    for (int rep = 0; rep < 64; ++rep) {
      const double worst = pb.exact_worst(x);
      if (worst >= feas_tol) break;
      pb.push_out(x, -worst + feas_tol);
    }
    if (pb.exact_worst(x) < 0.0) continue;

    const double obj = plain_objective(pb, x);
    if (!found || obj < best.objective) {
      best.points = x;
      best.objective = obj;
      found = true;
    }
  }

  if (!found) throw NoFeasiblePointError{};
  return best;
}

}  // namespace detail

// Numerical oracle for the agent-agent operator. Independent of the closed
// form: plain gradient descent on the penalized objective over a fraction
// grid.
inline OracleResult penalty_oracle(const CollisionQuery& q, int restarts = 10,
                                   int mu_stages = 6,
                                   std::uint64_t seed = 0x9e3779b9) {
  constexpr int kGrid = 33;
  detail::PenaltyProblem pb;
  pb.n = {q.n_lo, q.n_lo_p, q.n_hi, q.n_hi_p};
  pb.rho = {q.rho_lo, q.rho_lo_p, q.rho_hi, q.rho_hi_p};
  pb.radius = q.radius_sum;
  pb.constraint_count = kGrid;
  const double R = q.radius_sum;

  pb.clearance = [R](const std::vector<Vec>& x, int k,
                     std::vector<Vec>* grads) {
    const double alpha = static_cast<double>(k) / (kGrid - 1);
    const double beta = 1.0 - alpha;
    const Vec v = alpha * (x[0] - x[1]) + beta * (x[2] - x[3]);
    const double dist = v.norm();
    if (grads && dist > 0.0) {
      const Vec dir = v / dist;
      grads->at(0) = alpha * dir;
      grads->at(1) = -alpha * dir;
      grads->at(2) = beta * dir;
      grads->at(3) = -beta * dir;
    }
    return dist - R;
  };
  pb.exact_worst = [R](const std::vector<Vec>& x) {
    return sip_feasible(x[0], x[1], x[2], x[3], R, 257, 0.0).worst_clearance;
  };
  pb.push_out = [R](std::vector<Vec>& x, double amount) {
    const FeasibilityReport rep =
        sip_feasible(x[0], x[1], x[2], x[3], R, 257, 0.0);
    const double alpha = rep.worst_alpha;
    const double beta = 1.0 - alpha;
    Vec v = alpha * (x[0] - x[1]) + beta * (x[2] - x[3]);
    double dist = v.norm();
    Vec dir;
    if (dist > 1e-14 * R) {
      dir = v / dist;
    } else {
      dir = Vec::Zero(x[0].size());
      dir[0] = 1.0;
    }
    const double denom = 2.0 * (alpha * alpha + beta * beta);
    const double delta = amount / denom * 1.0000001;
    x[0] += alpha * delta * dir;
    x[1] -= alpha * delta * dir;
    x[2] += beta * delta * dir;
    x[3] -= beta * delta * dir;
  };

  return detail::run_penalty_oracle(pb, restarts, mu_stages, seed, 0.0);
}

// Same oracle for the wall operator; only the agent endpoints move.
inline OracleResult penalty_oracle(const WallQuery& q, int restarts = 10,
                                   int mu_stages = 6,
                                   std::uint64_t seed = 0x51ed2701) {
  constexpr int kGrid = 17;  // (alpha, beta) product grid
  detail::PenaltyProblem pb;
  pb.n = {q.n_lo, q.n_hi};
  pb.rho = {q.rho_lo, q.rho_hi};
  pb.radius = q.effective_radius();
  pb.constraint_count = kGrid * kGrid;
  const double R = q.effective_radius();
  const Obstacle o = q.obstacle;

  pb.clearance = [R, o](const std::vector<Vec>& x, int k,
                        std::vector<Vec>* grads) {
    const double alpha = static_cast<double>(k / kGrid) / (kGrid - 1);
    const double beta = static_cast<double>(k % kGrid) / (kGrid - 1);
    const Vec v =
        alpha * x[0] + (1.0 - alpha) * x[1] - wall_point(o, beta);
    const double dist = v.norm();
    if (grads && dist > 0.0) {
      const Vec dir = v / dist;
      grads->at(0) = alpha * dir;
      grads->at(1) = (1.0 - alpha) * dir;
    }
    return dist - R;
  };
  pb.exact_worst = [R, o, &q](const std::vector<Vec>& x) {
    return wall_feasible(x[0], x[1], o, q.agent_radius, 65, 0.0)
        .worst_clearance;
  };
  pb.push_out = [R, o](std::vector<Vec>& x, double amount) {
    double s = 0.0, t = 0.0;
    detail::segment_segment_distance(x[1], x[0], o.b, o.a, &s, &t);
    const double alpha = s, beta = t;
    Vec v = alpha * x[0] + (1.0 - alpha) * x[1] - wall_point(o, beta);
    double dist = v.norm();
    Vec dir;
    if (dist > 1e-14 * R) {
      dir = v / dist;
    } else {
      dir = Vec::Zero(x[0].size());
      dir[x[0].size() - 1] = 1.0;
    }
    const double denom = alpha * alpha + (1.0 - alpha) * (1.0 - alpha);
    const double delta = amount / denom * 1.0000001;
    x[0] += alpha * delta * dir;
    x[1] += (1.0 - alpha) * delta * dir;
  };

  return detail::run_penalty_oracle(pb, restarts, mu_stages, seed, 0.0);
}

// Whole-solution certificate: every agent pair on every segment plus every
// agent-obstacle pair. Witnesses identify the worst offender.
struct PathFeasibilityReport {
  bool feasible = true;
  double worst_pair_clearance = kInf;
  double worst_wall_clearance = kInf;
  int pair_agent_a = -1, pair_agent_b = -1, pair_segment = -1;
  double pair_alpha = 0.0;
  int wall_obstacle = -1, wall_agent = -1, wall_segment = -1;

  std::string witness() const {
    std::string s;
    if (pair_agent_a >= 0) {
      s += "pair (" + std::to_string(pair_agent_a) + "," +
           std::to_string(pair_agent_b) + ") segment " +
           std::to_string(pair_segment) + " alpha " +
           std::to_string(pair_alpha);
    }
    if (wall_obstacle >= 0) {
      if (!s.empty()) s += "; ";
      s += "obstacle " + std::to_string(wall_obstacle) + " agent " +
           std::to_string(wall_agent) + " segment " +
           std::to_string(wall_segment);
    }
    return s;
  }
};

inline PathFeasibilityReport path_feasibility(const std::vector<Path>& paths,
                                              const Scenario& scenario,
                                              double tol = 1e-6) {
  PathFeasibilityReport rep;
  const int p = static_cast<int>(paths.size());
  const int segs = paths.empty() ? 0 : static_cast<int>(paths[0].size()) - 1;

  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      const double radius_sum =
          scenario.agents[i].radius + scenario.agents[j].radius;
      for (int s = 0; s < segs; ++s) {
        const FeasibilityReport r =
            sip_feasible(paths[i][s], paths[j][s], paths[i][s + 1],
                         paths[j][s + 1], radius_sum, 257, tol);
        if (r.worst_clearance < rep.worst_pair_clearance) {
          rep.worst_pair_clearance = r.worst_clearance;
          rep.pair_agent_a = i;
          rep.pair_agent_b = j;
          rep.pair_segment = s;
          rep.pair_alpha = r.worst_alpha;
        }
      }
    }
  }
  for (std::size_t w = 0; w < scenario.obstacles.size(); ++w) {
    for (int i = 0; i < p; ++i) {
      for (int s = 0; s < segs; ++s) {
        const FeasibilityReport r =
            wall_feasible(paths[i][s], paths[i][s + 1], scenario.obstacles[w],
                          scenario.agents[i].radius, 65, tol);
        if (r.worst_clearance < rep.worst_wall_clearance) {
          rep.worst_wall_clearance = r.worst_clearance;
          rep.wall_obstacle = static_cast<int>(w);
          rep.wall_agent = i;
          rep.wall_segment = s;
        }
      }
    }
  }

  rep.feasible = rep.worst_pair_clearance >= -tol &&
                 rep.worst_wall_clearance >= -tol;
  return rep;
}

}  // namespace proxpath
