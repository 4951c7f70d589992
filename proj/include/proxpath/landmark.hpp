#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "proxpath/assignment.hpp"
#include "proxpath/types.hpp"

namespace proxpath {

// Landmark proximal operators. A landmark group offers m reference
// trajectories over a break-point window; the operator decides which agent
// (if any) follows each trajectory by solving a linear assignment problem
// over the quadratic costs left after blending, then outputs the blended
// positions. The shared variant also exchanges assignment beliefs encoded
// as length-(p+1) vectors, the last slot meaning "unassigned".

struct SigmaMessage {
  Vec values;          // length p + 1
  double weight = 0.0;
};

// n[i][t] and rho[i][t]: message and weight for agent i at window offset t.
using WindowMessages = std::vector<std::vector<Vec>>;
using WindowWeights = std::vector<std::vector<double>>;

struct LandmarkResult {
  WindowMessages x;                 // blended outputs, same shape as n
  AssignmentVec assignment;        // per trajectory: agent or kUnassigned
  std::vector<Vec> sigma;          // one-hot sigma estimates (shared form)
  double assignment_total = 0.0;
};

namespace detail {

// Residual cost weight of one matched point after optimal blending:
// min_x c ||x - y||^2 + rho/2 ||x - n||^2 = kappa(rho, c) ||n - y||^2.
inline double blend_cost_weight(double rho, double c) {
  if (c == 0.0 || rho == 0.0) return 0.0;
  if (c == kInf) return rho == kInf ? kInf : 0.5 * rho;
  if (rho == kInf) return c;
  return rho * c / (2.0 * c + rho);
}

inline Vec blend_point(const Vec& n, double rho, const Vec& y, double c) {
  if (c == 0.0 || rho == kInf) return n;
  if (c == kInf || rho == 0.0) return y;
  return (rho * n + 2.0 * c * y) / (2.0 * c + rho);
}

inline Vec one_hot(int size, int index) {
  Vec v = Vec::Zero(size);
  v[index] = 1.0;
  return v;
}

}  // namespace detail

// Assignment costs for one group given per-agent, per-offset weights.
inline CostMatrix build_cost_matrix(const WindowMessages& n,
                                    const WindowWeights& rho,
                                    const LandmarkGroup& g) {
  const int p = static_cast<int>(n.size());
  const int m = static_cast<int>(g.trajectories.size());
  const int span = g.span();
  CostMatrix cm;
  cm.costs = Eigen::MatrixXd::Zero(m, p);
  cm.skip_costs = Eigen::VectorXd::Zero(m);
  for (int j = 0; j < m; ++j) {
    const LandmarkTrajectory& traj = g.trajectories[j];
    cm.skip_costs(j) = traj.skip_cost;
    for (int i = 0; i < p; ++i) {
      double w = 0.0;
      for (int t = 0; t < span; ++t) {
        const double kappa =
            detail::blend_cost_weight(rho[i][t], traj.follow_costs[t]);
        if (kappa > 0.0) w += kappa * (n[i][t] - traj.points[t]).squaredNorm();
      }
      cm.costs(j, i) = w;
    }
  }
  return cm;
}

// Convenience overload: one weight per agent, constant over the window.
inline CostMatrix build_cost_matrix(const WindowMessages& n,
                                    const std::vector<double>& rho,
                                    const LandmarkGroup& g) {
  WindowWeights per_offset(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    per_offset[i].assign(n[i].size(), rho[i]);
  }
  return build_cost_matrix(n, per_offset, g);
}

namespace detail {

inline LandmarkResult landmark_prox_impl(const WindowMessages& n,
                                         const WindowWeights& rho,
                                         const LandmarkGroup& g,
                                         const std::vector<SigmaMessage>* sm) {
  const int p = static_cast<int>(n.size());
  const int m = static_cast<int>(g.trajectories.size());
  const int span = g.span();

  CostMatrix cm = build_cost_matrix(n, rho, g);
  if (sm != nullptr) {
    // One-hot distance expansion: ||e_i - n'||^2 = ||n'||^2 + 1 - 2 n'[i].
    for (int j = 0; j < m; ++j) {
      const SigmaMessage& msg = (*sm)[j];
      if (msg.weight == 0.0) continue;
      const double base = msg.values.squaredNorm() + 1.0;
      for (int i = 0; i < p; ++i) {
        cm.costs(j, i) += 0.5 * msg.weight * (base - 2.0 * msg.values[i]);
      }
      cm.skip_costs(j) += 0.5 * msg.weight * (base - 2.0 * msg.values[p]);
    }
  }

  AssignmentResult solved = hungarian_solve(cm);

  LandmarkResult out;
  out.assignment = solved.assignment;
  out.assignment_total = solved.total;
  out.x.resize(p);
  for (int i = 0; i < p; ++i) out.x[i] = n[i];

  for (int j = 0; j < m; ++j) {
    const int agent = solved.assignment.sigma[j];
    if (agent == kUnassigned) continue;
    const LandmarkTrajectory& traj = g.trajectories[j];
    for (int t = 0; t < span; ++t) {
      out.x[agent][t] = detail::blend_point(n[agent][t], rho[agent][t],
                                            traj.points[t],
                                            traj.follow_costs[t]);
    }
  }

  if (sm != nullptr) {
    out.sigma.resize(m);
    for (int j = 0; j < m; ++j) {
      const int agent = solved.assignment.sigma[j];
      out.sigma[j] =
          detail::one_hot(p + 1, agent == kUnassigned ? p : agent);
    }
  }
  return out;
}

}  // namespace detail

// Plain group operator: assignment is internal, unmatched agents echo
// their messages unchanged.
inline LandmarkResult landmark_prox(const WindowMessages& n,
                                    const WindowWeights& rho,
                                    const LandmarkGroup& g) {
  return detail::landmark_prox_impl(n, rho, g, nullptr);
}

inline LandmarkResult landmark_prox(const WindowMessages& n,
                                    const std::vector<double>& rho,
                                    const LandmarkGroup& g) {
  WindowWeights per_offset(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    per_offset[i].assign(n[i].size(), rho[i]);
  }
  return detail::landmark_prox_impl(n, per_offset, g, nullptr);
}

// Shared-assignment variant: the incoming sigma beliefs tilt the costs and
// the chosen assignment is emitted as one-hot vectors.
inline LandmarkResult landmark_prox_shared(
    const WindowMessages& n, const WindowWeights& rho, const LandmarkGroup& g,
    const std::vector<SigmaMessage>& sigma_msgs) {
  return detail::landmark_prox_impl(n, rho, g, &sigma_msgs);
}

inline LandmarkResult landmark_prox_shared(
    const WindowMessages& n, const std::vector<double>& rho,
    const LandmarkGroup& g, const std::vector<SigmaMessage>& sigma_msgs) {
  WindowWeights per_offset(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    per_offset[i].assign(n[i].size(), rho[i]);
  }
  return detail::landmark_prox_impl(n, per_offset, g, &sigma_msgs);
}

// Equality operator tying two shared assignment variables together. Both
// outputs are the same one-hot vector, peaked at the agent with the best
// combined belief; the unassigned slot never wins. Ties go to the smallest
// agent index.
inline std::pair<Vec, Vec> sigma_equality_prox(const SigmaMessage& a,
                                               const SigmaMessage& b) {
  const int p = static_cast<int>(a.values.size()) - 1;
  int best = 0;
  double best_score = -kInf;
  for (int i = 0; i < p; ++i) {
    const double score = a.weight * a.values[i] + b.weight * b.values[i];
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  Vec hot = detail::one_hot(p + 1, best);
  return {hot, hot};
}

}  // namespace proxpath
