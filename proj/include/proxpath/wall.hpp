#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

#include "proxpath/collision.hpp"
#include "proxpath/types.hpp"

namespace proxpath {

// Wall-agent proximal operator: keeps one agent's segment at least
// radius + thickness away from every point of a segment obstacle. The wall
// enters as an immovable second body, so the problem is the agent-agent one
// with the other agent's messages replaced by a wall point w(beta) and its
// weights sent to infinity. Valid for d >= 3 only.

struct WallQuery {
  Vec n_lo, n_hi;
  double rho_lo = 1.0, rho_hi = 1.0;
  Obstacle obstacle;
  double agent_radius = 1.0;

  double effective_radius() const {
    return agent_radius + obstacle.thickness;
  }
};

struct WallResult {
  Vec x_lo, x_hi;
  double alpha_star = 0.0;
  double beta_star = 0.0;
  double h_star = 0.0;
  bool changed_lo = false;
  bool changed_hi = false;
};

namespace detail {

inline double wall_rho_floor(const WallQuery& q) {
  double rho_ref = 0.0;
  for (double r : {q.rho_lo, q.rho_hi}) {
    if (r > rho_ref && std::isfinite(r)) rho_ref = r;
  }
  return 1e-8 * (rho_ref > 0.0 ? rho_ref : 1.0);
}

// Exact minimum distance between segments [p0,p1] and [q0,q1]; returns the
// minimizing interpolation fractions as well. Standard clamped quadratic.
inline double segment_segment_distance(const Vec& p0, const Vec& p1,
                                       const Vec& q0, const Vec& q1,
                                       double* s_out = nullptr,
                                       double* t_out = nullptr) {
  const Vec d1 = p1 - p0;
  const Vec d2 = q1 - q0;
  const Vec r = p0 - q0;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  double s = 0.0, t = 0.0;
  if (a == 0.0 && e == 0.0) {
    // both degenerate
  } else if (a == 0.0) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e == 0.0) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom != 0.0 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  if (s_out) *s_out = s;
  if (t_out) *t_out = t;
  return (p0 + s * d1 - (q0 + t * d2)).norm();
}

}  // namespace detail

inline Vec wall_point(const Obstacle& o, double beta) {
  return beta * o.a + (1.0 - beta) * o.b;
}

// Profile value at a fixed (alpha, beta): the agent-agent h with the other
// body pinned at w(beta).
inline double h_wall(double alpha, double beta, const WallQuery& q) {
  const double eps = detail::wall_rho_floor(q);
  const Vec w = wall_point(q.obstacle, beta);
  HParams p;
  p.dn_lo = q.n_lo - w;
  p.dn_hi = q.n_hi - w;
  p.rho_u = q.rho_lo <= 0.0 ? eps : q.rho_lo;
  p.rho_o = q.rho_hi <= 0.0 ? eps : q.rho_hi;
  p.radius_sum = q.effective_radius();
  return h_alpha(alpha, p);
}

// Maximizes h over the (alpha, beta) unit square, then applies the closed
// form with the wall side immovable. For fixed alpha the profile's scale
// factor is beta-free, so the best beta is the clamped projection of the
// path point onto the wall segment; what remains is a 1-D maximization in
// alpha over the analytically bracketed sub-clearance interval.
inline WallResult solve_wall_prox(const WallQuery& q) {
  const int d = static_cast<int>(q.n_lo.size());
  if (d < 3) throw DimensionTooLowError(d);

  const double R = q.effective_radius();
  WallQuery work = q;
  const double noise_mag = 1e-9 * R;

  for (int attempt = 0;; ++attempt) {
    WallResult out;
    out.x_lo = work.n_lo;
    out.x_hi = work.n_hi;

    // Feasibility of x = n is an exact segment-to-segment distance test.
    double s_path = 0.0, t_wall = 0.0;
    const double clear = detail::segment_segment_distance(
        work.n_hi, work.n_lo, work.obstacle.b, work.obstacle.a, &s_path,
        &t_wall);
    if (clear >= R) {
      out.alpha_star = s_path;  // fraction of closest approach
      out.beta_star = t_wall;
      out.h_star = 0.0;
      return out;
    }

    const Vec wall_dir = work.obstacle.a - work.obstacle.b;
    const double wall_len2 = wall_dir.squaredNorm();
    auto best_beta = [&](double alpha) {
      if (wall_len2 == 0.0) return 0.0;
      const Vec point = alpha * work.n_lo + (1.0 - alpha) * work.n_hi;
      return std::clamp((point - work.obstacle.b).dot(wall_dir) / wall_len2,
                        0.0, 1.0);
    };
    auto dist_at = [&](double alpha) {
      const Vec point = alpha * work.n_lo + (1.0 - alpha) * work.n_hi;
      return (point - wall_point(work.obstacle, best_beta(alpha))).norm();
    };
    auto profile = [&](double alpha) {
      return h_wall(alpha, best_beta(alpha), work);
    };

    // Sub-clearance support: distance to the segment is convex in alpha, so
    // its dip below R is one interval around the closest approach s_path.
    auto bisect_boundary = [&](double inside, double outside) {
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (inside + outside);
        (dist_at(mid) < R ? inside : outside) = mid;
      }
      return inside;
    };
    double lo = dist_at(0.0) < R ? 0.0 : bisect_boundary(s_path, 0.0);
    double hi = dist_at(1.0) < R ? 1.0 : bisect_boundary(s_path, 1.0);
    if (lo > hi) std::swap(lo, hi);

    constexpr int kCoarse = 33;
    const double cell = (hi - lo) / (kCoarse - 1);
    double best_h = -1.0;
    int best_i = 0;
    for (int i = 0; i < kCoarse; ++i) {
      const double h = profile(lo + i * cell);
      if (h > best_h) {
        best_h = h;
        best_i = i;
      }
    }
    double alpha = lo + best_i * cell;
    if (best_h > 0.0) {
      const double refined = detail::golden_max(
          profile, lo + std::max(0, best_i - 1) * cell,
          lo + std::min(kCoarse - 1, best_i + 1) * cell, 1e-12);
      if (profile(refined) >= best_h) alpha = refined;
    }
    const double beta = best_beta(alpha);

    const double eps = detail::wall_rho_floor(work);
    const double inv_lo = 1.0 / (work.rho_lo <= 0.0 ? eps : work.rho_lo);
    const double inv_hi = 1.0 / (work.rho_hi <= 0.0 ? eps : work.rho_hi);
    const Vec w = wall_point(work.obstacle, beta);
    const double ba = 1.0 - alpha;
    const Vec axis = alpha * (work.n_lo - w) + ba * (work.n_hi - w);
    const double dist = axis.norm();
    const double deficit = R - dist;
    out.alpha_star = alpha;
    out.beta_star = beta;
    if (deficit <= 0.0) {
      out.h_star = 0.0;
      return out;
    }
    if (dist < 1e-12 * R) {
      if (attempt >= 3) throw DegenerateAxisError{};
      std::mt19937_64 rng(detail::fnv1a(0x77a11ULL, work.n_lo.data(),
                                        work.n_lo.size()) +
                          attempt);
      std::uniform_real_distribution<double> u(-noise_mag, noise_mag);
      for (Vec* v : {&work.n_lo, &work.n_hi}) {
        for (Eigen::Index k = 0; k < v->size(); ++k) (*v)[k] += u(rng);
      }
      continue;
    }

    const double scale2 = alpha * alpha * inv_lo + ba * ba * inv_hi;
    const double root_scale = std::sqrt(scale2);
    const double h = deficit / root_scale;
    const double lambda = -h / (2.0 * R * root_scale);
    const double gamma = 2.0 * lambda / (1.0 + 2.0 * lambda * scale2);
    out.h_star = h;
    out.x_lo -= (gamma * inv_lo * alpha) * axis;
    out.x_hi -= (gamma * inv_hi * ba) * axis;
    out.changed_lo =
        (out.x_lo - work.n_lo).lpNorm<Eigen::Infinity>() > 1e-12;
    out.changed_hi =
        (out.x_hi - work.n_hi).lpNorm<Eigen::Infinity>() > 1e-12;
    return out;
  }
}

}  // namespace proxpath
