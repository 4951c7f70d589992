#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>

#include "proxpath/types.hpp"

namespace proxpath {

// Agent-agent no-collision proximal operator.
//
// Two spherical agents move on straight segments between consecutive
// break-points. Given consensus messages for the four segment endpoints,
// the operator returns the cheapest weighted perturbation whose linear
// interpolants keep the agents at least radius_sum apart at every
// interpolation fraction. The continuum of constraints collapses to the
// single worst fraction alpha*, located by maximizing the scalar profile
// h(alpha); the single-constraint problem at fixed alpha has a closed form.

struct CollisionQuery {
  Vec n_lo, n_lo_p, n_hi, n_hi_p;  // messages: agent/other at low/high end
  double rho_lo = 1.0, rho_lo_p = 1.0, rho_hi = 1.0, rho_hi_p = 1.0;
  double radius_sum = 1.0;
};

enum class CaseClass { Trivial, EasyAt0, EasyAt1, Expensive };

struct CollisionResult {
  Vec x_lo, x_lo_p, x_hi, x_hi_p;
  double alpha_star = 0.0;
  double h_star = 0.0;
  CaseClass case_class = CaseClass::Trivial;
  std::array<bool, 4> changed{false, false, false, false};
};

// Reduced data for evaluating h: endpoint message differences and the
// harmonic weight pair per break-point.
struct HParams {
  Vec dn_lo;  // n_lo - n_lo_p
  Vec dn_hi;  // n_hi - n_hi_p
  double rho_u = 1.0;  // (rho_lo^-1 + rho_lo_p^-1)^-1
  double rho_o = 1.0;  // (rho_hi^-1 + rho_hi_p^-1)^-1
  double radius_sum = 1.0;
};

namespace detail {

inline double golden_max(const std::function<double(double)>& f, double a,
                         double b, double width_tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - (b - a) * kInvPhi;
  double d = a + (b - a) * kInvPhi;
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200 && (b - a) > width_tol; ++it) {
    if (fc >= fd) {  // keep the left interval on ties: smallest maximizer
      b = d;
      d = c;
      fd = fc;
      c = b - (b - a) * kInvPhi;
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + (b - a) * kInvPhi;
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Positive weights only: callers replace zeros before building HParams.
inline double harmonic_pair(double rho_a, double rho_b) {
  const double inv = (rho_a == kInf ? 0.0 : 1.0 / rho_a) +
                     (rho_b == kInf ? 0.0 : 1.0 / rho_b);
  return inv == 0.0 ? kInf : 1.0 / inv;
}

inline std::uint64_t fnv1a(std::uint64_t h, const double* data,
                           std::size_t n) {
  const unsigned char* bytes = reinterpret_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t query_hash(const CollisionQuery& q) {
  std::uint64_t h = 1469598103934665603ULL;
  h = fnv1a(h, q.n_lo.data(), q.n_lo.size());
  h = fnv1a(h, q.n_lo_p.data(), q.n_lo_p.size());
  h = fnv1a(h, q.n_hi.data(), q.n_hi.size());
  h = fnv1a(h, q.n_hi_p.data(), q.n_hi_p.size());
  const double scal[5] = {q.rho_lo, q.rho_lo_p, q.rho_hi, q.rho_hi_p,
                          q.radius_sum};
  return fnv1a(h, scal, 5);
}

}  // namespace detail

// Feasibility of x = n: the segment from dn_lo to dn_hi must stay outside
// the open origin-centered ball of radius radius_sum. Returns the clamped
// fraction of closest approach alongside the verdict.
inline std::pair<bool, double> trivial_check(const Vec& dn_lo,
                                             const Vec& dn_hi,
                                             double radius_sum) {
  const double seg2 = (dn_hi - dn_lo).squaredNorm();
  double alpha_hat = 0.0;
  if (seg2 > 0.0) {
    alpha_hat = std::min(1.0, std::max(0.0, dn_hi.dot(dn_hi - dn_lo) / seg2));
  }
  const double closest =
      (alpha_hat * dn_lo + (1.0 - alpha_hat) * dn_hi).norm();
  return {closest >= radius_sum, alpha_hat};
}

// Square-root-scaled minimum value of the single-alpha problem.
inline double h_alpha(double alpha, const HParams& p) {
  const double dist = (alpha * p.dn_lo + (1.0 - alpha) * p.dn_hi).norm();
  const double deficit = p.radius_sum - dist;
  if (deficit <= 0.0) return 0.0;
  const double scale2 = alpha * alpha / p.rho_u +
                        (1.0 - alpha) * (1.0 - alpha) / p.rho_o;
  if (scale2 <= 0.0) return kInf;  // both break-points pinned
  return deficit / std::sqrt(scale2);
}

// Input triage. The endpoint slopes of the smooth part of h decide whether
// the maximizer sits at a boundary: a profile rising at both ends peaks at
// alpha = 1, one falling at both ends peaks at alpha = 0 (h has at most one
// interior extremum). Mixed or undefined signs fall through to the full
// maximization. rise_at_k is proportional to dh/dalpha at k by a positive
// factor.
inline CaseClass classify(const CollisionQuery& q) {
  const Vec dn_lo = q.n_lo - q.n_lo_p;
  const Vec dn_hi = q.n_hi - q.n_hi_p;
  if (trivial_check(dn_lo, dn_hi, q.radius_sum).first)
    return CaseClass::Trivial;

  const double norm_hi = dn_hi.norm();
  const double norm_lo = dn_lo.norm();
  if (norm_hi == 0.0 || norm_lo == 0.0) return CaseClass::Expensive;

  const double R = q.radius_sum;
  const double rise_at_0 =
      (R - norm_hi) - dn_hi.dot(dn_lo - dn_hi) / norm_hi;
  const double rise_at_1 =
      (norm_lo - R) - dn_lo.dot(dn_lo - dn_hi) / norm_lo;
  if (!std::isfinite(rise_at_0) || !std::isfinite(rise_at_1))
    return CaseClass::Expensive;
  if (rise_at_0 > 0.0 && rise_at_1 > 0.0) return CaseClass::EasyAt1;
  if (rise_at_0 < 0.0 && rise_at_1 < 0.0) return CaseClass::EasyAt0;
  return CaseClass::Expensive;
}

// Global maximization of h over [0,1]. The deficit is positive exactly
// where the quadratic ||alpha dn_lo + (1-alpha) dn_hi||^2 < R^2 holds, so
// the support interval comes from its roots; a 33-point grid over the
// support (guards against multimodality) seeds golden-section refinement of
// the bracketing cell. Ties resolve to the smallest alpha.
inline std::pair<double, double> maximize_h(const HParams& p,
                                            double tol = 1e-10) {
  const Vec seg = p.dn_lo - p.dn_hi;
  const double a2 = seg.squaredNorm();
  const double b = 2.0 * p.dn_hi.dot(seg);
  const double c =
      p.dn_hi.squaredNorm() - p.radius_sum * p.radius_sum;
  double lo = 0.0, hi = 1.0;
  bool cleared = false;
  if (a2 > 0.0) {
    const double disc = b * b - 4.0 * a2 * c;
    if (disc <= 0.0) {
      cleared = true;  // the segment never enters the open ball
    } else {
      const double root = std::sqrt(disc);
      lo = std::max(0.0, (-b - root) / (2.0 * a2));
      hi = std::min(1.0, (-b + root) / (2.0 * a2));
      cleared = lo >= hi;
    }
  } else {
    cleared = c >= 0.0;  // constant separation
  }
  if (cleared) {
    // Flat zero profile: report the closest-approach fraction.
    return {trivial_check(p.dn_lo, p.dn_hi, p.radius_sum).second, 0.0};
  }

  constexpr int kCoarse = 33;
  const double cell = (hi - lo) / (kCoarse - 1);
  double best_h = -1.0;
  int best_i = 0;
  for (int i = 0; i < kCoarse; ++i) {
    const double h = h_alpha(lo + i * cell, p);
    if (h > best_h) {
      best_h = h;
      best_i = i;
    }
  }
  if (best_h <= 0.0) {
    return {trivial_check(p.dn_lo, p.dn_hi, p.radius_sum).second, 0.0};
  }
  const double bracket_lo = lo + std::max(0, best_i - 1) * cell;
  const double bracket_hi = lo + std::min(kCoarse - 1, best_i + 1) * cell;
  const double width = std::clamp(tol, 1e-13, 1e-7) * std::max(1.0, hi - lo);
  const double alpha = detail::golden_max(
      [&p](double a) { return h_alpha(a, p); }, bracket_lo, bracket_hi,
      width);
  const double h_at = h_alpha(alpha, p);
  if (best_h > h_at) {  // never return worse than the grid
    return {lo + best_i * cell, best_h};
  }
  return {alpha, h_at};
}

namespace detail {

// Closed-form minimizer of the fixed-alpha problem, written with inverse
// weights so pinned points (rho = inf) drop out naturally.
inline CollisionResult solve_single_alpha_impl(const CollisionQuery& q,
                                               double alpha,
                                               CaseClass case_class) {
  const double R = q.radius_sum;
  double rho_ref = 0.0;
  for (double r : {q.rho_lo, q.rho_lo_p, q.rho_hi, q.rho_hi_p}) {
    if (r > rho_ref && std::isfinite(r)) rho_ref = r;
  }
  if (rho_ref <= 0.0) rho_ref = 1.0;
  const double eps_rho = 1e-8 * rho_ref;
  std::array<double, 4> inv{};
  std::array<bool, 4> was_zero{};
  const std::array<double, 4> rho{q.rho_lo, q.rho_lo_p, q.rho_hi, q.rho_hi_p};
  for (int k = 0; k < 4; ++k) {
    was_zero[k] = rho[k] <= 0.0;
    inv[k] = rho[k] == kInf ? 0.0 : 1.0 / (was_zero[k] ? eps_rho : rho[k]);
  }

  CollisionResult out;
  out.case_class = case_class;
  out.alpha_star = alpha;
  out.x_lo = q.n_lo;
  out.x_lo_p = q.n_lo_p;
  out.x_hi = q.n_hi;
  out.x_hi_p = q.n_hi_p;

  const double beta = 1.0 - alpha;
  const Vec axis = alpha * (q.n_lo - q.n_lo_p) + beta * (q.n_hi - q.n_hi_p);
  const double dist = axis.norm();
  const double scale2 =
      alpha * alpha * (inv[0] + inv[1]) + beta * beta * (inv[2] + inv[3]);
  if (scale2 == 0.0) {
    // All four endpoints pinned: nothing can move.
    out.h_star = dist >= R ? 0.0 : kInf;
    return out;
  }
  const double deficit = R - dist;
  if (deficit <= 0.0) {
    out.h_star = 0.0;
    return out;
  }
  if (dist < 1e-12 * R) throw DegenerateAxisError{};

  const double root_scale = std::sqrt(scale2);
  const double h = deficit / root_scale;
  const double lambda = -h / (2.0 * R * root_scale);
  const double gamma = 2.0 * lambda / (1.0 + 2.0 * lambda * scale2);
  out.h_star = h;

  out.x_lo -= (gamma * inv[0] * alpha) * axis;
  out.x_lo_p += (gamma * inv[1] * alpha) * axis;
  out.x_hi -= (gamma * inv[2] * beta) * axis;
  out.x_hi_p += (gamma * inv[3] * beta) * axis;

  const std::array<const Vec*, 4> xs{&out.x_lo, &out.x_lo_p, &out.x_hi,
                                     &out.x_hi_p};
  const std::array<const Vec*, 4> ns{&q.n_lo, &q.n_lo_p, &q.n_hi, &q.n_hi_p};
  for (int k = 0; k < 4; ++k) {
    const double moved = (*xs[k] - *ns[k]).lpNorm<Eigen::Infinity>();
    out.changed[k] = moved > (was_zero[k] ? 1e-8 * R : 1e-12);
  }
  return out;
}

inline HParams hparams_with_floor(const CollisionQuery& q) {
  double rho_ref = 0.0;
  for (double r : {q.rho_lo, q.rho_lo_p, q.rho_hi, q.rho_hi_p}) {
    if (r > rho_ref && std::isfinite(r)) rho_ref = r;
  }
  if (rho_ref <= 0.0) rho_ref = 1.0;
  const double eps_rho = 1e-8 * rho_ref;
  auto floored = [eps_rho](double r) { return r <= 0.0 ? eps_rho : r; };
  HParams p;
  p.dn_lo = q.n_lo - q.n_lo_p;
  p.dn_hi = q.n_hi - q.n_hi_p;
  p.rho_u = harmonic_pair(floored(q.rho_lo), floored(q.rho_lo_p));
  p.rho_o = harmonic_pair(floored(q.rho_hi), floored(q.rho_hi_p));
  p.radius_sum = q.radius_sum;
  return p;
}

}  // namespace detail

// Minimizer of the single-constraint problem at a fixed alpha. Requires a
// non-degenerate axis; callers that cannot guarantee one should go through
// solve_collision_prox, which retries under perturbation.
inline CollisionResult solve_single_alpha(const CollisionQuery& q,
                                          double alpha) {
  return detail::solve_single_alpha_impl(q, alpha, CaseClass::Expensive);
}

// Full operator: triage, locate the binding fraction, apply the closed
// form. Degenerate axes are broken by seeded noise on the messages.
inline CollisionResult solve_collision_prox(const CollisionQuery& q) {
  CollisionQuery work = q;
  const double noise_mag = 1e-9 * q.radius_sum;
  for (int attempt = 0;; ++attempt) {
    try {
      const CaseClass cc = classify(work);
      if (cc == CaseClass::Trivial) {
        CollisionResult out;
        out.case_class = cc;
        out.x_lo = work.n_lo;
        out.x_lo_p = work.n_lo_p;
        out.x_hi = work.n_hi;
        out.x_hi_p = work.n_hi_p;
        out.alpha_star =
            trivial_check(work.n_lo - work.n_lo_p, work.n_hi - work.n_hi_p,
                          work.radius_sum)
                .second;
        out.h_star = 0.0;
        return out;
      }
      double alpha = 0.0;
      if (cc == CaseClass::EasyAt1) {
        alpha = 1.0;
      } else if (cc == CaseClass::Expensive) {
        alpha = maximize_h(detail::hparams_with_floor(work)).first;
      }
      return detail::solve_single_alpha_impl(work, alpha, cc);
    } catch (const DegenerateAxisError&) {
      if (attempt >= 3) throw;
      std::mt19937_64 rng(detail::query_hash(q) + attempt);
      std::uniform_real_distribution<double> u(-noise_mag, noise_mag);
      for (Vec* v : {&work.n_lo, &work.n_lo_p, &work.n_hi, &work.n_hi_p}) {
        for (Eigen::Index k = 0; k < v->size(); ++k) (*v)[k] += u(rng);
      }
    }
  }
}

}  // namespace proxpath
