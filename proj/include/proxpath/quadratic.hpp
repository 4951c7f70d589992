#pragma once

#include <array>
#include <cmath>
#include <utility>

#include "proxpath/types.hpp"

namespace proxpath {

// Closed-form proximal operators for the quadratic path costs: endpoint
// anchoring, kinetic-energy velocity penalty, and second-difference
// direction penalty. Every cost is a rank-one quadratic c * (b' x)^2 per
// coordinate, so the minimizer is one Sherman-Morrison step, stable for
// arbitrarily large c and for pinned (rho = inf) or opinion-free (rho = 0)
// points.

struct QuadPairQuery {
  Vec n_lo, n_hi;
  double rho_lo = 1.0, rho_hi = 1.0;
  double coeff = 1.0;
};

struct PairResult {
  Vec x_lo, x_hi;
};

struct TripleResult {
  Vec x0, x1, x2;
};

// Equality anchor: the output ignores the message entirely and carries an
// infinite outgoing weight.
inline std::pair<Vec, double> position_prox(const Vec& target) {
  return {target, kInf};
}

namespace detail {

// rho = 0 is treated as a vanishing opinion: the point becomes (almost)
// free and absorbs the correction.
inline double inv_weight(double rho, double rho_ref) {
  if (rho == kInf) return 0.0;
  if (rho <= 0.0) return 1.0 / (1e-12 * rho_ref);
  return 1.0 / rho;
}

inline double ref_weight(std::initializer_list<double> rhos) {
  double r = 0.0;
  for (double v : rhos) {
    if (std::isfinite(v) && v > r) r = v;
  }
  return r > 0.0 ? r : 1.0;
}

// Minimizes c * ||sum_k b_k x_k||^2 + sum_k rho_k/2 ||x_k - n_k||^2:
//   x_k = n_k - inv_k b_k gamma,  gamma = 2c (sum b_j n_j) / (1 + 2c S),
// with S = sum b_j^2 inv_j.
template <std::size_t K>
void rank_one_prox(const std::array<const Vec*, K>& n,
                   const std::array<double, K>& b,
                   const std::array<double, K>& inv, double c,
                   std::array<Vec, K>& x) {
  Vec stencil = b[0] * (*n[0]);
  double s = b[0] * b[0] * inv[0];
  for (std::size_t k = 1; k < K; ++k) {
    stencil += b[k] * (*n[k]);
    s += b[k] * b[k] * inv[k];
  }
  const double denom = 1.0 + 2.0 * c * s;
  for (std::size_t k = 0; k < K; ++k) {
    x[k] = *n[k] - (inv[k] * b[k] * 2.0 * c / denom) * stencil;
  }
}

}  // namespace detail

// Velocity penalty coeff * ||x_hi - x_lo||^2 blended against the messages.
// When max_speed > 0 the pair is afterwards projected onto
// ||x_hi - x_lo|| <= max_speed about its weight-averaged center.
inline PairResult velocity_prox(const QuadPairQuery& q,
                                double max_speed = 0.0) {
  PairResult out;
  if (q.coeff <= 0.0) {
    out.x_lo = q.n_lo;
    out.x_hi = q.n_hi;
  } else {
    const double rho_ref = detail::ref_weight({q.rho_lo, q.rho_hi});
    const std::array<double, 2> inv{detail::inv_weight(q.rho_lo, rho_ref),
                                    detail::inv_weight(q.rho_hi, rho_ref)};
    std::array<Vec, 2> x;
    detail::rank_one_prox<2>({&q.n_lo, &q.n_hi}, {-1.0, 1.0}, inv, q.coeff,
                             x);
    out.x_lo = std::move(x[0]);
    out.x_hi = std::move(x[1]);
  }

  if (max_speed > 0.0) {
    const Vec diff = out.x_hi - out.x_lo;
    const double len = diff.norm();
    if (len > max_speed) {
      const bool pin_lo = q.rho_lo == kInf;
      const bool pin_hi = q.rho_hi == kInf;
      const double scale = max_speed / len;
      if (pin_lo && pin_hi) {
        // both ends pinned; the cap cannot be honored
      } else if (pin_lo) {
        out.x_hi = out.x_lo + scale * diff;
      } else if (pin_hi) {
        out.x_lo = out.x_hi - scale * diff;
      } else {
        double w_lo = q.rho_lo, w_hi = q.rho_hi;
        if (w_lo + w_hi <= 0.0) w_lo = w_hi = 1.0;
        const Vec center =
            (w_lo * out.x_lo + w_hi * out.x_hi) / (w_lo + w_hi);
        out.x_lo = center + scale * (out.x_lo - center);
        out.x_hi = center + scale * (out.x_hi - center);
      }
    }
  }
  return out;
}

// Direction-change penalty coeff * ||x0 - 2 x1 + x2||^2.
inline TripleResult direction_prox(const Vec& n0, const Vec& n1,
                                   const Vec& n2, double rho0, double rho1,
                                   double rho2, double coeff) {
  TripleResult out;
  if (coeff <= 0.0) {
    out.x0 = n0;
    out.x1 = n1;
    out.x2 = n2;
    return out;
  }
  const double rho_ref = detail::ref_weight({rho0, rho1, rho2});
  const std::array<double, 3> inv{detail::inv_weight(rho0, rho_ref),
                                  detail::inv_weight(rho1, rho_ref),
                                  detail::inv_weight(rho2, rho_ref)};
  std::array<Vec, 3> x;
  detail::rank_one_prox<3>({&n0, &n1, &n2}, {1.0, -2.0, 1.0}, inv, coeff, x);
  out.x0 = std::move(x[0]);
  out.x1 = std::move(x[1]);
  out.x2 = std::move(x[2]);
  return out;
}

}  // namespace proxpath
