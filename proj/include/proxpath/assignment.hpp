#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "proxpath/types.hpp"

namespace proxpath {

// Optimal assignment of m landmark trajectories to p agents where any
// trajectory may instead be skipped at its own cost. Entry sigma[j] is the
// 0-based agent index or kUnassigned.

inline constexpr int kUnassigned = -1;

struct CostMatrix {
  Eigen::MatrixXd costs;       // m x p follow costs
  Eigen::VectorXd skip_costs;  // length m

  Eigen::Index rows() const { return costs.rows(); }
  Eigen::Index cols() const { return costs.cols(); }
};

struct AssignmentVec {
  std::vector<int> sigma;  // length m, entries in [0, p) or kUnassigned
};

struct AssignmentResult {
  AssignmentVec assignment;
  double total = 0.0;
};

namespace detail {

// Shortest-augmenting-path Hungarian method on a square matrix, O(n^3).
// Returns col_of_row. Deterministic for fixed input.
inline std::vector<int> hungarian_square(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const double big = std::numeric_limits<double>::max();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0), used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), big);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = big;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] >= 1) col_of_row[p[j] - 1] = j - 1;
  }
  return col_of_row;
}

// Square embedding: columns 0..p-1 are agents, columns p..p+m-1 are skip
// slots (any row j may take any skip slot at cost skip_costs[j]); dummy
// zero rows absorb whatever is left.
inline Eigen::MatrixXd embed_square(const CostMatrix& cm) {
  const int m = static_cast<int>(cm.rows());
  const int p = static_cast<int>(cm.cols());
  const int n = m + p;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < p; ++i) a(j, i) = cm.costs(j, i);
    for (int k = 0; k < m; ++k) a(j, p + k) = cm.skip_costs(j);
  }
  return a;
}

inline double assignment_total(const CostMatrix& cm,
                               const std::vector<int>& sigma) {
  double total = 0.0;
  for (std::size_t j = 0; j < sigma.size(); ++j) {
    total += sigma[j] == kUnassigned
                 ? cm.skip_costs(static_cast<Eigen::Index>(j))
                 : cm.costs(static_cast<Eigen::Index>(j), sigma[j]);
  }
  return total;
}

// Lexicographic key: agents order before the skip symbol.
inline int lex_key(int sigma_j, int p) {
  return sigma_j == kUnassigned ? p : sigma_j;
}

inline std::vector<int> extract_sigma(const std::vector<int>& col_of_row,
                                      int m, int p) {
  std::vector<int> sigma(m);
  for (int j = 0; j < m; ++j) {
    sigma[j] = col_of_row[j] < p ? col_of_row[j] : kUnassigned;
  }
  return sigma;
}

}  // namespace detail

// Exact optimum via the Hungarian method, with ties resolved to the
// lexicographically smallest assignment (agents before skip). The total is
// re-summed from the input matrix, so it matches the objective exactly.
inline AssignmentResult hungarian_solve(const CostMatrix& cm) {
  const int m = static_cast<int>(cm.rows());
  const int p = static_cast<int>(cm.cols());
  AssignmentResult out;
  if (m == 0) return out;

  Eigen::MatrixXd a = detail::embed_square(cm);
  std::vector<int> sigma =
      detail::extract_sigma(detail::hungarian_square(a), m, p);
  double best = detail::assignment_total(cm, sigma);

  // Canonicalization: for each row in turn, probe smaller values; accept a
  // value iff some completion still meets the optimal total.
  const double slack = 1e-12 * (1.0 + std::abs(best));
  double forbid = 0.0;
  for (int j = 0; j < m; ++j) forbid += cm.skip_costs(j);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < p; ++i) forbid = std::max(forbid, cm.costs(j, i));
  }
  forbid = 4.0 * (forbid + 1.0) * (m + p);

  for (int j = 0; j < m; ++j) {
    const int have = detail::lex_key(sigma[j], p);
    for (int cand = 0; cand < have; ++cand) {
      if (cand < p) {
        bool taken = false;
        for (int r = 0; r < j; ++r) taken |= sigma[r] == cand;
        if (taken) continue;
      }
      Eigen::MatrixXd trial = a;
      // freeze rows 0..j-1 at their committed value, row j at cand
      for (int r = 0; r <= j; ++r) {
        const int want = r < j ? detail::lex_key(sigma[r], p) : cand;
        for (int cidx = 0; cidx < m + p; ++cidx) {
          const bool ok = want < p ? cidx == want : cidx >= p;
          if (!ok) trial(r, cidx) = forbid;
        }
      }
      std::vector<int> probe =
          detail::extract_sigma(detail::hungarian_square(trial), m, p);
      for (int r = 0; r < j; ++r) probe[r] = sigma[r];
      probe[j] = cand < p ? cand : kUnassigned;
      const double total = detail::assignment_total(cm, probe);
      if (total <= best + slack) {
        sigma = probe;
        best = std::min(best, total);
        break;
      }
    }
  }

  out.assignment.sigma = std::move(sigma);
  out.total = detail::assignment_total(cm, out.assignment.sigma);
  return out;
}

// Exhaustive oracle for small instances; first optimum in lexicographic
// enumeration order wins.
inline AssignmentResult brute_force_solve(const CostMatrix& cm) {
  const int m = static_cast<int>(cm.rows());
  const int p = static_cast<int>(cm.cols());
  if (m > 8 || p > 8)
    throw TooLargeError("brute_force_solve supports m <= 8 and p <= 8");

  AssignmentResult out;
  if (m == 0) return out;

  std::vector<int> current(m, kUnassigned);
  std::vector<int> best_sigma;
  double best = kInf;
  std::vector<bool> used(static_cast<std::size_t>(p), false);

  auto recurse = [&](auto&& self, int j, double acc) -> void {
    if (acc >= best) return;  // strict: keeps the first (lex-smallest) optimum
    if (j == m) {
      best = acc;
      best_sigma = current;
      return;
    }
    for (int i = 0; i < p; ++i) {
      if (used[i]) continue;
      used[i] = true;
      current[j] = i;
      self(self, j + 1, acc + cm.costs(j, i));
      used[i] = false;
    }
    current[j] = kUnassigned;
    self(self, j + 1, acc + cm.skip_costs(j));
  };
  recurse(recurse, 0, 0.0);

  out.assignment.sigma = std::move(best_sigma);
  out.total = best;
  return out;
}

}  // namespace proxpath
