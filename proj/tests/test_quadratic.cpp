#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "proxpath/quadratic.hpp"

using namespace proxpath;
using Catch::Approx;

namespace {

Vec vec1(double a) {
  Vec v(1);
  v << a;
  return v;
}

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

double vel_objective(const QuadPairQuery& q, const Vec& x_lo,
                     const Vec& x_hi) {
  return q.coeff * (x_hi - x_lo).squaredNorm() +
         0.5 * q.rho_lo * (x_lo - q.n_lo).squaredNorm() +
         0.5 * q.rho_hi * (x_hi - q.n_hi).squaredNorm();
}

double dir_objective(const Vec n[3], const double rho[3], double c,
                     const Vec x[3]) {
  double v = c * (x[0] - 2.0 * x[1] + x[2]).squaredNorm();
  for (int k = 0; k < 3; ++k) v += 0.5 * rho[k] * (x[k] - n[k]).squaredNorm();
  return v;
}

}  // namespace

TEST_CASE("position_prox pins to the target with certainty") {
  const auto [x, w] = position_prox(vec2(1, 2));
  REQUIRE(x[0] == 1.0);
  REQUIRE(x[1] == 2.0);
  REQUIRE(w == kInf);
  const auto [y, w2] = position_prox(vec2(0, 0));
  REQUIRE(y.norm() == 0.0);
  REQUIRE(w2 == kInf);
  Vec t3(3);
  t3 << 1, 2, 3;
  REQUIRE(position_prox(t3).first.size() == 3);
}

TEST_CASE("velocity_prox: coincident messages are already optimal") {
  QuadPairQuery q;
  q.n_lo = vec2(1, 1);
  q.n_hi = vec2(1, 1);
  q.rho_lo = 2.0;
  q.rho_hi = 3.0;
  q.coeff = 5.0;
  const PairResult r = velocity_prox(q);
  REQUIRE((r.x_lo - q.n_lo).norm() == Approx(0.0).margin(1e-15));
  REQUIRE((r.x_hi - q.n_hi).norm() == Approx(0.0).margin(1e-15));
}

TEST_CASE("velocity_prox: hand-solved one-dimensional blend") {
  QuadPairQuery q;
  q.n_lo = vec1(0);
  q.n_hi = vec1(4);
  q.rho_lo = 2.0;
  q.rho_hi = 2.0;
  q.coeff = 1.0;
  const PairResult r = velocity_prox(q);
  REQUIRE(r.x_lo[0] == Approx(4.0 / 3.0).margin(1e-12));
  REQUIRE(r.x_hi[0] == Approx(8.0 / 3.0).margin(1e-12));
}

TEST_CASE("velocity_prox: zero coefficient echoes the messages") {
  QuadPairQuery q;
  q.n_lo = vec2(0, 1);
  q.n_hi = vec2(5, -2);
  q.rho_lo = 0.0;  // even with no opinion, nothing moves
  q.rho_hi = 1.0;
  q.coeff = 0.0;
  const PairResult r = velocity_prox(q);
  REQUIRE((r.x_lo - q.n_lo).norm() == 0.0);
  REQUIRE((r.x_hi - q.n_hi).norm() == 0.0);
}

TEST_CASE("velocity_prox: pinned endpoint stays, free endpoint blends") {
  QuadPairQuery q;
  q.n_lo = vec1(0);
  q.n_hi = vec1(4);
  q.rho_lo = kInf;
  q.rho_hi = 2.0;
  q.coeff = 1.0;
  const PairResult r = velocity_prox(q);
  REQUIRE(r.x_lo[0] == 0.0);
  // stationarity of c(x-0)^2 + rho/2 (x-4)^2
  REQUIRE(r.x_hi[0] == Approx(8.0 / 4.0).margin(1e-12));
}

TEST_CASE("velocity_prox: max-speed projection keeps the weighted center") {
  QuadPairQuery q;
  q.n_lo = vec1(0);
  q.n_hi = vec1(10);
  q.rho_lo = 1.0;
  q.rho_hi = 1.0;
  q.coeff = 1e-9;  // nearly free pair, separation stays ~10
  const PairResult r = velocity_prox(q, 4.0);
  REQUIRE((r.x_hi - r.x_lo).norm() == Approx(4.0).margin(1e-9));
  REQUIRE(0.5 * (r.x_lo[0] + r.x_hi[0]) == Approx(5.0).margin(1e-6));
}

TEST_CASE("direction_prox: collinear equally spaced points are optimal") {
  const TripleResult r = direction_prox(vec2(0, 0), vec2(1, 1), vec2(2, 2),
                                        1.0, 2.0, 3.0, 4.0);
  REQUIRE((r.x0 - vec2(0, 0)).norm() == Approx(0.0).margin(1e-15));
  REQUIRE((r.x1 - vec2(1, 1)).norm() == Approx(0.0).margin(1e-15));
  REQUIRE((r.x2 - vec2(2, 2)).norm() == Approx(0.0).margin(1e-15));
}

TEST_CASE("direction_prox: huge coefficient enforces the constraint") {
  const TripleResult r =
      direction_prox(vec1(0), vec1(1), vec1(0), 1.0, 1.0, 1.0, 1e9);
  REQUIRE(std::abs(r.x0[0] - 2.0 * r.x1[0] + r.x2[0]) < 1e-6);
}

TEST_CASE("direction_prox: matches the dense linear-system solve") {
  // 3x3 system (2 c B^T B + diag(rho)) x = diag(rho) n for n = (0, 1, 0),
  // c = 1, rho = 1: solution (4/13, 5/13, 4/13)
  const TripleResult r =
      direction_prox(vec1(0), vec1(1), vec1(0), 1.0, 1.0, 1.0, 1.0);
  REQUIRE(r.x0[0] == Approx(4.0 / 13.0).margin(1e-12));
  REQUIRE(r.x1[0] == Approx(5.0 / 13.0).margin(1e-12));
  REQUIRE(r.x2[0] == Approx(4.0 / 13.0).margin(1e-12));
}

TEST_CASE("finite-difference gradients vanish at both prox outputs") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g(0.0, 2.0);
  std::uniform_real_distribution<double> w(0.1, 10.0);
  const double fd = 1e-5;
  for (int t = 0; t < 1000; ++t) {
    const int d = 1 + t % 3;
    auto draw = [&] {
      Vec v(d);
      for (int k = 0; k < d; ++k) v[k] = g(rng);
      return v;
    };

    QuadPairQuery q;
    q.n_lo = draw();
    q.n_hi = draw();
    q.rho_lo = w(rng);
    q.rho_hi = w(rng);
    q.coeff = w(rng);
    const PairResult vr = velocity_prox(q);
    for (int k = 0; k < d; ++k) {
      Vec lo_p = vr.x_lo, lo_m = vr.x_lo;
      lo_p[k] += fd;
      lo_m[k] -= fd;
      const double grad_lo = (vel_objective(q, lo_p, vr.x_hi) -
                              vel_objective(q, lo_m, vr.x_hi)) /
                             (2 * fd);
      REQUIRE(std::abs(grad_lo) < 1e-5 * (1.0 + std::abs(grad_lo)));
      Vec hi_p = vr.x_hi, hi_m = vr.x_hi;
      hi_p[k] += fd;
      hi_m[k] -= fd;
      const double grad_hi = (vel_objective(q, vr.x_lo, hi_p) -
                              vel_objective(q, vr.x_lo, hi_m)) /
                             (2 * fd);
      REQUIRE(std::abs(grad_hi) < 1e-5 * (1.0 + std::abs(grad_hi)));
    }

    const Vec n[3] = {draw(), draw(), draw()};
    const double rho[3] = {w(rng), w(rng), w(rng)};
    const double c = w(rng);
    const TripleResult dr =
        direction_prox(n[0], n[1], n[2], rho[0], rho[1], rho[2], c);
    Vec x[3] = {dr.x0, dr.x1, dr.x2};
    for (int pt = 0; pt < 3; ++pt) {
      for (int k = 0; k < d; ++k) {
        Vec xs[3] = {x[0], x[1], x[2]};
        xs[pt][k] += fd;
        const double up = dir_objective(n, rho, c, xs);
        xs[pt][k] -= 2 * fd;
        const double down = dir_objective(n, rho, c, xs);
        const double grad = (up - down) / (2 * fd);
        REQUIRE(std::abs(grad) < 1e-5 * (1.0 + std::abs(grad)));
      }
    }
  }
}

TEST_CASE("objective at the output never exceeds the objective at n") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> g(0.0, 3.0);
  std::uniform_real_distribution<double> w(0.0, 5.0);
  for (int t = 0; t < 300; ++t) {
    QuadPairQuery q;
    q.n_lo = vec2(g(rng), g(rng));
    q.n_hi = vec2(g(rng), g(rng));
    q.rho_lo = w(rng);
    q.rho_hi = w(rng);
    q.coeff = w(rng);
    const PairResult r = velocity_prox(q);
    REQUIRE(vel_objective(q, r.x_lo, r.x_hi) <=
            vel_objective(q, q.n_lo, q.n_hi) + 1e-9);
  }
}

TEST_CASE("translation equivariance") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int t = 0; t < 100; ++t) {
    QuadPairQuery q;
    q.n_lo = vec2(g(rng), g(rng));
    q.n_hi = vec2(g(rng), g(rng));
    q.rho_lo = 1.5;
    q.rho_hi = 0.7;
    q.coeff = 2.0;
    const Vec shift = vec2(g(rng), g(rng));
    QuadPairQuery qs = q;
    qs.n_lo += shift;
    qs.n_hi += shift;
    const PairResult a = velocity_prox(q);
    const PairResult b = velocity_prox(qs);
    REQUIRE((a.x_lo + shift - b.x_lo).norm() < 1e-12);
    REQUIRE((a.x_hi + shift - b.x_hi).norm() < 1e-12);

    const TripleResult da = direction_prox(q.n_lo, q.n_hi, q.n_lo + q.n_hi,
                                           1.0, 2.0, 3.0, 0.5);
    const TripleResult db = direction_prox(
        q.n_lo + shift, q.n_hi + shift, q.n_lo + q.n_hi + shift, 1.0, 2.0,
        3.0, 0.5);
    REQUIRE((da.x1 + shift - db.x1).norm() < 1e-12);
  }
}
