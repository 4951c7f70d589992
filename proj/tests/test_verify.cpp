#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "proxpath/collision.hpp"
#include "proxpath/verify.hpp"

using namespace proxpath;
using Catch::Approx;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("sip_feasible: exact contact from the symmetric prox solution") {
  // contact solution: both agents stationary, separation exactly 1.5
  const Vec x_lo = vec2(-0.25, 0), x_lo_p = vec2(1.25, 0);
  const FeasibilityReport r =
      sip_feasible(x_lo, x_lo_p, x_lo, x_lo_p, 1.5, 1001, 1e-9);
  REQUIRE(r.feasible);
  REQUIRE(r.worst_clearance == Approx(0.0).margin(1e-9));
}

TEST_CASE("sip_feasible: clearly separated bodies") {
  const FeasibilityReport r = sip_feasible(vec2(0, 0), vec2(5, 0),
                                           vec2(1, 0), vec2(6, 0), 1.0);
  REQUIRE(r.feasible);
  REQUIRE(r.worst_clearance == Approx(4.0).margin(1e-12));
}

TEST_CASE("sip_feasible: coincident static points") {
  const FeasibilityReport r = sip_feasible(vec2(1, 1), vec2(1, 1),
                                           vec2(1, 1), vec2(1, 1), 2.0);
  REQUIRE_FALSE(r.feasible);
  REQUIRE(r.worst_clearance == Approx(-2.0).margin(1e-12));
}

TEST_CASE("sip_feasible: interior minimum caught regardless of grid size") {
  // bodies cross mid-segment; the interior dip must be certified even on a
  // coarse grid thanks to the analytic closest-approach evaluation
  const Vec a_lo = vec2(-1, 0.05), a_lo_p = vec2(1, -0.05);
  const Vec a_hi = vec2(1, 0.05), a_hi_p = vec2(-1, -0.05);
  double prev = kInf;
  for (int grid : {2, 5, 17, 1001}) {
    const FeasibilityReport r =
        sip_feasible(a_lo, a_lo_p, a_hi, a_hi_p, 0.5, grid, 1e-6);
    REQUIRE_FALSE(r.feasible);
    // refinement can only lower the recorded worst clearance
    REQUIRE(r.worst_clearance <= prev + 1e-15);
    prev = r.worst_clearance;
  }
  REQUIRE(prev == Approx(0.1 - 0.5).margin(1e-9));
}

TEST_CASE("penalty_oracle: trivial query costs nothing") {
  CollisionQuery q;
  q.n_lo = vec2(0, 0);
  q.n_hi = vec2(1, 0);
  q.n_lo_p = vec2(8, 0);
  q.n_hi_p = vec2(9, 0);
  q.radius_sum = 1.0;
  const OracleResult r = penalty_oracle(q);
  REQUIRE(r.objective == 0.0);
  REQUIRE((r.points[0] - q.n_lo).norm() == 0.0);
}

TEST_CASE("penalty_oracle: symmetric overlap matches the closed form") {
  CollisionQuery q;
  q.n_lo = vec2(0, 0);
  q.n_hi = vec2(0, 0);
  q.n_lo_p = vec2(1, 0);
  q.n_hi_p = vec2(1, 0);
  q.radius_sum = 1.5;
  const OracleResult r = penalty_oracle(q, 14, 7, 99);
  // closed form objective: 4 points moved 0.25 each with rho = 1
  REQUIRE(r.objective == Approx(0.125).epsilon(1e-4));
}

TEST_CASE("path_feasibility: straight single agent is fine") {
  Scenario s;
  s.dimension = 2;
  s.eta = 2;
  s.agents.push_back({0.5, vec2(0, 0), vec2(2, 0)});
  std::vector<Path> paths{{vec2(0, 0), vec2(1, 0), vec2(2, 0)}};
  const PathFeasibilityReport rep = path_feasibility(paths, s);
  REQUIRE(rep.feasible);
}

TEST_CASE("path_feasibility: overlapping paths produce a witness") {
  Scenario s;
  s.dimension = 2;
  s.eta = 1;
  s.agents.push_back({0.5, vec2(-1, 0), vec2(1, 0)});
  s.agents.push_back({0.5, vec2(1, 0), vec2(-1, 0)});
  std::vector<Path> paths{{vec2(-1, 0), vec2(1, 0)},
                          {vec2(1, 0), vec2(-1, 0)}};
  const PathFeasibilityReport rep = path_feasibility(paths, s);
  REQUIRE_FALSE(rep.feasible);
  REQUIRE(rep.pair_agent_a == 0);
  REQUIRE(rep.pair_agent_b == 1);
  REQUIRE(rep.pair_segment == 0);
  REQUIRE(rep.worst_pair_clearance == Approx(-1.0).margin(1e-9));
  REQUIRE_FALSE(rep.witness().empty());
}

TEST_CASE("oracle sandwich on a random corpus") {
  std::mt19937_64 rng(71);
  std::normal_distribution<double> g(0.0, 2.0);
  int infeasible_handled = 0;
  for (int t = 0; t < 60; ++t) {
    CollisionQuery q;
    const int d = 2 + t % 2;
    auto draw = [&] {
      Vec v(d);
      for (int k = 0; k < d; ++k) v[k] = g(rng);
      return v;
    };
    q.n_lo = draw();
    q.n_lo_p = draw();
    q.n_hi = draw();
    q.n_hi_p = draw();
    q.radius_sum = 1.2;
    const CollisionResult closed = solve_collision_prox(q);
    const double closed_obj =
        0.5 * ((closed.x_lo - q.n_lo).squaredNorm() +
               (closed.x_lo_p - q.n_lo_p).squaredNorm() +
               (closed.x_hi - q.n_hi).squaredNorm() +
               (closed.x_hi_p - q.n_hi_p).squaredNorm());
    const OracleResult oracle = penalty_oracle(q, 10, 6, 7000 + t);
    REQUIRE(closed_obj <= oracle.objective + 1e-6 * (1.0 + oracle.objective));
    if (closed.h_star > 0) ++infeasible_handled;
  }
  REQUIRE(infeasible_handled > 10);
}
