#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace proxpath {

// All geometry is dimension-agnostic: a point is a length-d real vector in
// abstract length units. Time between consecutive break-points is uniform.
using Vec = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Agent {
  double radius = 0.0;
  Vec start;  // required position at break-point 0
  Vec goal;   // required position at break-point eta
};

// Piecewise-linear path: eta + 1 break-points sharing one dimension.
using Path = std::vector<Vec>;

// Segment obstacle between endpoints a and b, inflated by `thickness`.
struct Obstacle {
  Vec a;
  Vec b;
  double thickness = 0.0;
};

// One reference trajectory inside a landmark group. `points` and
// `follow_costs` both span the group window; a follow cost of 0 encodes a
// hole, +inf means the point must be matched exactly when assigned.
struct LandmarkTrajectory {
  double skip_cost = 1.0;
  std::vector<Vec> points;
  std::vector<double> follow_costs;
};

struct LandmarkGroup {
  int s_begin = 0;
  int s_end = 0;
  std::vector<LandmarkTrajectory> trajectories;

  int span() const { return s_end - s_begin + 1; }
};

// Ties trajectory traj_a of group_a to trajectory traj_b of group_b: both
// must be followed by the same agent (or both skipped).
struct SigmaLink {
  int group_a = 0;
  int traj_a = 0;
  int group_b = 0;
  int traj_b = 0;
};

struct Scenario {
  int dimension = 2;
  int eta = 1;  // number of segments; paths carry eta + 1 break-points
  std::vector<Agent> agents;
  std::vector<Obstacle> obstacles;
  std::vector<LandmarkGroup> landmark_groups;
  std::vector<SigmaLink> sigma_links;
  double vel_cost = 1.0;
  double dir_cost = 0.0;
  double max_speed = 0.0;  // 0 disables the hard per-segment speed cap

  double min_radius() const {
    double r = kInf;
    for (const auto& a : agents) r = std::min(r, a.radius);
    return std::isfinite(r) ? r : 1.0;
  }
};

namespace detail {

inline bool finite_vec(const Vec& v) {
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (!std::isfinite(v[k])) return false;
  }
  return true;
}

}  // namespace detail

// Pure diagnostic pass over every structural invariant. Returns one message
// per violation, each naming the offending field; empty means valid.
inline std::vector<std::string> validate_scenario(const Scenario& s) {
  std::vector<std::string> out;
  auto bad = [&out](const std::string& field, const std::string& why) {
    out.push_back(field + ": " + why);
  };

  const int d = s.dimension;
  if (d < 1) bad("dimension", "must be >= 1, got " + std::to_string(d));
  if (s.eta < 1) bad("eta", "must be >= 1, got " + std::to_string(s.eta));
  if (s.agents.empty()) bad("agents", "at least one agent is required");
  if (!(s.vel_cost >= 0.0) || !std::isfinite(s.vel_cost))
    bad("vel_cost", "must be finite and >= 0");
  if (!(s.dir_cost >= 0.0) || !std::isfinite(s.dir_cost))
    bad("dir_cost", "must be finite and >= 0");
  if (s.max_speed < 0.0 || std::isnan(s.max_speed))
    bad("max_speed", "must be >= 0");

  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const Agent& a = s.agents[i];
    const std::string tag = "agents[" + std::to_string(i) + "]";
    if (!(a.radius > 0.0) || !std::isfinite(a.radius))
      bad(tag + ".radius", "must be finite and positive");
    if (a.start.size() != d) bad(tag + ".start", "dimension mismatch");
    if (a.goal.size() != d) bad(tag + ".goal", "dimension mismatch");
    if (!detail::finite_vec(a.start) || !detail::finite_vec(a.goal))
      bad(tag, "non-finite coordinates");
  }

  for (std::size_t w = 0; w < s.obstacles.size(); ++w) {
    const Obstacle& o = s.obstacles[w];
    const std::string tag = "obstacles[" + std::to_string(w) + "]";
    if (d < 3) bad(tag, "wall operator requires d >= 3");
    if (o.a.size() != d || o.b.size() != d) bad(tag, "dimension mismatch");
    if (!(o.thickness >= 0.0) || !std::isfinite(o.thickness))
      bad(tag + ".thickness", "must be finite and >= 0");
    if (!detail::finite_vec(o.a) || !detail::finite_vec(o.b))
      bad(tag, "non-finite coordinates");
  }

  for (std::size_t g = 0; g < s.landmark_groups.size(); ++g) {
    const LandmarkGroup& lg = s.landmark_groups[g];
    const std::string tag = "landmark_groups[" + std::to_string(g) + "]";
    if (lg.s_begin > lg.s_end) bad(tag, "s_begin must be <= s_end");
    if (lg.s_begin < 0 || lg.s_end > s.eta)
      bad(tag, "window must lie within [0, eta]");
    for (std::size_t j = 0; j < lg.trajectories.size(); ++j) {
      const LandmarkTrajectory& t = lg.trajectories[j];
      const std::string jt = tag + ".trajectories[" + std::to_string(j) + "]";
      if (!(t.skip_cost > 0.0) || !std::isfinite(t.skip_cost))
        bad(jt + ".skip_cost", "must be finite and positive");
      if (static_cast<int>(t.points.size()) != lg.span() ||
          t.follow_costs.size() != t.points.size())
        bad(jt, "must span exactly s_begin..s_end");
      for (std::size_t k = 0; k < t.points.size(); ++k) {
        if (t.points[k].size() != d) bad(jt, "dimension mismatch");
        else if (!detail::finite_vec(t.points[k]))
          bad(jt, "non-finite coordinates");
        if (k < t.follow_costs.size() &&
            (t.follow_costs[k] < 0.0 || std::isnan(t.follow_costs[k])))
          bad(jt + ".follow_costs", "must be >= 0 (inf allowed)");
      }
    }
    // Groups act as independent factors only over disjoint windows.
    for (std::size_t g2 = g + 1; g2 < s.landmark_groups.size(); ++g2) {
      const LandmarkGroup& other = s.landmark_groups[g2];
      if (lg.s_begin <= other.s_end && other.s_begin <= lg.s_end)
        bad(tag, "window overlaps landmark_groups[" + std::to_string(g2) + "]");
    }
  }

  for (std::size_t l = 0; l < s.sigma_links.size(); ++l) {
    const SigmaLink& lk = s.sigma_links[l];
    const std::string tag = "sigma_links[" + std::to_string(l) + "]";
    auto traj_ok = [&s](int g, int j) {
      return g >= 0 && g < static_cast<int>(s.landmark_groups.size()) &&
             j >= 0 &&
             j < static_cast<int>(s.landmark_groups[g].trajectories.size());
    };
    if (!traj_ok(lk.group_a, lk.traj_a) || !traj_ok(lk.group_b, lk.traj_b))
      bad(tag, "references a trajectory that does not exist");
    else if (lk.group_a == lk.group_b)
      bad(tag, "must connect trajectories of different groups");
  }

  return out;
}

// Error types shared across the operator modules.
struct DegenerateAxisError : std::runtime_error {
  DegenerateAxisError()
      : std::runtime_error(
            "collision axis degenerate even after perturbation") {}
};

struct DimensionTooLowError : std::runtime_error {
  explicit DimensionTooLowError(int d)
      : std::runtime_error("wall operator requires d >= 3, got d = " +
                           std::to_string(d)) {}
};

struct NonFiniteError : std::runtime_error {
  explicit NonFiniteError(const std::string& what) : std::runtime_error(what) {}
};

struct TooLargeError : std::runtime_error {
  explicit TooLargeError(const std::string& what) : std::runtime_error(what) {}
};

struct NoFeasiblePointError : std::runtime_error {
  NoFeasiblePointError()
      : std::runtime_error("penalty oracle found no feasible point") {}
};

struct ParseError : std::runtime_error {
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_number(line) {}
  int line_number;
};

}  // namespace proxpath
