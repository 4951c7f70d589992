#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxpath/types.hpp"

namespace proxpath {

// Scenario text format, schema "v1". Line oriented, '#' starts a comment:
//
//   proxpath-scenario v1
//   dim 2
//   eta 20
//   vel-cost 1
//   dir-cost 0
//   max-speed 0            # 0 = no hard cap
//   agent <radius> <start: d numbers> <goal: d numbers>
//   obstacle <thickness> <a: d numbers> <b: d numbers>
//   group <s_begin> <s_end>
//   traj <skip_cost>
//   pt <follow_cost|inf> <d numbers>    # one per window break-point
//   end                                 # closes the group
//   link <group> <traj> <group'> <traj'>

namespace detail {

inline std::string fmt_double(double v) {
  if (v == kInf) return "inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct LineTokens {
  int number = 0;
  std::string keyword;
  std::vector<std::string> args;

  double num(std::size_t i) const {
    if (i >= args.size()) throw ParseError(number, "missing numeric field");
    if (args[i] == "inf") return kInf;
    try {
      std::size_t used = 0;
      const double v = std::stod(args[i], &used);
      if (used != args[i].size()) throw std::invalid_argument(args[i]);
      return v;
    } catch (const std::exception&) {
      throw ParseError(number, "expected a number, got '" + args[i] + "'");
    }
  }
  int integer(std::size_t i) const {
    const double v = num(i);
    if (v != std::floor(v)) throw ParseError(number, "expected an integer");
    return static_cast<int>(v);
  }
  Vec vec(std::size_t i, int d) const {
    if (args.size() < i + static_cast<std::size_t>(d))
      throw ParseError(number, "expected " + std::to_string(d) +
                                   " coordinates");
    Vec v(d);
    for (int k = 0; k < d; ++k) v[k] = num(i + k);
    return v;
  }
};

}  // namespace detail

inline Scenario parse_scenario_text(const std::string& text) {
  Scenario s;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  bool in_group = false;
  bool in_traj = false;

  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    detail::LineTokens tok;
    tok.number = line_no;
    if (!(ls >> tok.keyword)) continue;
    std::string word;
    while (ls >> word) tok.args.push_back(word);

    if (!header_seen) {
      if (tok.keyword != "proxpath-scenario" || tok.args.empty() ||
          tok.args[0] != "v1") {
        throw ParseError(line_no, "expected header 'proxpath-scenario v1'");
      }
      header_seen = true;
      continue;
    }

    auto& groups = s.landmark_groups;
    if (tok.keyword == "dim") {
      s.dimension = tok.integer(0);
    } else if (tok.keyword == "eta") {
      s.eta = tok.integer(0);
    } else if (tok.keyword == "vel-cost") {
      s.vel_cost = tok.num(0);
    } else if (tok.keyword == "dir-cost") {
      s.dir_cost = tok.num(0);
    } else if (tok.keyword == "max-speed") {
      s.max_speed = tok.num(0);
    } else if (tok.keyword == "agent") {
      Agent a;
      a.radius = tok.num(0);
      a.start = tok.vec(1, s.dimension);
      a.goal = tok.vec(1 + s.dimension, s.dimension);
      s.agents.push_back(std::move(a));
    } else if (tok.keyword == "obstacle") {
      Obstacle o;
      o.thickness = tok.num(0);
      o.a = tok.vec(1, s.dimension);
      o.b = tok.vec(1 + s.dimension, s.dimension);
      s.obstacles.push_back(std::move(o));
    } else if (tok.keyword == "group") {
      if (in_group) throw ParseError(line_no, "nested group");
      LandmarkGroup g;
      g.s_begin = tok.integer(0);
      g.s_end = tok.integer(1);
      groups.push_back(std::move(g));
      in_group = true;
      in_traj = false;
    } else if (tok.keyword == "traj") {
      if (!in_group) throw ParseError(line_no, "traj outside a group");
      LandmarkTrajectory t;
      t.skip_cost = tok.num(0);
      groups.back().trajectories.push_back(std::move(t));
      in_traj = true;
    } else if (tok.keyword == "pt") {
      if (!in_traj) throw ParseError(line_no, "pt outside a traj");
      LandmarkTrajectory& t = groups.back().trajectories.back();
      t.follow_costs.push_back(tok.num(0));
      t.points.push_back(tok.vec(1, s.dimension));
    } else if (tok.keyword == "end") {
      if (!in_group) throw ParseError(line_no, "end outside a group");
      in_group = false;
      in_traj = false;
    } else if (tok.keyword == "link") {
      SigmaLink lk;
      lk.group_a = tok.integer(0);
      lk.traj_a = tok.integer(1);
      lk.group_b = tok.integer(2);
      lk.traj_b = tok.integer(3);
      s.sigma_links.push_back(lk);
    } else {
      throw ParseError(line_no, "unknown keyword '" + tok.keyword + "'");
    }
  }
  if (!header_seen) throw ParseError(1, "empty scenario file");
  if (in_group) throw ParseError(line_no, "unterminated group");

  const auto violations = validate_scenario(s);
  if (!violations.empty()) {
    std::string msg = "scenario fails validation:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw std::invalid_argument(msg);
  }
  return s;
}

inline Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

inline std::string serialize_scenario(const Scenario& s) {
  std::ostringstream out;
  out << "proxpath-scenario v1\n";
  out << "dim " << s.dimension << "\n";
  out << "eta " << s.eta << "\n";
  out << "vel-cost " << detail::fmt_double(s.vel_cost) << "\n";
  out << "dir-cost " << detail::fmt_double(s.dir_cost) << "\n";
  out << "max-speed " << detail::fmt_double(s.max_speed) << "\n";
  auto coords = [&out](const Vec& v) {
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      out << " " << detail::fmt_double(v[k]);
    }
  };
  for (const Agent& a : s.agents) {
    out << "agent " << detail::fmt_double(a.radius);
    coords(a.start);
    coords(a.goal);
    out << "\n";
  }
  for (const Obstacle& o : s.obstacles) {
    out << "obstacle " << detail::fmt_double(o.thickness);
    coords(o.a);
    coords(o.b);
    out << "\n";
  }
  for (const LandmarkGroup& g : s.landmark_groups) {
    out << "group " << g.s_begin << " " << g.s_end << "\n";
    for (const LandmarkTrajectory& t : g.trajectories) {
      out << "traj " << detail::fmt_double(t.skip_cost) << "\n";
      for (std::size_t k = 0; k < t.points.size(); ++k) {
        out << "pt " << detail::fmt_double(t.follow_costs[k]);
        coords(t.points[k]);
        out << "\n";
      }
    }
    out << "end\n";
  }
  for (const SigmaLink& lk : s.sigma_links) {
    out << "link " << lk.group_a << " " << lk.traj_a << " " << lk.group_b
        << " " << lk.traj_b << "\n";
  }
  return out.str();
}

inline void write_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario file: " + path);
  out << serialize_scenario(s);
}

inline std::string scenario_hash(const Scenario& s) {
  const std::string text = serialize_scenario(s);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

// Benchmark family: p agents evenly spread on a circle (d = 2) or a sphere
// (d = 3), each heading for the antipode of its own start.
inline Scenario conf1(int p, int d, double circle_radius,
                      double agent_radius, int eta = 20) {
  if (p < 2 || p % 2 != 0)
    throw std::invalid_argument("conf1 requires an even agent count >= 2");
  if (d != 2 && d != 3)
    throw std::invalid_argument("conf1 supports d = 2 or d = 3");

  Scenario s;
  s.dimension = d;
  s.eta = eta;
  s.vel_cost = 1.0;
  s.dir_cost = 0.0;
  constexpr double kPi = 3.14159265358979323846;
  for (int i = 0; i < p; ++i) {
    Agent a;
    a.radius = agent_radius;
    Vec pos(d);
    if (d == 2) {
      const double theta = 2.0 * kPi * i / p;
      pos << circle_radius * std::cos(theta), circle_radius * std::sin(theta);
    } else {
      // Fibonacci lattice on the sphere.
      const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
      const double zf = 1.0 - 2.0 * (i + 0.5) / p;
      const double r_xy = std::sqrt(std::max(0.0, 1.0 - zf * zf));
      const double theta = 2.0 * kPi * i / golden;
      pos << circle_radius * r_xy * std::cos(theta),
          circle_radius * r_xy * std::sin(theta), circle_radius * zf;
    }
    a.start = pos;
    a.goal = -pos;
    s.agents.push_back(std::move(a));
  }
  return s;
}

}  // namespace proxpath
