#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "proxpath/engine.hpp"
#include "proxpath/scenario_io.hpp"
#include "proxpath/types.hpp"

namespace proxpath {

// Trajectory CSV: header `agent,s,x0,...,x{d-1}`, one row per break-point.
inline void write_paths_csv(std::ostream& out,
                            const std::vector<Path>& paths) {
  const int d = paths.empty() || paths[0].empty()
                    ? 0
                    : static_cast<int>(paths[0][0].size());
  out << "agent,s";
  for (int k = 0; k < d; ++k) out << ",x" << k;
  out << "\n";
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (std::size_t s = 0; s < paths[i].size(); ++s) {
      out << i << "," << s;
      for (int k = 0; k < d; ++k) {
        out << "," << detail::fmt_double(paths[i][s][k]);
      }
      out << "\n";
    }
  }
}

inline std::vector<Path> read_paths_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(1, "empty trajectory file");
  if (line.rfind("agent,s", 0) != 0)
    throw ParseError(1, "expected header starting with 'agent,s'");

  std::map<int, std::map<int, Vec>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> fields;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        fields.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError(line_no, "bad numeric cell '" + cell + "'");
      }
    }
    if (fields.size() < 3) throw ParseError(line_no, "too few columns");
    const int agent = static_cast<int>(fields[0]);
    const int s = static_cast<int>(fields[1]);
    Vec v(static_cast<Eigen::Index>(fields.size()) - 2);
    for (std::size_t k = 2; k < fields.size(); ++k) {
      v[static_cast<Eigen::Index>(k - 2)] = fields[k];
    }
    rows[agent][s] = std::move(v);
  }

  std::vector<Path> paths;
  for (auto& [agent, by_s] : rows) {
    if (agent != static_cast<int>(paths.size()))
      throw ParseError(line_no, "agent indices must be dense from 0");
    Path path;
    for (auto& [s, v] : by_s) {
      if (s != static_cast<int>(path.size()))
        throw ParseError(line_no, "break-point indices must be dense from 0");
      path.push_back(std::move(v));
    }
    paths.push_back(std::move(path));
  }
  return paths;
}

namespace detail {

inline std::string palette_color(int i, int total) {
  // evenly spaced hues, fixed saturation/value
  const double h = total > 0 ? 360.0 * i / total : 0.0;
  const double s = 0.65, v = 0.85;
  const double c = v * s;
  const double hp = h / 60.0;
  const double xcomp = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) r = c, g = xcomp;
  else if (hp < 2) r = xcomp, g = c;
  else if (hp < 3) g = c, b = xcomp;
  else if (hp < 4) g = xcomp, b = c;
  else if (hp < 5) r = xcomp, b = c;
  else r = c, b = xcomp;
  const double m = v - c;
  char buf[10];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(255 * (r + m)),
                static_cast<int>(255 * (g + m)),
                static_cast<int>(255 * (b + m)));
  return buf;
}

}  // namespace detail

// Static SVG 1.1 plot of the paths: polyline per agent, discs at start and
// goal. Higher-dimensional solutions are projected onto two chosen axes.
inline void write_paths_svg(std::ostream& out, const Scenario& scenario,
                            const std::vector<Path>& paths, int axis_x = 0,
                            int axis_y = 1) {
  constexpr double kSize = 640.0, kMargin = 40.0;
  double lo_x = kInf, hi_x = -kInf, lo_y = kInf, hi_y = -kInf;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const double r = scenario.agents[i].radius;
    for (const Vec& pt : paths[i]) {
      lo_x = std::min(lo_x, pt[axis_x] - r);
      hi_x = std::max(hi_x, pt[axis_x] + r);
      lo_y = std::min(lo_y, pt[axis_y] - r);
      hi_y = std::max(hi_y, pt[axis_y] + r);
    }
  }
  if (!(hi_x > lo_x)) hi_x = lo_x + 1.0;
  if (!(hi_y > lo_y)) hi_y = lo_y + 1.0;
  const double scale =
      (kSize - 2 * kMargin) / std::max(hi_x - lo_x, hi_y - lo_y);
  auto px = [&](double v) { return kMargin + (v - lo_x) * scale; };
  auto py = [&](double v) { return kSize - kMargin - (v - lo_y) * scale; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" "
      << "width=\"" << kSize << "\" height=\"" << kSize << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const std::string color =
        detail::palette_color(static_cast<int>(i),
                              static_cast<int>(paths.size()));
    const double r_px = scenario.agents[i].radius * scale;
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    for (const Vec& pt : paths[i]) {
      out << px(pt[axis_x]) << "," << py(pt[axis_y]) << " ";
    }
    out << "\"/>\n";
    const Vec& first = paths[i].front();
    const Vec& last = paths[i].back();
    out << "<circle cx=\"" << px(first[axis_x]) << "\" cy=\""
        << py(first[axis_y]) << "\" r=\"" << r_px << "\" fill=\"" << color
        << "\" fill-opacity=\"0.35\"/>\n";
    out << "<circle cx=\"" << px(last[axis_x]) << "\" cy=\""
        << py(last[axis_y]) << "\" r=\"" << r_px << "\" fill=\"none\" "
        << "stroke=\"" << color << "\" stroke-dasharray=\"4 3\"/>\n";
    for (const Vec& pt : paths[i]) {
      out << "<circle cx=\"" << px(pt[axis_x]) << "\" cy=\""
          << py(pt[axis_y]) << "\" r=\"2\" fill=\"" << color << "\"/>\n";
    }
  }
  for (const Obstacle& o : scenario.obstacles) {
    out << "<line x1=\"" << px(o.a[axis_x]) << "\" y1=\"" << py(o.a[axis_y])
        << "\" x2=\"" << px(o.b[axis_x]) << "\" y2=\"" << py(o.b[axis_y])
        << "\" stroke=\"black\" stroke-width=\"3\"/>\n";
  }
  out << "</svg>\n";
}

// Structured run summary with stable keys, one `key: value` per line.
struct RunReport {
  std::string scenario_hash;
  std::string algorithm;
  std::uint64_t seed = 0;
  int workers = 0;
  double rho0 = 0.0;
  double tol = 0.0;
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
  double lower_bound = 0.0;
  double final_residual = 0.0;
  CaseStats case_stats;
  double build_ms = 0.0, solve_ms = 0.0, verify_ms = 0.0, export_ms = 0.0;
  std::string diagnostics;
};

inline void write_report(std::ostream& out, const RunReport& r) {
  const double total = static_cast<double>(std::max<std::uint64_t>(
      r.case_stats.total(), 1));
  out << "proxpath-report v1\n";
  out << "scenario_hash: " << r.scenario_hash << "\n";
  out << "algorithm: " << r.algorithm << "\n";
  out << "seed: " << r.seed << "\n";
  out << "workers: " << r.workers << "\n";
  out << "rho0: " << detail::fmt_double(r.rho0) << "\n";
  out << "tol: " << detail::fmt_double(r.tol) << "\n";
  out << "iterations: " << r.iterations << "\n";
  out << "converged: " << (r.converged ? "true" : "false") << "\n";
  out << "objective: " << detail::fmt_double(r.objective) << "\n";
  out << "objective_lower_bound: " << detail::fmt_double(r.lower_bound)
      << "\n";
  out << "final_residual: " << detail::fmt_double(r.final_residual) << "\n";
  out << "case_trivial: " << detail::fmt_double(r.case_stats.trivial / total)
      << "\n";
  out << "case_easy: " << detail::fmt_double(r.case_stats.easy / total)
      << "\n";
  out << "case_expensive: "
      << detail::fmt_double(r.case_stats.expensive / total) << "\n";
  out << "build_ms: " << detail::fmt_double(r.build_ms) << "\n";
  out << "solve_ms: " << detail::fmt_double(r.solve_ms) << "\n";
  out << "verify_ms: " << detail::fmt_double(r.verify_ms) << "\n";
  out << "export_ms: " << detail::fmt_double(r.export_ms) << "\n";
  if (!r.diagnostics.empty()) out << "diagnostics: " << r.diagnostics << "\n";
}

}  // namespace proxpath
