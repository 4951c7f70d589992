#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "proxpath/types.hpp"

namespace proxpath {

// Bipartite factor graph: one consensus variable per (agent, break-point)
// position plus one per shared assignment slot, and one operator node per
// cost term. All mutable state lives in flat arrays indexed by fixed
// offsets, so the solver stages can run over disjoint slices.

enum class OpKind {
  Position,   // pins one break-point to a target
  Goal,       // quadratic pull of the horizon endpoint (local planning)
  Velocity,   // per-segment kinetic penalty
  Direction,  // per-triple second-difference penalty
  Collision,  // agent-agent clearance over one segment pair
  Wall,       // agent-obstacle clearance over one segment
  Landmark,   // one group: assignment + blended follow
  SigmaEq     // equality of two shared assignment variables
};

struct VarNode {
  int offset = 0;  // into the per-variable slab (z)
  int len = 0;
  std::vector<int> edges;
  int agent = -1, s = -1;      // point variables
  int group = -1, traj = -1;   // sigma variables
  bool pinned = false;         // has a Position operator attached
};

struct GraphEdge {
  int var = 0;
  int op = 0;
  int offset = 0;  // into the per-edge slabs (x, u, n)
};

struct OpNode {
  OpKind kind = OpKind::Position;
  int first_edge = 0;
  int edge_count = 0;
  int a = -1;        // agent / obstacle / group / link index (per kind)
  int b = -1;        // second agent for Collision, agent for Wall
  int s = -1;        // segment or break-point index
  double coeff = 0;  // cost coefficient or radius sum (per kind)
  Vec target;        // Position / Goal anchor
};

struct FactorGraph {
  Scenario scenario;
  int dim = 0;
  int eta = 0;
  int num_agents = 0;
  bool local_mode = false;

  std::vector<VarNode> vars;
  std::vector<OpNode> ops;
  std::vector<GraphEdge> edges;
  std::vector<std::vector<int>> sigma_var;  // [group][traj] -> var id or -1

  // state slabs
  std::vector<double> z;                  // consensus, per variable
  std::vector<double> x, u, n;            // estimate, dual, message per edge
  std::vector<double> rho_in, rho_out;    // scalar weights per edge

  int point_var(int agent, int s) const { return agent * (eta + 1) + s; }

  double* var_z(int v) { return z.data() + vars[v].offset; }
  const double* var_z(int v) const { return z.data() + vars[v].offset; }
  double* edge_x(int e) { return x.data() + edges[e].offset; }
  double* edge_u(int e) { return u.data() + edges[e].offset; }
  double* edge_n(int e) { return n.data() + edges[e].offset; }
  const double* edge_x(int e) const { return x.data() + edges[e].offset; }
  const double* edge_n(int e) const { return n.data() + edges[e].offset; }
  int edge_len(int e) const { return vars[edges[e].var].len; }

  int count_ops(OpKind kind) const {
    int c = 0;
    for (const auto& op : ops) c += op.kind == kind ? 1 : 0;
    return c;
  }
};

namespace detail {

struct GraphBuilder {
  FactorGraph g;

  int add_var(int len) {
    VarNode v;
    v.len = len;
    g.vars.push_back(v);
    return static_cast<int>(g.vars.size()) - 1;
  }

  void add_op(OpNode op, const std::vector<int>& vars) {
    op.first_edge = static_cast<int>(g.edges.size());
    op.edge_count = static_cast<int>(vars.size());
    const int op_id = static_cast<int>(g.ops.size());
    for (int v : vars) {
      GraphEdge e;
      e.var = v;
      e.op = op_id;
      g.vars[v].edges.push_back(static_cast<int>(g.edges.size()));
      g.edges.push_back(e);
      if (op.kind == OpKind::Position) g.vars[v].pinned = true;
    }
    g.ops.push_back(std::move(op));
  }

  FactorGraph finish() {
    int var_off = 0;
    for (auto& v : g.vars) {
      v.offset = var_off;
      var_off += v.len;
    }
    g.z.assign(var_off, 0.0);
    int edge_off = 0;
    for (auto& e : g.edges) {
      e.offset = edge_off;
      edge_off += g.vars[e.var].len;
    }
    g.x.assign(edge_off, 0.0);
    g.u.assign(edge_off, 0.0);
    g.n.assign(edge_off, 0.0);
    g.rho_in.assign(g.edges.size(), 0.0);
    g.rho_out.assign(g.edges.size(), 0.0);
    return std::move(g);
  }
};

inline void add_shared_structure(GraphBuilder& b, const Scenario& s) {
  FactorGraph& g = b.g;
  // Shared sigma variables exist only for linked trajectories.
  g.sigma_var.resize(s.landmark_groups.size());
  for (std::size_t k = 0; k < s.landmark_groups.size(); ++k) {
    g.sigma_var[k].assign(s.landmark_groups[k].trajectories.size(), -1);
  }
  const int p = static_cast<int>(s.agents.size());
  auto ensure_sigma = [&](int group, int traj) {
    if (g.sigma_var[group][traj] < 0) {
      const int v = b.add_var(p + 1);
      g.vars[v].group = group;
      g.vars[v].traj = traj;
      g.sigma_var[group][traj] = v;
    }
    return g.sigma_var[group][traj];
  };
  for (const SigmaLink& lk : s.sigma_links) {
    ensure_sigma(lk.group_a, lk.traj_a);
    ensure_sigma(lk.group_b, lk.traj_b);
  }

  for (std::size_t k = 0; k < s.landmark_groups.size(); ++k) {
    const LandmarkGroup& lg = s.landmark_groups[k];
    OpNode op;
    op.kind = OpKind::Landmark;
    op.a = static_cast<int>(k);
    std::vector<int> vars;
    for (int i = 0; i < p; ++i) {
      for (int t = 0; t < lg.span(); ++t) {
        vars.push_back(g.point_var(i, lg.s_begin + t));
      }
    }
    for (std::size_t j = 0; j < lg.trajectories.size(); ++j) {
      if (g.sigma_var[k][j] >= 0) vars.push_back(g.sigma_var[k][j]);
    }
    b.add_op(std::move(op), vars);
  }

  for (std::size_t l = 0; l < s.sigma_links.size(); ++l) {
    const SigmaLink& lk = s.sigma_links[l];
    OpNode op;
    op.kind = OpKind::SigmaEq;
    op.a = static_cast<int>(l);
    b.add_op(std::move(op), {g.sigma_var[lk.group_a][lk.traj_a],
                             g.sigma_var[lk.group_b][lk.traj_b]});
  }
}

}  // namespace detail

// Global-planning graph: one cost term of the objective per operator node.
inline FactorGraph build_graph(const Scenario& s) {
  {
    const auto violations = validate_scenario(s);
    if (!violations.empty()) {
      std::string msg = "invalid scenario:";
      for (const auto& v : violations) msg += "\n  " + v;
      throw std::invalid_argument(msg);
    }
  }

  detail::GraphBuilder b;
  FactorGraph& g = b.g;
  g.scenario = s;
  g.dim = s.dimension;
  g.eta = s.eta;
  g.num_agents = static_cast<int>(s.agents.size());

  const int p = g.num_agents;
  for (int i = 0; i < p; ++i) {
    for (int sb = 0; sb <= g.eta; ++sb) {
      const int v = b.add_var(g.dim);
      g.vars[v].agent = i;
      g.vars[v].s = sb;
    }
  }

  for (int i = 0; i < p; ++i) {
    OpNode lo;
    lo.kind = OpKind::Position;
    lo.a = i;
    lo.s = 0;
    lo.target = s.agents[i].start;
    b.add_op(std::move(lo), {g.point_var(i, 0)});
    OpNode hi;
    hi.kind = OpKind::Position;
    hi.a = i;
    hi.s = g.eta;
    hi.target = s.agents[i].goal;
    b.add_op(std::move(hi), {g.point_var(i, g.eta)});
  }

  for (int i = 0; i < p; ++i) {
    for (int seg = 0; seg < g.eta; ++seg) {
      OpNode op;
      op.kind = OpKind::Velocity;
      op.a = i;
      op.s = seg;
      op.coeff = s.vel_cost;
      b.add_op(std::move(op), {g.point_var(i, seg), g.point_var(i, seg + 1)});
    }
  }

  if (s.dir_cost > 0.0) {
    for (int i = 0; i < p; ++i) {
      for (int seg = 0; seg + 2 <= g.eta; ++seg) {
        OpNode op;
        op.kind = OpKind::Direction;
        op.a = i;
        op.s = seg;
        op.coeff = s.dir_cost;
        b.add_op(std::move(op), {g.point_var(i, seg), g.point_var(i, seg + 1),
                                 g.point_var(i, seg + 2)});
      }
    }
  }

  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      for (int seg = 0; seg < g.eta; ++seg) {
        OpNode op;
        op.kind = OpKind::Collision;
        op.a = i;
        op.b = j;
        op.s = seg;
        op.coeff = s.agents[i].radius + s.agents[j].radius;
        b.add_op(std::move(op),
                 {g.point_var(i, seg), g.point_var(j, seg),
                  g.point_var(i, seg + 1), g.point_var(j, seg + 1)});
      }
    }
  }

  for (std::size_t w = 0; w < s.obstacles.size(); ++w) {
    for (int i = 0; i < p; ++i) {
      for (int seg = 0; seg < g.eta; ++seg) {
        OpNode op;
        op.kind = OpKind::Wall;
        op.a = static_cast<int>(w);
        op.b = i;
        op.s = seg;
        op.coeff = s.agents[i].radius;
        b.add_op(std::move(op),
                 {g.point_var(i, seg), g.point_var(i, seg + 1)});
      }
    }
  }

  detail::add_shared_structure(b, s);
  return b.finish();
}

// One-segment receding-horizon graph: break-point 0 pinned at the current
// positions, break-point 1 pulled toward each goal instead of anchored.
inline FactorGraph build_local_graph(const std::vector<Vec>& positions,
                                     const Scenario& s, double goal_pull) {
  Scenario step = s;
  step.eta = 1;
  step.landmark_groups.clear();
  step.sigma_links.clear();
  for (std::size_t i = 0; i < step.agents.size(); ++i) {
    step.agents[i].start = positions[i];
  }
  {
    const auto violations = validate_scenario(step);
    if (!violations.empty()) {
      std::string msg = "invalid local step:";
      for (const auto& v : violations) msg += "\n  " + v;
      throw std::invalid_argument(msg);
    }
  }

  detail::GraphBuilder b;
  FactorGraph& g = b.g;
  g.scenario = step;
  g.dim = step.dimension;
  g.eta = 1;
  g.num_agents = static_cast<int>(step.agents.size());
  g.local_mode = true;

  const int p = g.num_agents;
  for (int i = 0; i < p; ++i) {
    for (int sb = 0; sb <= 1; ++sb) {
      const int v = b.add_var(g.dim);
      g.vars[v].agent = i;
      g.vars[v].s = sb;
    }
  }
  for (int i = 0; i < p; ++i) {
    OpNode pin;
    pin.kind = OpKind::Position;
    pin.a = i;
    pin.s = 0;
    pin.target = positions[i];
    b.add_op(std::move(pin), {g.point_var(i, 0)});
    OpNode pull;
    pull.kind = OpKind::Goal;
    pull.a = i;
    pull.s = 1;
    pull.coeff = goal_pull;
    pull.target = step.agents[i].goal;
    b.add_op(std::move(pull), {g.point_var(i, 1)});
  }
  for (int i = 0; i < p; ++i) {
    OpNode op;
    op.kind = OpKind::Velocity;
    op.a = i;
    op.s = 0;
    op.coeff = step.vel_cost;
    b.add_op(std::move(op), {g.point_var(i, 0), g.point_var(i, 1)});
  }
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      OpNode op;
      op.kind = OpKind::Collision;
      op.a = i;
      op.b = j;
      op.s = 0;
      op.coeff = step.agents[i].radius + step.agents[j].radius;
      b.add_op(std::move(op), {g.point_var(i, 0), g.point_var(j, 0),
                               g.point_var(i, 1), g.point_var(j, 1)});
    }
  }
  for (std::size_t w = 0; w < step.obstacles.size(); ++w) {
    for (int i = 0; i < p; ++i) {
      OpNode op;
      op.kind = OpKind::Wall;
      op.a = static_cast<int>(w);
      op.b = i;
      op.s = 0;
      op.coeff = step.agents[i].radius;
      b.add_op(std::move(op), {g.point_var(i, 0), g.point_var(i, 1)});
    }
  }
  g.sigma_var.clear();
  return b.finish();
}

}  // namespace proxpath
