#pragma once

// The latency-energy tradeoff policy for sum functions: relay budgets per
// construction level, hop-bounded least-energy paths and assembly of the
// leveled aggregation plan.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "aggnet/errors.hpp"
#include "aggnet/geometry.hpp"
#include "aggnet/trees.hpp"

namespace aggnet {

struct WeightSchedule {
  int iterations = 0;     // ceil(log2 n)
  std::vector<int> w;     // relay budget of level k, k = 0..iterations-1
  double delta = 0.0;     // additional latency allowed
  double zeta = 0.0;      // normalizer

  int total() const { return std::accumulate(w.begin(), w.end(), 0); }
};

// nu > d: w_k = floor(zeta * delta * 2^(k(1/nu - 1/d))), zeta = 1 - 2^(1/nu - 1/d)
// nu = d: w_k = floor(delta / ceil(log2 n))
// nu < d: w_k = 0
inline WeightSchedule compute_weights(int n, int d, const EnergyParams& params, double delta) {
  params.check();
  if (!(delta >= 0.0)) throw invalid_parameter("compute_weights: delta must be >= 0");
  if (n < 2) throw invalid_parameter("compute_weights: n must be >= 2");
  if (d < 1) throw invalid_parameter("compute_weights: d must be >= 1");
  WeightSchedule ws;
  ws.iterations = ceil_log2(n);
  ws.delta = delta;
  ws.w.assign(ws.iterations, 0);
  const double nu = params.nu;
  if (nu > d) {
    const double e = 1.0 / nu - 1.0 / d;
    ws.zeta = 1.0 - std::exp2(e);
    for (int k = 0; k < ws.iterations; ++k)
      ws.w[k] = static_cast<int>(std::floor(ws.zeta * delta * std::exp2(k * e)));
  } else if (nu == d) {
    ws.zeta = 1.0 / ws.iterations;
    const int per_level = static_cast<int>(std::floor(delta / ws.iterations));
    std::fill(ws.w.begin(), ws.w.end(), per_level);
  }
  return ws;
}

enum class PathMode { exact, heuristic };

inline const char* to_string(PathMode m) { return m == PathMode::exact ? "exact" : "heuristic"; }

inline PathMode parse_path_mode(const std::string& s) {
  if (s == "exact") return PathMode::exact;
  if (s == "heuristic") return PathMode::heuristic;
  throw invalid_parameter("unknown path mode '" + s + "' (expected exact|heuristic)");
}

namespace detail {

inline std::vector<NodeId> path_node_set(std::span<const NodeId> candidates, NodeId u, NodeId v) {
  std::vector<NodeId> nodes(candidates.begin(), candidates.end());
  nodes.push_back(u);
  nodes.push_back(v);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

inline bool energy_le(double a, double b) { return a <= b + 1e-12 * std::max(1.0, std::abs(b)); }

}  // namespace detail

// Least sum of R^nu from u to v through at most max_intermediate relays drawn
// from `candidates`. Hop-indexed Bellman-Ford over the complete geometric
// graph; ties prefer fewer hops, then the lexicographically smallest node
// sequence.
inline std::vector<NodeId> hop_bounded_path_exact(const Deployment& dep,
                                                  std::span<const NodeId> candidates, NodeId u,
                                                  NodeId v, int max_intermediate,
                                                  const EnergyParams& params) {
  if (u == v) throw invalid_parameter("hop_bounded_path: endpoints coincide");
  if (max_intermediate < 0) throw invalid_parameter("hop_bounded_path: negative relay budget");
  params.check();
  if (max_intermediate == 0) return {u, v};
  const auto nodes = detail::path_node_set(candidates, u, v);
  const std::size_t m = nodes.size();
  auto index_of = [&](NodeId x) {
    return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), x) - nodes.begin());
  };
  const std::size_t iu = index_of(u), iv = index_of(v);
  std::vector<double> cost(m * m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b)
      cost[a * m + b] = cost[b * m + a] = edge_energy(dep, nodes[a], nodes[b], params);

  const double inf = std::numeric_limits<double>::infinity();
  const int max_hops = max_intermediate + 1;
  // togo[h][x]: least energy from x to v with at most h hops
  std::vector<std::vector<double>> togo(max_hops + 1, std::vector<double>(m, inf));
  togo[0][iv] = 0.0;
  for (int h = 1; h <= max_hops; ++h) {
    auto& cur = togo[h];
    const auto& prev = togo[h - 1];
    for (std::size_t x = 0; x < m; ++x) {
      double best = prev[x];
      const double* row = &cost[x * m];
      for (std::size_t y = 0; y < m; ++y)
        if (y != x && prev[y] < inf) best = std::min(best, row[y] + prev[y]);
      cur[x] = best;
    }
  }
  const double opt = togo[max_hops][iu];
  int hops = max_hops;
  for (int h = 1; h <= max_hops; ++h)
    if (detail::energy_le(togo[h][iu], opt)) {
      hops = h;
      break;
    }
  std::vector<NodeId> path{u};
  std::size_t x = iu;
  for (int left = hops; x != iv; --left) {
    const double target = togo[left][x];
    std::size_t pick = m;
    for (std::size_t y = 0; y < m; ++y) {  // ascending id
      if (y == x || togo[left - 1][y] == inf) continue;
      if (detail::energy_le(cost[x * m + y] + togo[left - 1][y], target)) {
        pick = y;
        break;
      }
    }
    if (pick == m) throw error("hop_bounded_path_exact: traceback failed");
    path.push_back(nodes[pick]);
    x = pick;
  }
  return path;
}

// Equally spaced subdivision points on the segment u-v, each snapped to the
// nearest candidate; loops and repeats are cut. Uses max_intermediate points
// when ||u-v|| >= max_intermediate, otherwise ceil(||u-v||) - 1.
inline std::vector<NodeId> hop_bounded_path_heuristic(const Deployment& dep,
                                                      std::span<const NodeId> candidates, NodeId u,
                                                      NodeId v, int max_intermediate,
                                                      const EnergyParams& params) {
  if (u == v) throw invalid_parameter("hop_bounded_path: endpoints coincide");
  if (max_intermediate < 0) throw invalid_parameter("hop_bounded_path: negative relay budget");
  params.check();
  const double len = distance(dep, u, v);
  int points = max_intermediate;
  if (len < max_intermediate) points = std::max(0, static_cast<int>(std::ceil(len)) - 1);
  std::vector<NodeId> raw{u};
  std::vector<double> x(dep.d);
  const auto pu = dep.position(u), pv = dep.position(v);
  for (int t = 1; t <= points && !candidates.empty(); ++t) {
    const double f = static_cast<double>(t) / (points + 1);
    for (int j = 0; j < dep.d; ++j) x[j] = pu[j] + f * (pv[j] - pu[j]);
    NodeId best = kNoNode;
    double bd = std::numeric_limits<double>::infinity();
    for (NodeId c : candidates) {
      double d2 = dist2(x, dep.position(c));
      if (d2 < bd || (d2 == bd && c < best)) {
        bd = d2;
        best = c;
      }
    }
    raw.push_back(best);
  }
  raw.push_back(v);
  // cut loops: on revisiting a node, drop everything since its first visit
  std::vector<NodeId> path;
  for (NodeId p : raw) {
    auto it = std::find(path.begin(), path.end(), p);
    if (it != path.end())
      path.erase(it + 1, path.end());
    else
      path.push_back(p);
  }
  return path;
}

struct PlanPath {
  int level = 0;
  NodeId parent = kNoNode;
  NodeId child = kNoNode;
  std::vector<NodeId> nodes;  // child, relays..., parent

  int hops() const { return static_cast<int>(nodes.size()) - 1; }
};

// A node left uncovered by the construction, attached directly to `target`.
struct Repair {
  NodeId node = kNoNode;
  NodeId target = kNoNode;
};

struct AggregationPlan {
  int n = 0;
  NodeId root = 0;
  WeightSchedule weights;
  std::vector<std::vector<PlanPath>> levels;  // levels[k], k = 0..iterations-1
  std::vector<Repair> repairs;
  int heuristic_fallbacks = 0;  // exact searches replaced by the heuristic

  int iterations() const { return static_cast<int>(levels.size()); }
  int latency_bound() const {
    return weights.iterations + weights.total() + static_cast<int>(repairs.size());
  }
};

struct PlanOptions {
  PathMode path_mode = PathMode::exact;
  // exact searches whose cost (candidates^2 * (budget+1)) exceeds this
  // switch to the heuristic
  double exact_cost_cap = 4.0e6;
};

// Region-bisection construction with hop-bounded paths. Each active node i
// bisects its region R_i, picks the far-half node nearest to it that has not
// yet appeared on any path, and joins it with a path of at most w_k relays
// drawn from R_i (before the split). Path nodes are never picked as
// children later; relays may serve again at other levels.
inline AggregationPlan build_agg_plan(const Deployment& dep, const WeightSchedule& ws,
                                      const EnergyParams& params, const PlanOptions& opts = {}) {
  params.check();
  AggregationPlan plan;
  plan.n = dep.n;
  plan.root = dep.root;
  plan.weights = ws;
  if (dep.n == 1) return plan;
  if (ws.iterations != ceil_log2(dep.n) || static_cast<int>(ws.w.size()) != ws.iterations)
    throw invalid_parameter("build_agg_plan: weight schedule does not match n");
  plan.levels.resize(ws.iterations);

  std::vector<char> used(dep.n, 0);  // appeared on some path (A_2)
  std::vector<Region> region(dep.n);
  std::vector<std::vector<NodeId>> members(dep.n);
  region[dep.root] = bounding_region(dep);
  members[dep.root].resize(dep.n);
  std::iota(members[dep.root].begin(), members[dep.root].end(), 0);
  std::vector<NodeId> active{dep.root};  // A_1, in adoption order
  used[dep.root] = 1;

  std::vector<NodeId> relays;
  for (int k = 0; k < ws.iterations; ++k) {
    const int budget = ws.w[k];
    const std::size_t count = active.size();
    for (std::size_t a = 0; a < count; ++a) {
      const NodeId i = active[a];
      if (members[i].size() < 2) continue;
      Bisection b = region_bisect(region[i], members[i], i, dep);
      const NodeId j = nearest_in(dep, i, b.far_members, [&](NodeId v) { return !used[v]; });
      if (j == kNoNode) continue;

      PlanPath path;
      path.level = k;
      path.parent = i;
      path.child = j;
      if (budget == 0) {
        path.nodes = {j, i};
      } else {
        relays.clear();
        for (NodeId v : members[i])
          if (v != i && v != j) relays.push_back(v);
        const double m = static_cast<double>(relays.size() + 2);
        bool exact = opts.path_mode == PathMode::exact;
        if (exact && m * m * (budget + 1) > opts.exact_cost_cap) {
          exact = false;
          ++plan.heuristic_fallbacks;
        }
        path.nodes = exact ? hop_bounded_path_exact(dep, relays, j, i, budget, params)
                           : hop_bounded_path_heuristic(dep, relays, j, i, budget, params);
      }
      for (NodeId v : path.nodes) used[v] = 1;
      plan.levels[k].push_back(std::move(path));
      active.push_back(j);
      region[j] = std::move(b.far);
      members[j] = std::move(b.far_members);
      region[i] = std::move(b.near);
      members[i] = std::move(b.near_members);
    }
  }

  // attach anything never placed on a path to the nearest covered node of
  // the region that owns it
  for (NodeId owner : active)
    for (NodeId v : members[owner])
      if (!used[v]) {
        NodeId target = nearest_in(dep, v, members[owner], [&](NodeId x) { return used[x] != 0; });
        plan.repairs.push_back({v, target});
      }
  std::sort(plan.repairs.begin(), plan.repairs.end(),
            [](const Repair& a, const Repair& b) { return a.node < b.node; });
  return plan;
}

inline double plan_energy(const AggregationPlan& plan, const Deployment& dep, const EnergyParams& params) {
  std::vector<double> e;
  for (const auto& level : plan.levels)
    for (const auto& p : level)
      for (std::size_t h = 0; h + 1 < p.nodes.size(); ++h)
        e.push_back(edge_energy(dep, p.nodes[h], p.nodes[h + 1], params));
  for (const auto& r : plan.repairs) e.push_back(edge_energy(dep, r.node, r.target, params));
  return pairwise_sum(e);
}

// The plan's parent pointers when every path is a single hop.
inline AggregationTree plan_as_tree(const AggregationPlan& plan) {
  AggregationTree t;
  t.n = plan.n;
  t.root = plan.root;
  t.parent.assign(plan.n, kNoNode);
  t.level.assign(plan.n, 0);
  for (const auto& level : plan.levels)
    for (const auto& p : level) {
      if (p.hops() != 1) throw invalid_structure("plan_as_tree: plan contains relayed paths");
      t.parent[p.child] = p.parent;
      t.level[p.child] = p.level + 1;
    }
  for (const auto& r : plan.repairs) t.parent[r.node] = r.target;
  validate_tree(t);
  return t;
}

// Text format:
//   # aggnet plan v1
//   n <count>
//   root <id>
//   weights <w_0> ... <w_{K-1}>
//   delta <value>
//   path <level> <parent> <child> : <child> <relays...> <parent>
//   repair <node> <target>
inline void write_plan(std::ostream& out, const AggregationPlan& plan) {
  out << "# aggnet plan v1\nn " << plan.n << "\nroot " << plan.root << "\nweights";
  for (int w : plan.weights.w) out << ' ' << w;
  out << "\ndelta " << text::format_double(plan.weights.delta) << '\n';
  for (const auto& level : plan.levels)
    for (const auto& p : level) {
      out << "path " << p.level << ' ' << p.parent << ' ' << p.child << " :";
      for (NodeId v : p.nodes) out << ' ' << v;
      out << '\n';
    }
  for (const auto& r : plan.repairs) out << "repair " << r.node << ' ' << r.target << '\n';
}

inline AggregationPlan read_plan(std::istream& in) {
  AggregationPlan plan;
  std::string line;
  bool have_weights = false;
  while (text::next_record(in, line)) {
    auto tok = text::split_ws(line);
    if (tok[0] == "n" && tok.size() == 2) {
      plan.n = text::parse_number<int>(tok[1], "n");
    } else if (tok[0] == "root" && tok.size() == 2) {
      plan.root = text::parse_number<NodeId>(tok[1], "root");
    } else if (tok[0] == "weights") {
      plan.weights.w.clear();
      for (std::size_t i = 1; i < tok.size(); ++i) plan.weights.w.push_back(text::parse_number<int>(tok[i], "weight"));
      plan.weights.iterations = static_cast<int>(plan.weights.w.size());
      plan.levels.assign(plan.weights.iterations, {});
      have_weights = true;
    } else if (tok[0] == "delta" && tok.size() == 2) {
      plan.weights.delta = text::parse_number<double>(tok[1], "delta");
    } else if (tok[0] == "path" && tok.size() >= 7 && tok[4] == ":") {
      if (!have_weights) throw invalid_input("plan: weights must precede paths");
      PlanPath p;
      p.level = text::parse_number<int>(tok[1], "level");
      p.parent = text::parse_number<NodeId>(tok[2], "parent");
      p.child = text::parse_number<NodeId>(tok[3], "child");
      for (std::size_t i = 5; i < tok.size(); ++i) p.nodes.push_back(text::parse_number<NodeId>(tok[i], "node"));
      if (p.level < 0 || p.level >= plan.weights.iterations) throw invalid_input("plan: path level out of range");
      if (p.nodes.front() != p.child || p.nodes.back() != p.parent)
        throw invalid_input("plan: path endpoints disagree with header");
      plan.levels[p.level].push_back(std::move(p));
    } else if (tok[0] == "repair" && tok.size() == 3) {
      plan.repairs.push_back({text::parse_number<NodeId>(tok[1], "node"), text::parse_number<NodeId>(tok[2], "target")});
    } else {
      throw invalid_input("plan: unrecognized record: " + line);
    }
  }
  return plan;
}

}  // namespace aggnet
