#pragma once

// Reference policies: aggregation along the Euclidean MST, and forwarding
// every raw measurement to the root over least-energy paths.

#include <algorithm>
#include <limits>
#include <vector>

#include "aggnet/geometry.hpp"
#include "aggnet/graphs.hpp"
#include "aggnet/schedule.hpp"
#include "aggnet/trees.hpp"

namespace aggnet {

struct BaselineResult {
  Schedule schedule;
  double energy = 0.0;
  int latency = 0;
  int latency_bound = 0;
};

inline BaselineResult mst_policy(const Deployment& dep, const EnergyParams& params) {
  params.check();
  BaselineResult r;
  const auto tree = tree_from_graph(build_mst(dep), dep.root);
  r.schedule = schedule_tree(tree);
  r.energy = tree_energy(tree, dep, params);
  r.latency = r.schedule.makespan();
  r.latency_bound = tree_latency(tree);
  return r;
}

// Least-energy predecessor toward the root for every node: dense Dijkstra on
// the complete graph with weights R^nu. pred[root] = -1.
inline std::vector<NodeId> least_energy_routes(const Deployment& dep, const EnergyParams& params) {
  const int n = dep.n;
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<NodeId> pred(n, kNoNode);
  std::vector<char> done(n, 0);
  dist[dep.root] = 0.0;
  for (int it = 0; it < n; ++it) {
    NodeId u = kNoNode;
    for (NodeId v = 0; v < n; ++v)
      if (!done[v] && (u == kNoNode || dist[v] < dist[u])) u = v;
    done[u] = 1;
    for (NodeId v = 0; v < n; ++v) {
      if (done[v]) continue;
      const double c = dist[u] + energy_from_dist2(dist2(dep, u, v), params);
      if (c < dist[v]) {
        dist[v] = c;
        pred[v] = u;
      }
    }
  }
  return pred;
}

// Every measurement travels its own least-energy path with no merging.
// Messages are placed longest path first (ties by node id); each hop takes
// the earliest slot after the previous hop in which both endpoints are idle.
inline BaselineResult raw_forwarding_policy(const Deployment& dep, const EnergyParams& params) {
  params.check();
  BaselineResult r;
  Schedule& s = r.schedule;
  s.n = dep.n;
  s.root = dep.root;
  const auto pred = least_energy_routes(dep, params);

  std::vector<std::vector<NodeId>> routes(dep.n);
  for (NodeId v = 0; v < dep.n; ++v) {
    if (v == dep.root) continue;
    for (NodeId x = v; x != kNoNode; x = pred[x]) routes[v].push_back(x);
  }
  std::vector<NodeId> order;
  for (NodeId v = 0; v < dep.n; ++v)
    if (v != dep.root) order.push_back(v);
  std::stable_sort(order.begin(), order.end(),
                   [&](NodeId a, NodeId b) { return routes[a].size() > routes[b].size(); });

  std::vector<std::vector<char>> busy(dep.n);
  auto is_busy = [&](NodeId v, int slot) {
    return slot < static_cast<int>(busy[v].size()) && busy[v][slot];
  };
  auto mark = [&](NodeId v, int slot) {
    if (static_cast<int>(busy[v].size()) <= slot) busy[v].resize(std::max<std::size_t>(slot + 1, busy[v].size() * 2), 0);
    busy[v][slot] = 1;
  };
  std::vector<double> e;
  int total_hops = 0;
  for (NodeId v : order) {
    const auto& route = routes[v];
    int slot = 0;
    for (std::size_t h = 0; h + 1 < route.size(); ++h) {
      const NodeId tx = route[h], rx = route[h + 1];
      ++slot;
      while (is_busy(tx, slot) || is_busy(rx, slot)) ++slot;
      mark(tx, slot);
      mark(rx, slot);
      s.slot(slot).push_back({tx, rx, {Token::measurement(v)}, false});
      e.push_back(edge_energy(dep, tx, rx, params));
      ++total_hops;
    }
  }
  r.energy = pairwise_sum(e);
  r.latency = s.makespan();
  r.latency_bound = total_hops;
  return r;
}

}  // namespace aggnet
