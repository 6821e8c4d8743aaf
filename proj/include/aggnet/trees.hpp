#pragma once

// Aggregation trees: latency recursion, minimum-latency constructions and
// a brute-force latency oracle for tiny n.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "aggnet/errors.hpp"
#include "aggnet/geometry.hpp"
#include "aggnet/graphs.hpp"

namespace aggnet {

inline int ceil_log2(std::int64_t n) {
  int k = 0;
  while ((std::int64_t{1} << k) < n) ++k;
  return k;
}

// Rooted spanning tree given by parent pointers. level[v] is the
// construction iteration (1-based) that added edge (parent[v], v) for trees
// built by the adoption algorithms; 0 where unknown. The slot of a level-k
// edge in a minimum-latency schedule is L - k + 1.
struct AggregationTree {
  int n = 0;
  NodeId root = 0;
  std::vector<NodeId> parent;
  std::vector<int> level;

  std::vector<std::vector<NodeId>> children() const {
    std::vector<std::vector<NodeId>> ch(n);
    for (NodeId v = 0; v < n; ++v)
      if (v != root) ch[parent[v]].push_back(v);
    return ch;
  }

  std::vector<Edge> edges() const {
    std::vector<Edge> e;
    for (NodeId v = 0; v < n; ++v)
      if (v != root) e.emplace_back(std::min(v, parent[v]), std::max(v, parent[v]));
    std::sort(e.begin(), e.end());
    return e;
  }
};

// BFS order from the root; throws invalid_structure unless the parent array
// is a spanning tree.
inline std::vector<NodeId> tree_bfs_order(const AggregationTree& t) {
  if (t.n < 1) throw invalid_structure("tree has no nodes");
  if (static_cast<int>(t.parent.size()) != t.n) throw invalid_structure("parent array size mismatch");
  if (t.root < 0 || t.root >= t.n) throw invalid_structure("root out of range");
  if (t.parent[t.root] != kNoNode) throw invalid_structure("root has a parent");
  for (NodeId v = 0; v < t.n; ++v)
    if (v != t.root && (t.parent[v] < 0 || t.parent[v] >= t.n || t.parent[v] == v))
      throw invalid_structure("node " + std::to_string(v) + " has an invalid parent");
  auto ch = t.children();
  std::vector<NodeId> order{t.root};
  order.reserve(t.n);
  for (std::size_t i = 0; i < order.size(); ++i)
    for (NodeId c : ch[order[i]]) order.push_back(c);
  if (static_cast<int>(order.size()) != t.n)
    throw invalid_structure("parent pointers contain a cycle or do not reach the root");
  return order;
}

inline void validate_tree(const AggregationTree& t) { (void)tree_bfs_order(t); }

// Subtree latencies by the recursion L = max_i (i + L_i) over children
// sorted by descending latency. Iterative, so chain depth is unbounded.
inline std::vector<int> subtree_latencies(const AggregationTree& t) {
  auto order = tree_bfs_order(t);
  auto ch = t.children();
  std::vector<int> lat(t.n, 0);
  std::vector<int> buf;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeId v = *it;
    buf.clear();
    for (NodeId c : ch[v]) buf.push_back(lat[c]);
    std::sort(buf.begin(), buf.end(), std::greater<>());
    int l = 0;
    for (std::size_t i = 0; i < buf.size(); ++i) l = std::max(l, static_cast<int>(i) + 1 + buf[i]);
    lat[v] = l;
  }
  return lat;
}

inline int tree_latency(const AggregationTree& t) { return subtree_latencies(t)[t.root]; }

inline int tree_depth(const AggregationTree& t) {
  auto order = tree_bfs_order(t);
  std::vector<int> depth(t.n, 0);
  int best = 0;
  for (NodeId v : order)
    if (v != t.root) best = std::max(best, depth[v] = depth[t.parent[v]] + 1);
  return best;
}

// Minimum aggregation latency over every rooted tree on n labeled nodes and
// every single-port half-duplex schedule, by breadth-first search over the
// set of nodes still holding unsent data. Refuses n > 9.
inline int brute_force_min_latency(int n) {
  if (n < 1) throw invalid_parameter("brute_force_min_latency: n must be >= 1");
  if (n > 9) throw invalid_parameter("brute_force_min_latency: exhaustive search limited to n <= 9");
  const std::uint32_t full = (1u << n) - 1;
  const std::uint32_t goal = 1u;  // only the root (node 0) still holds data
  std::vector<int> dist(full + 1, -1);
  std::deque<std::uint32_t> queue{full};
  dist[full] = 0;
  while (!queue.empty()) {
    std::uint32_t s = queue.front();
    queue.pop_front();
    if (s == goal) return dist[s];
    // every set of disjoint directed pairs (tx -> rx) among holders; tx != root
    std::vector<std::uint32_t> next;
    auto rec = [&](auto&& self, std::uint32_t undecided, std::uint32_t senders) -> void {
      if (undecided == 0) {
        if (senders) next.push_back(s & ~senders);
        return;
      }
      int a = __builtin_ctz(undecided);
      std::uint32_t rest = undecided & ~(1u << a);
      self(self, rest, senders);  // a idle
      for (std::uint32_t m = rest; m; m &= m - 1) {
        int b = __builtin_ctz(m);
        std::uint32_t rest2 = rest & ~(1u << b);
        if (a != 0) self(self, rest2, senders | (1u << a));  // a -> b
        if (b != 0) self(self, rest2, senders | (1u << b));  // b -> a
      }
    };
    rec(rec, s, 0);
    for (auto t : next)
      if (dist[t] < 0) {
        dist[t] = dist[s] + 1;
        queue.push_back(t);
      }
  }
  throw error("brute_force_min_latency: goal unreachable");
}

// Every node already in the tree adopts one new child per iteration.
// Non-root nodes are adopted in increasing id order.
inline AggregationTree build_min_latency_tree(int n, NodeId root = 0) {
  if (n < 1) throw invalid_parameter("build_min_latency_tree: n must be >= 1");
  if (root < 0 || root >= n) throw invalid_parameter("build_min_latency_tree: root out of range");
  AggregationTree t;
  t.n = n;
  t.root = root;
  t.parent.assign(n, kNoNode);
  t.level.assign(n, 0);
  std::vector<NodeId> in_tree{root};
  NodeId next = 0;
  auto advance = [&] {
    while (next < n && next == root) ++next;
  };
  advance();
  const int iterations = ceil_log2(n);
  for (int k = 1; k <= iterations; ++k) {
    const std::size_t active = in_tree.size();
    for (std::size_t a = 0; a < active && next < n; ++a) {
      t.parent[next] = in_tree[a];
      t.level[next] = k;
      in_tree.push_back(next);
      ++next;
      advance();
    }
  }
  return t;
}

// Location-aware minimum-latency tree. Each tree node owns a region; in each
// iteration it bisects the region, adopts the node of the far half closest
// to itself, hands that half to the child and keeps the near half.
inline AggregationTree build_bisection_tree(const Deployment& dep) {
  AggregationTree t;
  t.n = dep.n;
  t.root = dep.root;
  t.parent.assign(dep.n, kNoNode);
  t.level.assign(dep.n, 0);
  std::vector<Region> region(dep.n);
  std::vector<std::vector<NodeId>> members(dep.n);
  region[dep.root] = bounding_region(dep);
  members[dep.root].resize(dep.n);
  std::iota(members[dep.root].begin(), members[dep.root].end(), 0);
  std::vector<NodeId> in_tree{dep.root};
  const int iterations = ceil_log2(dep.n);
  for (int k = 1; k <= iterations; ++k) {
    const std::size_t active = in_tree.size();
    for (std::size_t a = 0; a < active; ++a) {
      NodeId i = in_tree[a];
      if (members[i].size() < 2) continue;
      Bisection b = region_bisect(region[i], members[i], i, dep);
      NodeId j = nearest_in(dep, i, b.far_members);
      t.parent[j] = i;
      t.level[j] = k;
      in_tree.push_back(j);
      region[j] = std::move(b.far);
      members[j] = std::move(b.far_members);
      region[i] = std::move(b.near);
      members[i] = std::move(b.near_members);
    }
  }
  if (static_cast<int>(in_tree.size()) != dep.n)
    throw error("build_bisection_tree: construction left nodes unassigned");
  return t;
}

inline double tree_energy(const AggregationTree& t, const Deployment& dep, const EnergyParams& params) {
  params.check();
  if (t.n != dep.n) throw invalid_parameter("tree_energy: tree and deployment sizes differ");
  std::vector<double> e;
  e.reserve(t.n);
  for (NodeId v = 0; v < t.n; ++v)
    if (v != t.root) e.push_back(edge_energy(dep, v, t.parent[v], params));
  return pairwise_sum(e);
}

// Roots an undirected spanning tree (e.g. the MST) at `root`.
inline AggregationTree tree_from_graph(const UndirectedGraph& g, NodeId root) {
  if (g.n() < 1) throw invalid_structure("tree_from_graph: empty graph");
  if (static_cast<int>(g.edges().size()) != g.n() - 1)
    throw invalid_structure("tree_from_graph: graph is not a tree");
  AggregationTree t;
  t.n = g.n();
  t.root = root;
  t.parent.assign(g.n(), kNoNode);
  std::vector<char> seen(g.n(), 0);
  std::vector<NodeId> order{root};
  seen[root] = 1;
  for (std::size_t i = 0; i < order.size(); ++i)
    for (NodeId v : g.neighbors(order[i]))
      if (!seen[v]) {
        seen[v] = 1;
        t.parent[v] = order[i];
        order.push_back(v);
      }
  if (static_cast<int>(order.size()) != g.n()) throw invalid_structure("tree_from_graph: graph is disconnected");
  return t;
}

// Text format:
//   # aggnet tree v1
//   n <count>
//   root <id>
//   <node> <parent or -1> <construction level>
inline void write_tree(std::ostream& out, const AggregationTree& t) {
  out << "# aggnet tree v1\nn " << t.n << "\nroot " << t.root << "\n";
  for (NodeId v = 0; v < t.n; ++v)
    out << v << ' ' << t.parent[v] << ' ' << (t.level.empty() ? 0 : t.level[v]) << '\n';
}

inline AggregationTree read_tree(std::istream& in) {
  AggregationTree t;
  t.n = -1;
  std::string line;
  NodeId next = 0;
  while (text::next_record(in, line)) {
    auto tok = text::split_ws(line);
    if (tok[0] == "n" && tok.size() == 2) {
      t.n = text::parse_number<int>(tok[1], "n");
      t.parent.assign(t.n, kNoNode);
      t.level.assign(t.n, 0);
      continue;
    }
    if (tok[0] == "root" && tok.size() == 2) {
      t.root = text::parse_number<NodeId>(tok[1], "root");
      continue;
    }
    if (t.n < 1 || tok.size() != 3 || next >= t.n) throw invalid_input("bad tree record: " + line);
    if (text::parse_number<NodeId>(tok[0], "node") != next) throw invalid_input("tree nodes must be listed in order");
    t.parent[next] = text::parse_number<NodeId>(tok[1], "parent");
    t.level[next] = text::parse_number<int>(tok[2], "level");
    ++next;
  }
  if (t.n < 1 || next != t.n) throw invalid_input("tree record count mismatch");
  validate_tree(t);
  return t;
}

}  // namespace aggnet
