#pragma once

// Function dependency graphs (k-NNG, rho-RGG), the Euclidean MST, maximal
// cliques and Delta+1 edge colorings.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "aggnet/errors.hpp"
#include "aggnet/geometry.hpp"
#include "aggnet/spatial_grid.hpp"

namespace aggnet {

using Edge = std::pair<NodeId, NodeId>;  // stored with first < second

class UndirectedGraph {
 public:
  UndirectedGraph() = default;

  // Rejects self-loops; duplicate and reversed pairs collapse to one edge.
  UndirectedGraph(int n, std::vector<Edge> edges) : n_(n), adj_(n) {
    if (n < 0) throw invalid_parameter("graph node count must be >= 0");
    for (auto& e : edges) {
      if (e.first == e.second) throw invalid_parameter("graph edges may not be self-loops");
      if (e.first < 0 || e.second < 0 || e.first >= n || e.second >= n)
        throw invalid_parameter("graph edge endpoint out of range");
      if (e.first > e.second) std::swap(e.first, e.second);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges_ = std::move(edges);
    for (auto [u, v] : edges_) {
      adj_[u].push_back(v);
      adj_[v].push_back(u);
    }
    for (auto& a : adj_) std::sort(a.begin(), a.end());
  }

  int n() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const NodeId> neighbors(NodeId v) const { return adj_[v]; }
  int degree(NodeId v) const { return static_cast<int>(adj_[v].size()); }
  bool has_edge(NodeId u, NodeId v) const {
    return std::binary_search(adj_[u].begin(), adj_[u].end(), v);
  }

  // Index of edge {u, v} in edges(), or -1.
  int edge_index(NodeId u, NodeId v) const {
    if (u > v) std::swap(u, v);
    auto it = std::lower_bound(edges_.begin(), edges_.end(), Edge{u, v});
    return (it != edges_.end() && *it == Edge{u, v}) ? static_cast<int>(it - edges_.begin()) : -1;
  }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<NodeId>> adj_;
};

inline int max_degree(const UndirectedGraph& g) {
  int best = 0;
  for (NodeId v = 0; v < g.n(); ++v) best = std::max(best, g.degree(v));
  return best;
}

// Undirected union of every node's k nearest neighbors; distance ties go to
// the smaller id.
inline UndirectedGraph build_knng(const Deployment& dep, int k) {
  if (k < 1) throw invalid_parameter("build_knng: k must be >= 1");
  if (k >= dep.n) throw invalid_parameter("build_knng: k must be <= n-1");
  SpatialGrid grid(dep);
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(dep.n) * k);
  for (NodeId i = 0; i < dep.n; ++i)
    for (NodeId v : grid.k_nearest(i, k)) edges.emplace_back(i, v);
  return UndirectedGraph(dep.n, std::move(edges));
}

inline UndirectedGraph build_rgg(const Deployment& dep, double rho) {
  if (!(rho > 0.0)) throw invalid_parameter("build_rgg: radius must be > 0");
  SpatialGrid grid(dep, rho);
  std::vector<Edge> edges;
  for (NodeId i = 0; i < dep.n; ++i)
    grid.for_each_within(i, rho, [&](NodeId v) {
      if (v > i) edges.emplace_back(i, v);
    });
  return UndirectedGraph(dep.n, std::move(edges));
}

// Euclidean MST by dense Prim from node 0. Minimizes the sum of R^nu for
// every nu >= 1 since the map R -> R^nu is monotone.
inline UndirectedGraph build_mst(const Deployment& dep) {
  if (dep.n < 1) throw invalid_parameter("build_mst: empty deployment");
  const int n = dep.n;
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<NodeId> from(n, kNoNode);
  std::vector<char> in_tree(n, 0);
  std::vector<Edge> edges;
  edges.reserve(n > 0 ? n - 1 : 0);
  NodeId cur = 0;
  in_tree[0] = 1;
  for (int added = 1; added < n; ++added) {
    NodeId next = kNoNode;
    double nd = std::numeric_limits<double>::infinity();
    for (NodeId v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      double d2 = dist2(dep, cur, v);
      if (d2 < best[v]) {
        best[v] = d2;
        from[v] = cur;
      }
      if (best[v] < nd) {
        nd = best[v];
        next = v;
      }
    }
    in_tree[next] = 1;
    edges.emplace_back(from[next], next);
    cur = next;
  }
  return UndirectedGraph(n, std::move(edges));
}

struct CliqueSet {
  std::vector<std::vector<NodeId>> cliques;  // each sorted; clique id = index

  std::size_t size() const { return cliques.size(); }
};

namespace detail {

inline std::vector<NodeId> intersect_sorted(std::span<const NodeId> a, std::span<const NodeId> b) {
  std::vector<NodeId> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// Bron-Kerbosch with Tomita pivoting. P and X are sorted.
inline void bron_kerbosch(const UndirectedGraph& g, std::vector<NodeId>& r, std::vector<NodeId> p,
                          std::vector<NodeId> x, std::vector<std::vector<NodeId>>& out) {
  if (p.empty()) {
    if (x.empty()) {
      auto c = r;
      std::sort(c.begin(), c.end());
      out.push_back(std::move(c));
    }
    return;
  }
  NodeId pivot = kNoNode;
  std::size_t best = 0;
  for (auto* set : {&p, &x})
    for (NodeId u : *set) {
      auto nb = g.neighbors(u);
      std::size_t cnt = 0;
      for (NodeId v : p) cnt += std::binary_search(nb.begin(), nb.end(), v) ? 1 : 0;
      if (pivot == kNoNode || cnt > best) {
        pivot = u;
        best = cnt;
      }
    }
  auto pn = g.neighbors(pivot);
  std::vector<NodeId> candidates;
  std::set_difference(p.begin(), p.end(), pn.begin(), pn.end(), std::back_inserter(candidates));
  for (NodeId v : candidates) {
    auto nv = g.neighbors(v);
    r.push_back(v);
    bron_kerbosch(g, r, intersect_sorted(p, nv), intersect_sorted(x, nv), out);
    r.pop_back();
    p.erase(std::lower_bound(p.begin(), p.end(), v));
    x.insert(std::lower_bound(x.begin(), x.end(), v), v);
  }
}

}  // namespace detail

// All inclusion-maximal cliques, sorted lexicographically. Isolated nodes
// come out as singletons.
inline CliqueSet maximal_cliques(const UndirectedGraph& g) {
  CliqueSet cs;
  const int n = g.n();
  const std::size_t m = g.edges().size();
  if (n > 0 && m == static_cast<std::size_t>(n) * (n - 1) / 2) {
    std::vector<NodeId> all(n);
    std::iota(all.begin(), all.end(), 0);
    cs.cliques.push_back(std::move(all));
    return cs;
  }
  // degeneracy order for the outer level
  std::vector<int> deg(n);
  std::vector<std::vector<NodeId>> bucket(n + 1);
  int maxd = 0;
  for (NodeId v = 0; v < n; ++v) {
    deg[v] = g.degree(v);
    maxd = std::max(maxd, deg[v]);
  }
  bucket.resize(maxd + 1);
  for (NodeId v = 0; v < n; ++v) bucket[deg[v]].push_back(v);
  std::vector<char> removed(n, 0);
  std::vector<int> pos(n);
  std::vector<NodeId> order;
  order.reserve(n);
  int cur = 0;
  while (static_cast<int>(order.size()) < n) {
    cur = std::max(0, cur - 1);
    while (cur <= maxd && bucket[cur].empty()) ++cur;
    NodeId v = bucket[cur].back();
    bucket[cur].pop_back();
    if (removed[v] || deg[v] != cur) continue;
    removed[v] = 1;
    pos[v] = static_cast<int>(order.size());
    order.push_back(v);
    for (NodeId u : g.neighbors(v))
      if (!removed[u]) bucket[--deg[u]].push_back(u);
  }
  for (NodeId v : order) {
    std::vector<NodeId> p, x;
    for (NodeId u : g.neighbors(v)) (pos[u] > pos[v] ? p : x).push_back(u);
    std::sort(p.begin(), p.end());
    std::sort(x.begin(), x.end());
    std::vector<NodeId> r{v};
    detail::bron_kerbosch(g, r, std::move(p), std::move(x), cs.cliques);
  }
  std::sort(cs.cliques.begin(), cs.cliques.end());
  return cs;
}

struct EdgeColoring {
  std::vector<int> color;  // parallel to graph.edges(); colors are 1-based
  int num_colors = 0;
};

// Misra-Gries: a proper edge coloring with at most max_degree + 1 colors.
inline EdgeColoring proper_edge_coloring(const UndirectedGraph& g) {
  const int n = g.n();
  const int palette = max_degree(g) + 1;
  // at[v][c] = neighbor joined to v by an edge of color c, or kNoNode
  std::vector<std::vector<NodeId>> at(n, std::vector<NodeId>(palette + 1, kNoNode));
  EdgeColoring out;
  out.color.assign(g.edges().size(), 0);

  auto color_of = [&](NodeId u, NodeId v) { return out.color[g.edge_index(u, v)]; };
  auto set_color = [&](NodeId u, NodeId v, int c) {
    int idx = g.edge_index(u, v);
    int old = out.color[idx];
    if (old != 0) {
      at[u][old] = kNoNode;
      at[v][old] = kNoNode;
    }
    out.color[idx] = c;
    if (c != 0) {
      at[u][c] = v;
      at[v][c] = u;
    }
  };
  auto is_free = [&](NodeId v, int c) { return at[v][c] == kNoNode; };
  auto free_color = [&](NodeId v) {
    for (int c = 1; c <= palette; ++c)
      if (is_free(v, c)) return c;
    throw error("proper_edge_coloring: no free color");
  };

  for (auto [u0, v0] : g.edges()) {
    const NodeId u = u0;
    // maximal fan of u starting at v0
    std::vector<NodeId> fan{v0};
    std::vector<char> in_fan(n, 0);
    in_fan[v0] = 1;
    for (bool grew = true; grew;) {
      grew = false;
      NodeId last = fan.back();
      for (int c = 1; c <= palette; ++c) {
        if (!is_free(last, c)) continue;
        NodeId x = at[u][c];
        if (x != kNoNode && !in_fan[x]) {
          fan.push_back(x);
          in_fan[x] = 1;
          grew = true;
          break;
        }
      }
    }
    const int c = free_color(u);
    const int d = free_color(fan.back());

    // invert the cd-path starting at u (it starts with a d-edge since c is free on u)
    if (c != d) {
      std::vector<NodeId> path{u};
      NodeId cur = u;
      int want = d;
      while (at[cur][want] != kNoNode) {
        NodeId nxt = at[cur][want];
        path.push_back(nxt);
        cur = nxt;
        want = (want == d) ? c : d;
      }
      std::vector<int> cols;
      for (std::size_t i = 0; i + 1 < path.size(); ++i) cols.push_back(color_of(path[i], path[i + 1]));
      for (std::size_t i = 0; i + 1 < path.size(); ++i) set_color(path[i], path[i + 1], 0);
      for (std::size_t i = 0; i + 1 < path.size(); ++i)
        set_color(path[i], path[i + 1], cols[i] == c ? d : c);
    }

    // first fan vertex w with d free whose prefix is still a fan
    std::size_t w = fan.size();
    for (std::size_t i = 0; i < fan.size(); ++i) {
      if (i > 0) {
        int ci = color_of(u, fan[i]);
        if (ci == 0 || !is_free(fan[i - 1], ci)) break;
      }
      if (is_free(fan[i], d)) {
        w = i;
        break;
      }
    }
    if (w == fan.size()) throw error("proper_edge_coloring: fan rotation failed");
    // rotate the prefix fan[0..w]
    for (std::size_t i = 0; i < w; ++i) {
      int next_c = color_of(u, fan[i + 1]);
      set_color(u, fan[i + 1], 0);
      set_color(u, fan[i], next_c);
    }
    set_color(u, fan[w], d);
  }
  for (int c : out.color) out.num_colors = std::max(out.num_colors, c);
  return out;
}

inline bool is_proper_coloring(const UndirectedGraph& g, const EdgeColoring& col) {
  if (col.color.size() != g.edges().size()) return false;
  std::vector<std::vector<int>> seen(g.n());
  for (std::size_t i = 0; i < g.edges().size(); ++i) {
    int c = col.color[i];
    if (c < 1) return false;
    for (NodeId v : {g.edges()[i].first, g.edges()[i].second}) {
      if (std::find(seen[v].begin(), seen[v].end(), c) != seen[v].end()) return false;
      seen[v].push_back(c);
    }
  }
  return true;
}

// Edge list, one "u v" per line with u < v, ascending.
inline void write_edge_list(std::ostream& out, const UndirectedGraph& g) {
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

// One clique per line, ids ascending.
inline void write_cliques(std::ostream& out, const CliqueSet& cs) {
  for (const auto& c : cs.cliques) {
    for (std::size_t i = 0; i < c.size(); ++i) out << (i ? " " : "") << c[i];
    out << '\n';
  }
}

inline UndirectedGraph read_edge_list(std::istream& in, int n) {
  std::vector<Edge> edges;
  std::string line;
  while (text::next_record(in, line)) {
    auto tok = text::split_ws(line);
    if (tok.size() != 2) throw invalid_input("edge record needs two ids: " + line);
    edges.emplace_back(text::parse_number<NodeId>(tok[0], "node id"),
                       text::parse_number<NodeId>(tok[1], "node id"));
  }
  return UndirectedGraph(n, std::move(edges));
}

}  // namespace aggnet
