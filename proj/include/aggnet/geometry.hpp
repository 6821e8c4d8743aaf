#pragma once

// Node placement, regions, link energies and the node-balanced bisection
// used by the location-aware tree constructions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "aggnet/errors.hpp"
#include "aggnet/random.hpp"
#include "aggnet/text.hpp"

namespace aggnet {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

struct EnergyParams {
  double nu = 2.0;  // path-loss exponent, >= 1

  void check() const {
    if (!(nu >= 1.0)) throw invalid_parameter("path-loss exponent must be >= 1");
  }
};

// n points in [0, side]^d, stored row-major. side is n^(1/d) for sampled
// instances; hand-built instances may pass their own.
struct Deployment {
  int n = 0;
  int d = 0;
  std::uint64_t seed = 0;
  NodeId root = 0;
  double side = 0.0;
  std::vector<double> coords;

  std::span<const double> position(NodeId i) const {
    return {coords.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)};
  }
  double coord(NodeId i, int axis) const { return coords[static_cast<std::size_t>(i) * d + axis]; }

  // Builds an instance from explicit coordinates (row-major, n*d values).
  static Deployment from_points(int d, std::vector<double> coords, NodeId root = 0,
                                std::uint64_t seed = 0, double side = -1.0) {
    if (d < 1) throw invalid_parameter("dimension must be >= 1");
    if (coords.size() % static_cast<std::size_t>(d) != 0)
      throw invalid_parameter("coordinate count is not a multiple of d");
    Deployment dep;
    dep.d = d;
    dep.n = static_cast<int>(coords.size() / d);
    if (dep.n < 1) throw invalid_parameter("deployment needs at least one node");
    if (root < 0 || root >= dep.n) throw invalid_parameter("root out of range");
    dep.root = root;
    dep.seed = seed;
    dep.coords = std::move(coords);
    if (side < 0) {
      side = std::pow(static_cast<double>(dep.n), 1.0 / d);
      for (double c : dep.coords) side = std::max(side, c);
    }
    dep.side = side;
    return dep;
  }
};

inline double dist2(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    double t = p[j] - q[j];
    s += t * t;
  }
  return s;
}

inline double dist2(const Deployment& dep, NodeId a, NodeId b) {
  return dist2(dep.position(a), dep.position(b));
}

inline double distance(const Deployment& dep, NodeId a, NodeId b) {
  return std::sqrt(dist2(dep, a, b));
}

// Pairwise (cascade) summation; error grows like O(log m) instead of O(m).
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  std::size_t h = v.size() / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

inline double energy_from_dist2(double d2, const EnergyParams& params) {
  if (params.nu == 2.0) return d2;
  if (params.nu == 1.0) return std::sqrt(d2);
  if (params.nu == 4.0) return d2 * d2;
  return std::pow(std::sqrt(d2), params.nu);
}

// ||p - q||^nu
inline double edge_energy(std::span<const double> p, std::span<const double> q,
                          const EnergyParams& params) {
  if (p.size() != q.size()) throw invalid_parameter("edge_energy: dimension mismatch");
  params.check();
  return energy_from_dist2(dist2(p, q), params);
}

inline double edge_energy(const Deployment& dep, NodeId a, NodeId b, const EnergyParams& params) {
  return energy_from_dist2(dist2(dep, a, b), params);
}

inline double path_energy(std::span<const NodeId> path, const Deployment& dep,
                          const EnergyParams& params) {
  if (path.size() < 2) throw invalid_path("path needs at least two nodes");
  params.check();
  std::vector<double> hops;
  hops.reserve(path.size() - 1);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (path[i] == path[i + 1]) throw invalid_path("path repeats a node on consecutive hops");
    if (path[i] < 0 || path[i] >= dep.n || path[i + 1] < 0 || path[i + 1] >= dep.n)
      throw invalid_path("path references an unknown node");
    hops.push_back(edge_energy(dep, path[i], path[i + 1], params));
  }
  return pairwise_sum(hops);
}

inline Deployment place_uniform(int n, int d, std::uint64_t seed) {
  if (n < 1) throw invalid_parameter("place_uniform: n must be >= 1");
  if (d < 1) throw invalid_parameter("place_uniform: d must be >= 1");
  Deployment dep;
  dep.n = n;
  dep.d = d;
  dep.seed = seed;
  dep.root = 0;
  dep.side = std::pow(static_cast<double>(n), 1.0 / d);
  dep.coords.resize(static_cast<std::size_t>(n) * d);
  Rng rng(seed);
  for (double& c : dep.coords) c = rng.uniform() * dep.side;
  return dep;
}

struct Region {
  std::vector<double> lo;
  std::vector<double> hi;

  int dim() const { return static_cast<int>(lo.size()); }
  double extent(int axis) const { return hi[axis] - lo[axis]; }
  bool contains(std::span<const double> p, double tol = 0.0) const {
    for (int j = 0; j < dim(); ++j)
      if (p[j] < lo[j] - tol || p[j] > hi[j] + tol) return false;
    return true;
  }
  double aspect_ratio() const {
    double mx = 0.0, mn = std::numeric_limits<double>::infinity();
    for (int j = 0; j < dim(); ++j) {
      mx = std::max(mx, extent(j));
      mn = std::min(mn, extent(j));
    }
    return mn > 0 ? mx / mn : std::numeric_limits<double>::infinity();
  }
};

// [0, side]^d, widened if a hand-built instance strays outside it.
inline Region bounding_region(const Deployment& dep) {
  Region r{std::vector<double>(dep.d, 0.0), std::vector<double>(dep.d, dep.side)};
  for (NodeId i = 0; i < dep.n; ++i)
    for (int j = 0; j < dep.d; ++j) {
      r.lo[j] = std::min(r.lo[j], dep.coord(i, j));
      r.hi[j] = std::max(r.hi[j], dep.coord(i, j));
    }
  return r;
}

struct Bisection {
  Region near;  // half holding the reference node
  Region far;
  std::vector<NodeId> near_members;
  std::vector<NodeId> far_members;
  int axis = 0;
  double threshold = 0.0;
};

// Splits `region` along its longest axis so that each side holds half of
// `members`. The cut sits midway between two adjacent order statistics.
// The near side gets floor(m/2) members whenever the reference node can sit
// in such a side, ceil(m/2) otherwise.
inline Bisection region_bisect(const Region& region, std::span<const NodeId> members, NodeId ref,
                               const Deployment& dep) {
  const std::size_t m = members.size();
  if (m < 2) throw invalid_parameter("region_bisect: needs at least two members");
  if (region.dim() != dep.d) throw invalid_parameter("region_bisect: region dimension mismatch");
  if (std::find(members.begin(), members.end(), ref) == members.end())
    throw invalid_parameter("region_bisect: reference node is not a member");
  for (NodeId v : members)
    if (!region.contains(dep.position(v), 1e-9 * std::max(1.0, dep.side)))
      throw invalid_parameter("region_bisect: member lies outside the region");

  std::vector<int> axes(dep.d);
  std::iota(axes.begin(), axes.end(), 0);
  std::stable_sort(axes.begin(), axes.end(),
                   [&](int a, int b) { return region.extent(a) > region.extent(b); });
  int axis = axes.front();
  for (int a : axes) {
    double c0 = dep.coord(members[0], a);
    bool spread = std::any_of(members.begin(), members.end(),
                              [&](NodeId v) { return dep.coord(v, a) != c0; });
    if (spread) {
      axis = a;
      break;
    }
  }

  std::vector<NodeId> order(members.begin(), members.end());
  std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    double ca = dep.coord(a, axis), cb = dep.coord(b, axis);
    return ca != cb ? ca < cb : a < b;
  });
  const std::size_t rank =
      static_cast<std::size_t>(std::find(order.begin(), order.end(), ref) - order.begin());
  const std::size_t half = m / 2;

  std::size_t cut;  // near side is order[0, cut) when low, order[cut, m) when high
  bool near_low;
  if (rank < half) {
    cut = half;
    near_low = true;
  } else if (rank >= m - half) {
    cut = m - half;
    near_low = false;
  } else {
    cut = half + 1;  // odd m, ref is the median
    near_low = true;
  }

  Bisection out;
  out.axis = axis;
  out.threshold = 0.5 * (dep.coord(order[cut - 1], axis) + dep.coord(order[cut], axis));
  Region low = region, high = region;
  low.hi[axis] = out.threshold;
  high.lo[axis] = out.threshold;
  std::vector<NodeId> low_members(order.begin(), order.begin() + cut);
  std::vector<NodeId> high_members(order.begin() + cut, order.end());
  if (near_low) {
    out.near = std::move(low);
    out.far = std::move(high);
    out.near_members = std::move(low_members);
    out.far_members = std::move(high_members);
  } else {
    out.near = std::move(high);
    out.far = std::move(low);
    out.near_members = std::move(high_members);
    out.far_members = std::move(low_members);
  }
  return out;
}

// Closest node to `from` among `pool`, excluding `from` itself; ties go to
// the smaller id. kNoNode if the pool is empty.
template <class Pred>
NodeId nearest_in(const Deployment& dep, NodeId from, std::span<const NodeId> pool, Pred keep) {
  NodeId best = kNoNode;
  double bd = std::numeric_limits<double>::infinity();
  for (NodeId v : pool) {
    if (v == from || !keep(v)) continue;
    double d2 = dist2(dep, from, v);
    if (d2 < bd || (d2 == bd && v < best)) {
      bd = d2;
      best = v;
    }
  }
  return best;
}

inline NodeId nearest_in(const Deployment& dep, NodeId from, std::span<const NodeId> pool) {
  return nearest_in(dep, from, pool, [](NodeId) { return true; });
}

// Text format:
//   # aggnet deployment v1
//   n <count>
//   d <dimension>
//   seed <seed>
//   root <id>
//   side <box side>
//   <id> <x_1> ... <x_d>      (one line per node, ids 0..n-1 in order)
inline void write_deployment(std::ostream& out, const Deployment& dep) {
  out << "# aggnet deployment v1\n";
  out << "n " << dep.n << "\nd " << dep.d << "\nseed " << dep.seed << "\nroot " << dep.root
      << "\nside " << text::format_double(dep.side) << "\n";
  for (NodeId i = 0; i < dep.n; ++i) {
    out << i;
    for (int j = 0; j < dep.d; ++j) out << ' ' << text::format_double(dep.coord(i, j));
    out << '\n';
  }
}

inline Deployment read_deployment(std::istream& in) {
  Deployment dep;
  dep.n = -1;
  dep.d = -1;
  dep.side = -1.0;
  std::string line;
  NodeId next = 0;
  while (text::next_record(in, line)) {
    auto tok = text::split_ws(line);
    if (tok[0] == "n" || tok[0] == "d" || tok[0] == "seed" || tok[0] == "root" ||
        tok[0] == "side") {
      if (tok.size() != 2) throw invalid_input("deployment header needs one value: " + line);
      if (tok[0] == "n") dep.n = text::parse_number<int>(tok[1], "n");
      if (tok[0] == "d") dep.d = text::parse_number<int>(tok[1], "d");
      if (tok[0] == "seed") dep.seed = text::parse_number<std::uint64_t>(tok[1], "seed");
      if (tok[0] == "root") dep.root = text::parse_number<NodeId>(tok[1], "root");
      if (tok[0] == "side") dep.side = text::parse_number<double>(tok[1], "side");
      continue;
    }
    if (dep.n < 1 || dep.d < 1) throw invalid_input("deployment header must precede nodes");
    if (dep.coords.empty()) dep.coords.reserve(static_cast<std::size_t>(dep.n) * dep.d);
    if (static_cast<int>(tok.size()) != dep.d + 1)
      throw invalid_input("node record has wrong arity: " + line);
    if (text::parse_number<NodeId>(tok[0], "node id") != next)
      throw invalid_input("node ids must be 0..n-1 in order");
    for (int j = 0; j < dep.d; ++j) dep.coords.push_back(text::parse_number<double>(tok[1 + j], "coordinate"));
    ++next;
  }
  if (dep.n < 1 || next != dep.n) throw invalid_input("deployment node count mismatch");
  if (dep.root < 0 || dep.root >= dep.n) throw invalid_input("deployment root out of range");
  if (dep.side < 0) dep.side = std::pow(static_cast<double>(dep.n), 1.0 / dep.d);
  return dep;
}

inline void save_deployment(const std::string& path, const Deployment& dep) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open for writing", path);
  write_deployment(out, dep);
  if (!out) throw io_error("write failed", path);
}

inline Deployment load_deployment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open for reading", path);
  return read_deployment(in);
}

}  // namespace aggnet
