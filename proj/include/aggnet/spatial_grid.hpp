#pragma once

// Uniform bucket grid over a deployment for neighbor queries.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "aggnet/geometry.hpp"

namespace aggnet {

class SpatialGrid {
 public:
  // cell_side <= 0 picks the expected nearest-neighbor spacing for the
  // instance density.
  explicit SpatialGrid(const Deployment& dep, double cell_side = 0.0) : dep_(dep) {
    lo_.assign(dep.d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(dep.d, -std::numeric_limits<double>::infinity());
    for (NodeId i = 0; i < dep.n; ++i)
      for (int j = 0; j < dep.d; ++j) {
        lo_[j] = std::min(lo_[j], dep.coord(i, j));
        hi[j] = std::max(hi[j], dep.coord(i, j));
      }
    double span_max = 0.0;
    for (int j = 0; j < dep.d; ++j) span_max = std::max(span_max, hi[j] - lo_[j]);
    if (cell_side <= 0.0) {
      double vol = 1.0;
      for (int j = 0; j < dep.d; ++j) vol *= std::max(hi[j] - lo_[j], 1e-12);
      cell_side = std::pow(vol / dep.n, 1.0 / dep.d);
    }
    if (!(cell_side > 0.0) || !std::isfinite(cell_side)) cell_side = std::max(span_max, 1.0);
    // keep the cell count within a small multiple of n
    const double max_cells = 4.0 * dep.n + 16.0;
    for (;;) {
      double cells = 1.0;
      for (int j = 0; j < dep.d; ++j) cells *= std::floor((hi[j] - lo_[j]) / cell_side) + 1.0;
      if (cells <= max_cells) break;
      cell_side *= 1.5;
    }
    cell_ = cell_side;
    dims_.resize(dep.d);
    stride_.resize(dep.d);
    std::size_t total = 1;
    for (int j = 0; j < dep.d; ++j) {
      dims_[j] = static_cast<int>(std::floor((hi[j] - lo_[j]) / cell_)) + 1;
      stride_[j] = total;
      total *= static_cast<std::size_t>(dims_[j]);
    }
    start_.assign(total + 1, 0);
    cell_of_.resize(dep.n);
    for (NodeId i = 0; i < dep.n; ++i) {
      cell_of_[i] = flat(cell_coords(i));
      ++start_[cell_of_[i] + 1];
    }
    for (std::size_t c = 0; c < total; ++c) start_[c + 1] += start_[c];
    items_.resize(dep.n);
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (NodeId i = 0; i < dep.n; ++i) items_[fill[cell_of_[i]]++] = i;
  }

  double cell_side() const { return cell_; }

  // The k nearest other nodes of i, ascending by (distance, id).
  std::vector<NodeId> k_nearest(NodeId i, int k) const {
    std::vector<std::pair<double, NodeId>> found;
    if (k <= 0) return {};
    const auto center = cell_coords(i);
    int max_ring = 0;
    for (int j = 0; j < dep_.d; ++j)
      max_ring = std::max(max_ring, std::max(center[j], dims_[j] - 1 - center[j]));
    for (int r = 0; r <= max_ring; ++r) {
      visit_ring(center, r, [&](std::size_t c) {
        for (std::size_t t = start_[c]; t < start_[c + 1]; ++t) {
          NodeId v = items_[t];
          if (v != i) found.emplace_back(dist2(dep_, i, v), v);
        }
      });
      if (static_cast<int>(found.size()) >= k) {
        std::nth_element(found.begin(), found.begin() + (k - 1), found.end());
        double kth = found[k - 1].first;
        double reach = r * cell_;
        if (kth < reach * reach) break;
      }
    }
    std::sort(found.begin(), found.end());
    if (static_cast<int>(found.size()) > k) found.resize(k);
    std::vector<NodeId> out;
    out.reserve(found.size());
    for (auto& p : found) out.push_back(p.second);
    return out;
  }

  // Calls f(v) for every node v != i with ||V_i - V_v|| <= radius.
  template <class F>
  void for_each_within(NodeId i, double radius, F&& f) const {
    const auto center = cell_coords(i);
    const int reach = static_cast<int>(std::ceil(radius / cell_));
    const double r2 = radius * radius;
    visit_box(center, reach, [&](std::size_t cell) {
      for (std::size_t t = start_[cell]; t < start_[cell + 1]; ++t) {
        NodeId v = items_[t];
        if (v != i && dist2(dep_, i, v) <= r2) f(v);
      }
    });
  }

 private:
  std::vector<int> cell_coords(NodeId i) const {
    std::vector<int> c(dep_.d);
    for (int j = 0; j < dep_.d; ++j) {
      int x = static_cast<int>(std::floor((dep_.coord(i, j) - lo_[j]) / cell_));
      c[j] = std::clamp(x, 0, dims_[j] - 1);
    }
    return c;
  }

  std::size_t flat(const std::vector<int>& c) const {
    std::size_t f = 0;
    for (int j = 0; j < dep_.d; ++j) f += static_cast<std::size_t>(c[j]) * stride_[j];
    return f;
  }

  // Cells in the cube of half-width r around center, clipped to the grid.
  template <class F>
  void visit_box(const std::vector<int>& center, int r, F&& f) const {
    std::vector<int> lo(dep_.d), hi(dep_.d), c(dep_.d);
    for (int j = 0; j < dep_.d; ++j) {
      lo[j] = std::max(0, center[j] - r);
      hi[j] = std::min(dims_[j] - 1, center[j] + r);
    }
    c = lo;
    for (;;) {
      f(flat(c));
      int j = 0;
      while (j < dep_.d && ++c[j] > hi[j]) {
        c[j] = lo[j];
        ++j;
      }
      if (j == dep_.d) break;
    }
  }

  // Cells at Chebyshev distance exactly r from center.
  template <class F>
  void visit_ring(const std::vector<int>& center, int r, F&& f) const {
    std::vector<int> lo(dep_.d), hi(dep_.d), c(dep_.d);
    for (int j = 0; j < dep_.d; ++j) {
      lo[j] = std::max(0, center[j] - r);
      hi[j] = std::min(dims_[j] - 1, center[j] + r);
    }
    c = lo;
    for (;;) {
      int cheb = 0;
      for (int j = 0; j < dep_.d; ++j) cheb = std::max(cheb, std::abs(c[j] - center[j]));
      if (cheb == r) f(flat(c));
      int j = 0;
      while (j < dep_.d && ++c[j] > hi[j]) {
        c[j] = lo[j];
        ++j;
      }
      if (j == dep_.d) break;
    }
  }

  const Deployment& dep_;
  double cell_ = 1.0;
  std::vector<double> lo_;
  std::vector<int> dims_;
  std::vector<std::size_t> stride_;
  std::vector<std::size_t> start_;
  std::vector<std::size_t> cell_of_;
  std::vector<NodeId> items_;
};

}  // namespace aggnet
