#pragma once

// Two-stage policy for clique-decomposable functions: members forward raw
// measurements to their clique processor in color-scheduled slots, then the
// clique values are aggregated to the root by the tradeoff policy.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "aggnet/errors.hpp"
#include "aggnet/geometry.hpp"
#include "aggnet/graphs.hpp"
#include "aggnet/schedule.hpp"
#include "aggnet/text.hpp"
#include "aggnet/tradeoff.hpp"

namespace aggnet {

enum class FunctionKind { sum, knng, rgg, complete };

struct FunctionSpec {
  FunctionKind kind = FunctionKind::sum;
  int k = 0;         // knng
  double rho = 0.0;  // rgg
  UndirectedGraph graph;
  CliqueSet cliques;
  std::vector<NodeId> processor;  // per clique
};

// "sum", "knng:<k>", "rgg:<rho>" or "complete"; the graph is built later.
struct FunctionKindSpec {
  FunctionKind kind = FunctionKind::sum;
  int k = 0;
  double rho = 0.0;
};

inline FunctionKindSpec parse_function(const std::string& s) {
  FunctionKindSpec f;
  auto colon = s.find(':');
  std::string head = s.substr(0, colon);
  std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
  if (head == "sum" || head == "complete") {
    if (!arg.empty()) throw invalid_parameter("function '" + head + "' takes no argument");
    f.kind = head == "sum" ? FunctionKind::sum : FunctionKind::complete;
  } else if (head == "knng") {
    f.kind = FunctionKind::knng;
    f.k = text::parse_number<int>(arg, "knng k");
    if (f.k < 1) throw invalid_parameter("knng k must be >= 1");
  } else if (head == "rgg") {
    f.kind = FunctionKind::rgg;
    f.rho = text::parse_number<double>(arg, "rgg radius");
    if (!(f.rho > 0.0)) throw invalid_parameter("rgg radius must be > 0");
  } else {
    throw invalid_parameter("unknown function '" + s + "' (expected sum, knng:k, rgg:rho or complete)");
  }
  return f;
}

inline std::string to_string(const FunctionKindSpec& f) {
  switch (f.kind) {
    case FunctionKind::sum: return "sum";
    case FunctionKind::knng: return "knng:" + std::to_string(f.k);
    case FunctionKind::rgg: return "rgg:" + text::format_double(f.rho);
    case FunctionKind::complete: return "complete";
  }
  return "?";
}

inline std::vector<NodeId> assign_processors(const CliqueSet& cliques) {
  std::vector<NodeId> p;
  p.reserve(cliques.size());
  for (std::size_t c = 0; c < cliques.size(); ++c) {
    const auto& members = cliques.cliques[c];
    if (members.empty()) throw invalid_input("clique " + std::to_string(c) + " is empty");
    p.push_back(*std::min_element(members.begin(), members.end()));
  }
  return p;
}

inline FunctionSpec make_function(const Deployment& dep, const FunctionKindSpec& f) {
  FunctionSpec spec;
  spec.kind = f.kind;
  spec.k = f.k;
  spec.rho = f.rho;
  switch (f.kind) {
    case FunctionKind::sum: spec.graph = UndirectedGraph(dep.n, {}); break;
    case FunctionKind::knng: spec.graph = build_knng(dep, f.k); break;
    case FunctionKind::rgg: spec.graph = build_rgg(dep, f.rho); break;
    case FunctionKind::complete: {
      std::vector<Edge> e;
      e.reserve(static_cast<std::size_t>(dep.n) * (dep.n - 1) / 2);
      for (NodeId u = 0; u < dep.n; ++u)
        for (NodeId v = u + 1; v < dep.n; ++v) e.emplace_back(u, v);
      spec.graph = UndirectedGraph(dep.n, std::move(e));
      break;
    }
  }
  spec.cliques = maximal_cliques(spec.graph);
  spec.processor = assign_processors(spec.cliques);
  return spec;
}

// Links j -> processor(c) for every non-processor member j of every clique.
// Since the processor is the smallest member, each link is stored as the
// undirected edge (processor, j) and sent from the larger id.
inline UndirectedGraph forwarding_links(const FunctionSpec& spec) {
  std::vector<Edge> e;
  for (std::size_t c = 0; c < spec.cliques.size(); ++c)
    for (NodeId j : spec.cliques.cliques[c])
      if (j != spec.processor[c]) e.emplace_back(std::min(j, spec.processor[c]), std::max(j, spec.processor[c]));
  return UndirectedGraph(spec.graph.n(), std::move(e));
}

// Slot t carries every forwarding link of color t. Senders keep their
// measurement since other cliques may need it.
inline Schedule build_forwarding_stage(const FunctionSpec& spec, const UndirectedGraph& links,
                                       const EdgeColoring& coloring) {
  if (!is_proper_coloring(links, coloring)) throw invalid_structure("forwarding coloring is not proper");
  Schedule s;
  s.n = spec.graph.n();
  s.mode = PayloadMode::clique;
  s.slots.resize(coloring.num_colors);
  const auto& e = links.edges();
  for (std::size_t i = 0; i < e.size(); ++i) {
    const NodeId p = e[i].first, j = e[i].second;
    s.slot(coloring.color[i]).push_back({j, p, {Token::measurement(j)}, true});
  }
  return s;
}

struct ClqResult {
  Schedule schedule;
  AggregationPlan plan;
  int forward_slots = 0;
  int max_degree = 0;
  double forward_energy = 0.0;
};

inline ClqResult build_clq_policy(const Deployment& dep, const FunctionSpec& spec, double delta,
                                  const EnergyParams& params, const PlanOptions& opts = {}) {
  params.check();
  if (spec.graph.n() != dep.n) throw invalid_parameter("build_clq_policy: function and deployment sizes differ");
  ClqResult out;
  out.max_degree = max_degree(spec.graph);
  // an edgeless dependency graph needs no forwarding stage
  const int min_delta = out.max_degree == 0 ? 0 : out.max_degree + 1;
  if (delta < min_delta)
    throw infeasible_budget("delta " + text::format_double(delta) + " is below the minimum feasible " +
                                std::to_string(min_delta) + " (max degree + 1)",
                            min_delta);

  const auto links = forwarding_links(spec);
  const auto coloring = proper_edge_coloring(links);
  Schedule s = build_forwarding_stage(spec, links, coloring);
  s.root = dep.root;
  out.forward_slots = s.makespan();
  s.slots.resize(out.forward_slots);
  for (const auto& slot : s.slots)
    for (const auto& t : slot) out.forward_energy += edge_energy(dep, t.tx, t.rx, params);

  for (std::size_t c = 0; c < spec.cliques.size(); ++c) {
    const auto& members = spec.cliques.cliques[c];
    s.computations.push_back(
        {members.size() == 1 ? 0 : out.forward_slots, spec.processor[c], static_cast<int>(c), members});
  }

  if (dep.n > 1) {
    const auto ws = compute_weights(dep.n, dep.d, params, delta - min_delta);
    out.plan = build_agg_plan(dep, ws, params, opts);
    detail::layout_plan(out.plan, s, out.forward_slots);
  }
  detail::derive_payloads(s, out.forward_slots + 1);
  out.schedule = std::move(s);
  return out;
}

}  // namespace aggnet
