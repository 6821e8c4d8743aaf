// Acceptance run: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "aggnet/aggnet.hpp"
#include "../oracles.hpp"

using namespace aggnet;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

constexpr std::uint64_t kBase = 20240917;

std::uint64_t seed_for(std::uint64_t criterion, std::uint64_t a, std::uint64_t b = 0) {
  return derive_seed(kBase, {criterion, a, b});
}

std::string fmt(double x, int prec = 3) {
  std::ostringstream ss;
  ss.precision(prec);
  ss << std::fixed << x;
  return ss.str();
}

std::vector<int> pow2_range(int lo, int hi) {
  std::vector<int> v;
  for (int e = lo; e <= hi; ++e) v.push_back(1 << e);
  return v;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

bool schedule_ok(const Schedule& s, const Deployment& dep, const CliqueSet& cliques = {}) {
  return validate_schedule(s, dep).ok() && verify_aggregate(s, cliques, dep.root).passed();
}

// mean pi_agg energy per n at fixed (d, nu, delta)
std::vector<std::pair<double, double>> agg_energy_curve(std::uint64_t crit, const std::vector<int>& ns, int d, double nu,
                                                        double delta, int seeds) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    std::vector<double> e;
    for (int t = 0; t < seeds; ++t) {
      auto dep = place_uniform(ns[i], d, seed_for(crit, i, t));
      auto plan = build_agg_plan(dep, compute_weights(dep.n, d, {nu}, delta), {nu});
      e.push_back(plan_energy(plan, dep, {nu}));
    }
    pts.emplace_back(ns[i], mean(e));
  }
  return pts;
}

Outcome c1_min_latency() {
  int bad = 0;
  std::string first;
  for (int n = 1; n <= 1024; ++n) {
    const int want = ceil_log2(n);
    const auto t1 = build_min_latency_tree(n);
    if (tree_latency(t1) != want) {
      ++bad;
      if (first.empty()) first = "min-latency tree n=" + std::to_string(n);
    }
    for (int d : {1, 2, 3}) {
      const auto dep = place_uniform(n, d, seed_for(1, n, d));
      const auto t2 = build_bisection_tree(dep);
      if (tree_latency(t2) != want || schedule_tree(t2).makespan() != want) {
        ++bad;
        if (first.empty()) first = "bisection tree n=" + std::to_string(n) + " d=" + std::to_string(d);
      }
    }
    if (n <= 9 && brute_force_min_latency(n) != want) {
      ++bad;
      if (first.empty()) first = "brute force n=" + std::to_string(n);
    }
  }
  if (bad) return {false, std::to_string(bad) + " mismatches, first: " + first};
  return {true, "n = 1..1024, both trees at ceil(log2 n); brute force agrees for n <= 9"};
}

Outcome c2_recursion_vs_simulation() {
  Rng rng(seed_for(2, 0));
  int bad = 0, small = 0;
  for (int i = 0; i < 1000; ++i) {
    const int n = 1 + static_cast<int>(rng.below(64));
    const auto t = oracle::random_tree(n, rng);
    const auto s = schedule_tree(t);
    std::vector<double> coords(n);
    for (int v = 0; v < n; ++v) coords[v] = v;
    const auto dep = Deployment::from_points(1, coords);
    if (s.makespan() != tree_latency(t) || !schedule_ok(s, dep)) ++bad;
    if (n <= 8) {
      ++small;
      if (oracle::tree_min_makespan(t) != tree_latency(t)) ++bad;
    }
  }
  return {bad == 0, "1000 random trees, " + std::to_string(small) + " with n <= 8 vs exhaustive; mismatches " +
                        std::to_string(bad)};
}

// Criteria 3 and 4 share one sweep.
struct SweepStats {
  long agg_instances = 0, agg_over_budget = 0, weight_over = 0, agg_with_repairs = 0;
  std::map<std::string, long> instances, invalid;
  std::string first_problem;
  bool done = false;
};

SweepStats& sweep() {
  static SweepStats st;
  if (st.done) return st;
  const auto ns = pow2_range(6, 12);
  const std::vector<double> nus{1.5, 2.0, 4.0};
  const std::vector<double> deltas{0, 2, 8, 32};
  const auto fn = parse_function("knng:3");
  auto record = [&](const std::string& policy, bool ok, const std::string& where) {
    ++st.instances[policy];
    if (!ok) {
      ++st.invalid[policy];
      if (st.first_problem.empty()) st.first_problem = policy + " " + where;
    }
  };
  for (std::size_t ni = 0; ni < ns.size(); ++ni)
    for (int d : {2, 3})
      for (int t = 0; t < 20; ++t) {
        const auto dep = place_uniform(ns[ni], d, seed_for(3, ni * 4 + d, t));
        const int K = ceil_log2(dep.n);
        const std::string at = "n=" + std::to_string(dep.n) + " d=" + std::to_string(d) + " trial=" + std::to_string(t);
        record("alg2", schedule_ok(schedule_tree(build_bisection_tree(dep)), dep), at);
        record("mst", schedule_ok(mst_policy(dep, {2.0}).schedule, dep), at);
        const auto spec = make_function(dep, fn);
        const int min_delta = max_degree(spec.graph) + 1;
        for (double nu : nus) {
          const EnergyParams p{nu};
          const auto raw = raw_forwarding_policy(dep, p);
          record("raw", schedule_ok(raw.schedule, dep), at);
          for (double delta : deltas) {
            const auto ws = compute_weights(dep.n, d, p, delta);
            ++st.agg_instances;
            if (ws.total() > delta) ++st.weight_over;
            const auto plan = build_agg_plan(dep, ws, p);
            const auto s = schedule_plan(plan);
            const int repairs = static_cast<int>(plan.repairs.size());
            if (repairs) ++st.agg_with_repairs;
            if (s.makespan() > K + delta + repairs) ++st.agg_over_budget;
            record("pi_agg", schedule_ok(s, dep), at);
            const auto clq = build_clq_policy(dep, spec, min_delta + delta, p);
            record("pi_clq", schedule_ok(clq.schedule, dep, spec.cliques), at);
          }
        }
      }
  st.done = true;
  return st;
}

Outcome c3_latency_budget() {
  const auto& st = sweep();
  const double clean = 100.0 * static_cast<double>(st.agg_instances - st.agg_with_repairs) /
                       static_cast<double>(st.agg_instances);
  return {st.agg_over_budget == 0 && st.weight_over == 0,
          std::to_string(st.agg_instances) + " pi_agg instances; over budget " + std::to_string(st.agg_over_budget) +
              ", weight sum over delta " + std::to_string(st.weight_over) + "; repair-free " + fmt(clean, 1) + "%"};
}

Outcome c4_validity() {
  const auto& st = sweep();
  long total = 0, bad = 0;
  std::string per;
  for (const auto& [p, c] : st.instances) {
    total += c;
    const long b = st.invalid.count(p) ? st.invalid.at(p) : 0;
    bad += b;
    per += " " + p + "=" + std::to_string(c);
  }
  std::string detail = std::to_string(total) + " schedules (" + per.substr(1) + "), failing " + std::to_string(bad);
  if (bad) detail += ", first: " + st.first_problem;
  return {bad == 0, detail};
}

Outcome slope_check(std::uint64_t crit, int d, double nu, double target, double tol) {
  const auto pts = agg_energy_curve(crit, pow2_range(8, 13), d, nu, 0.0, 20);
  const auto f = fit_scaling_exponent(pts);
  return {std::abs(f.slope - target) <= tol,
          "slope " + fmt(f.slope) + " (target " + fmt(target, 2) + " +- " + fmt(tol, 2) + "), r2 " + fmt(f.r2)};
}

Outcome c5_small_nu() { return slope_check(5, 3, 2.0, 1.0, 0.15); }
Outcome c6_large_nu() { return slope_check(6, 2, 4.0, 2.0, 0.2); }

Outcome c7_delta_dependence() {
  const int n = 4096, d = 2, seeds = 50;
  const double nu = 4.0;
  const std::vector<double> deltas{1, 2, 4, 8, 16};
  auto mean_energy = [&](double delta) {
    std::vector<double> e;
    for (int t = 0; t < seeds; ++t) {
      auto dep = place_uniform(n, d, seed_for(7, t));
      auto plan = build_agg_plan(dep, compute_weights(n, d, {nu}, delta), {nu});
      e.push_back(plan_energy(plan, dep, {nu}));
    }
    return mean(e);
  };
  // floor: the budget no longer binds
  const double floor = mean_energy(n);
  const double big = std::pow(static_cast<double>(n), (nu / d - 1.0) / (nu - 1.0));
  const double at_big = mean_energy(big);
  std::vector<std::pair<double, double>> pre;
  std::string curve;
  for (double delta : deltas) {
    const double e = mean_energy(delta);
    curve += " " + fmt(delta, 0) + ":" + fmt(e, 0);
    if (e > 2.0 * floor) pre.emplace_back(1.0 + delta, e);
  }
  std::string detail = "mean energy" + curve + "; floor " + fmt(floor, 0) + "; at delta=" + fmt(big, 1) + " " +
                       fmt(at_big / floor, 2) + "x floor";
  if (pre.size() < 3) return {false, detail + "; too few pre-floor points to fit"};
  const auto f = fit_scaling_exponent(pre);
  const bool slope_ok = std::abs(f.slope - (1.0 - nu)) <= 0.6;
  const bool flat_ok = at_big <= 2.0 * floor;
  return {slope_ok && flat_ok, "slope " + fmt(f.slope) + " over " + std::to_string(pre.size()) +
                                   " points (target -3.0 +- 0.6); " + detail};
}

Outcome c8_mst() {
  const auto ns = pow2_range(8, 13);
  std::string detail;
  bool ok = true;
  for (int d : {2, 3}) {
    std::vector<std::pair<double, double>> energy, latency;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      std::vector<double> e, l;
      for (int t = 0; t < 20; ++t) {
        auto dep = place_uniform(ns[i], d, seed_for(8, i * 4 + d, t));
        auto r = mst_policy(dep, {2.0});
        e.push_back(r.energy);
        l.push_back(r.latency);
      }
      energy.emplace_back(ns[i], mean(e));
      latency.emplace_back(ns[i], mean(l));
    }
    const double es = fit_scaling_exponent(energy).slope, ls = fit_scaling_exponent(latency).slope;
    const bool good = std::abs(es - 1.0) <= 0.15 && ls >= 0.8 / d;
    ok = ok && good;
    detail += (detail.empty() ? "" : "; ") + std::string("d=") + std::to_string(d) + " energy slope " + fmt(es) +
              ", latency slope " + fmt(ls) + " (>= " + fmt(0.8 / d) + ")";
  }
  return {ok, detail};
}

Outcome c9_raw() {
  const auto ns = pow2_range(8, 13);
  const int d = 2;
  std::vector<std::pair<double, double>> energy;
  long short_makespan = 0, instances = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    std::vector<double> e;
    for (int t = 0; t < 20; ++t) {
      auto dep = place_uniform(ns[i], d, seed_for(9, i, t));
      auto r = raw_forwarding_policy(dep, {2.0});
      e.push_back(r.energy);
      ++instances;
      if (r.latency < dep.n - 1) ++short_makespan;
    }
    energy.emplace_back(ns[i], mean(e));
  }
  const double s = fit_scaling_exponent(energy).slope;
  return {std::abs(s - 1.5) <= 0.15 && short_makespan == 0,
          "energy slope " + fmt(s) + " (target 1.5 +- 0.15); makespan < n-1 on " + std::to_string(short_makespan) +
              " of " + std::to_string(instances)};
}

Outcome c10_clique_policy() {
  const auto ns = pow2_range(8, 13);
  const int d = 2;
  const EnergyParams p{4.0};
  const auto fn = parse_function("knng:3");
  std::vector<double> ratios;
  long over = 0, instances = 0, invalid = 0;
  std::string curve;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    std::vector<double> clq, agg;
    for (int t = 0; t < 20; ++t) {
      auto dep = place_uniform(ns[i], d, seed_for(10, i, t));
      auto spec = make_function(dep, fn);
      const int dmax = max_degree(spec.graph);
      auto r = build_clq_policy(dep, spec, dmax + 1 + 8, p);
      ++instances;
      if (r.forward_slots > dmax + 1) ++over;
      if (!schedule_ok(r.schedule, dep, spec.cliques)) ++invalid;
      clq.push_back(schedule_energy(r.schedule, dep, p));
      agg.push_back(plan_energy(build_agg_plan(dep, compute_weights(dep.n, d, p, 8), p), dep, p));
    }
    ratios.push_back(mean(clq) / mean(agg));
    curve += " " + fmt(ratios.back());
  }
  const double band = *std::max_element(ratios.begin(), ratios.end()) / *std::min_element(ratios.begin(), ratios.end());
  return {band <= 2.0 && over == 0 && invalid == 0,
          "energy ratio per n" + curve + ", max/min " + fmt(band) + "; forwarding over max degree + 1 on " +
              std::to_string(over) + " of " + std::to_string(instances) + "; invalid " + std::to_string(invalid)};
}

Outcome c11_path_dp() {
  Rng rng(seed_for(11, 0));
  int bad = 0;
  for (int t = 0; t < 200; ++t) {
    const int n = 3 + static_cast<int>(rng.below(8));
    const int d = 1 + static_cast<int>(rng.below(3));
    auto dep = place_uniform(n, d, seed_for(11, 1, t));
    const double nu = 1.0 + 4.0 * rng.uniform();
    const NodeId u = static_cast<NodeId>(rng.below(n));
    NodeId v = static_cast<NodeId>(rng.below(n - 1));
    if (v >= u) ++v;
    std::vector<NodeId> cand;
    for (NodeId x = 0; x < n; ++x)
      if (rng.below(4) != 0) cand.push_back(x);
    const int budget = static_cast<int>(rng.below(5));
    const auto got = hop_bounded_path_exact(dep, cand, u, v, budget, {nu});
    const auto ref = oracle::exhaustive_path(dep, cand, u, v, budget, {nu});
    if (got != ref.path || std::abs(path_energy(got, dep, {nu}) - ref.energy) > 1e-9 * std::max(1.0, ref.energy))
      ++bad;
  }
  return {bad == 0, "200 instances (n <= 10, budget <= 4), mismatches " + std::to_string(bad)};
}

Outcome c12_coloring() {
  Rng rng(seed_for(12, 0));
  int graphs = 0, bad = 0;
  auto check = [&](const UndirectedGraph& g) {
    ++graphs;
    const auto c = proper_edge_coloring(g);
    if (!is_proper_coloring(g, c) || c.num_colors > max_degree(g) + 1) ++bad;
  };
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + static_cast<int>(rng.below(50));
    check(oracle::random_graph(n, rng.uniform(), rng));
  }
  for (int n : pow2_range(6, 12))
    for (int d : {2, 3}) {
      auto dep = place_uniform(n, d, seed_for(12, n, d));
      for (int k : {1, 3, 5}) check(build_knng(dep, k));
      for (double rho : {1.0, 1.5, 2.0}) check(build_rgg(dep, rho));
    }
  return {bad == 0, std::to_string(graphs) + " graphs, improper or over max degree + 1: " + std::to_string(bad)};
}

Outcome c13_nu_equals_d() {
  const auto pts = agg_energy_curve(13, pow2_range(8, 13), 2, 2.0, 0.0, 20);
  const auto f = fit_scaling_exponent(pts);
  return {f.slope <= 1.2, "slope " + fmt(f.slope) + " (advisory bound 1.2)"};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    bool advisory = false;
  };
  const std::vector<Criterion> all{
      {1, "minimum latency", c1_min_latency},
      {2, "latency recursion vs simulation", c2_recursion_vs_simulation},
      {3, "latency budget", c3_latency_budget},
      {4, "model validity", c4_validity},
      {5, "energy scaling nu < d", c5_small_nu},
      {6, "energy scaling nu > d", c6_large_nu},
      {7, "energy vs delta", c7_delta_dependence},
      {8, "mst baseline", c8_mst},
      {9, "raw forwarding baseline", c9_raw},
      {10, "clique policy", c10_clique_policy},
      {11, "hop-bounded path dp", c11_path_dp},
      {12, "edge coloring", c12_coloring},
      {13, "nu = d scaling", c13_nu_equals_d, true},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d %s%s: %s (%.1f s)\n", c.id, o.pass ? "PASS" : "FAIL", c.advisory ? " [advisory]" : "",
                (std::string(c.name) + " | " + o.detail).c_str(), secs);
    std::fflush(stdout);
    if (!o.pass && !c.advisory) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
