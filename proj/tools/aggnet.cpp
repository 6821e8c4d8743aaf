#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "aggnet/aggnet.hpp"

namespace {

using namespace aggnet;

// Writes to the named file, or stdout when the name is empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw io_error("cannot write", path);
      path_ = path;
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void close() {
    if (file_) {
      file_->close();
      if (!*file_) throw io_error("write failed", path_);
    }
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::string path_;
};

template <class T>
T load_with(const std::string& path, T (*reader)(std::istream&)) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open", path);
  return reader(in);
}

UndirectedGraph build_graph(const Deployment& dep, const std::string& kind) {
  if (kind == "mst") return build_mst(dep);
  auto f = parse_function(kind);
  return make_function(dep, f).graph;
}

CliqueSet cliques_from_schedule(const Schedule& s) {
  CliqueSet cs;
  for (const auto& c : s.computations) {
    if (c.clique < 0) throw invalid_input("negative clique id in schedule");
    if (static_cast<int>(cs.cliques.size()) <= c.clique) cs.cliques.resize(c.clique + 1);
    auto m = c.members;
    std::sort(m.begin(), m.end());
    cs.cliques[c.clique] = std::move(m);
  }
  return cs;
}

struct ScheduleArgs {
  std::string deployment;
  std::string policy = "alg2";
  double delta = 0.0;
  double nu = 2.0;
  std::string function = "sum";
  std::string path_mode = "exact";
  double cost_cap = PlanOptions{}.exact_cost_cap;
  std::string tree_in;
  std::string tree_out;
  std::string plan_out;
  std::string output;
  bool no_payloads = false;
};

int cmd_schedule(const ScheduleArgs& a) {
  const Deployment dep = load_deployment(a.deployment);
  const EnergyParams params{a.nu};
  params.check();
  PlanOptions opts;
  opts.path_mode = parse_path_mode(a.path_mode);
  opts.exact_cost_cap = a.cost_cap;
  const Policy policy = parse_policy(a.policy);
  Schedule s;
  std::optional<AggregationTree> tree;
  std::optional<AggregationPlan> plan;
  CliqueSet cliques;
  int bound = 0;
  switch (policy) {
    case Policy::alg2:
      tree = a.tree_in.empty() ? build_bisection_tree(dep) : load_with<AggregationTree>(a.tree_in, read_tree);
      if (tree->n != dep.n) throw invalid_input("tree and deployment sizes differ");
      s = schedule_tree(*tree);
      bound = tree_latency(*tree);
      break;
    case Policy::pi_agg:
      if (dep.n < 2) throw invalid_parameter("pi_agg needs at least 2 nodes");
      plan = build_agg_plan(dep, compute_weights(dep.n, dep.d, params, a.delta), params, opts);
      s = schedule_plan(*plan);
      bound = plan->latency_bound();
      break;
    case Policy::pi_clq: {
      const auto spec = make_function(dep, parse_function(a.function));
      auto r = build_clq_policy(dep, spec, a.delta, params, opts);
      s = std::move(r.schedule);
      plan = std::move(r.plan);
      cliques = spec.cliques;
      bound = r.forward_slots + plan->latency_bound();
      break;
    }
    case Policy::mst: {
      tree = tree_from_graph(build_mst(dep), dep.root);
      s = schedule_tree(*tree);
      bound = tree_latency(*tree);
      break;
    }
    case Policy::raw: {
      auto r = raw_forwarding_policy(dep, params);
      s = std::move(r.schedule);
      bound = r.latency_bound;
      break;
    }
  }
  if (!a.tree_out.empty()) {
    if (!tree) throw invalid_parameter("--tree-out needs a tree policy (alg2 or mst)");
    Output o(a.tree_out);
    write_tree(o.stream(), *tree);
    o.close();
  }
  if (!a.plan_out.empty()) {
    if (!plan) throw invalid_parameter("--plan-out needs pi_agg or pi_clq");
    Output o(a.plan_out);
    write_plan(o.stream(), *plan);
    o.close();
  }
  Output o(a.output);
  write_schedule(o.stream(), s, !a.no_payloads);
  o.close();

  const auto v = validate_schedule(s, dep);
  const auto r = verify_aggregate(s, cliques, dep.root);
  std::cerr << "policy " << a.policy << " energy " << text::format_double(schedule_energy(s, dep, params))
            << " latency " << s.makespan() << " bound " << bound << " violations " << v.violations.size()
            << " verified " << (r.passed() ? "yes" : "no") << '\n';
  return v.ok() && r.passed() ? 0 : 1;
}

int cmd_validate(const std::string& path, const std::string& dep_path) {
  const Schedule s = load_with<Schedule>(path, read_schedule);
  Deployment dep;
  if (dep_path.empty()) {
    dep.n = s.n;
    dep.d = 1;
    dep.root = s.root;
    dep.coords.assign(s.n, 0.0);
  } else {
    dep = load_deployment(dep_path);
  }
  const auto v = validate_schedule(s, dep);
  const auto r = verify_aggregate(s, cliques_from_schedule(s), s.root);
  std::cout << "slots " << s.makespan() << "\ntransmissions " << s.transmission_count() << '\n';
  write_report(std::cout, v);
  write_report(std::cout, r);
  return v.ok() && r.passed() ? 0 : 1;
}

int cmd_graph(const std::string& dep_path, const std::string& kind, bool cliques, bool coloring,
              const std::string& output) {
  const Deployment dep = load_deployment(dep_path);
  const auto g = build_graph(dep, kind);
  Output o(output);
  if (cliques) {
    write_cliques(o.stream(), maximal_cliques(g));
  } else if (coloring) {
    const auto col = proper_edge_coloring(g);
    for (std::size_t i = 0; i < g.edges().size(); ++i)
      o.stream() << g.edges()[i].first << ' ' << g.edges()[i].second << ' ' << col.color[i] << '\n';
  } else {
    write_edge_list(o.stream(), g);
  }
  o.close();
  std::cerr << "nodes " << g.n() << " edges " << g.edges().size() << " max_degree " << max_degree(g) << '\n';
  return 0;
}

double column_value(const ResultRow& r, const std::string& col) {
  if (col == "n") return r.n;
  if (col == "delta") return r.delta;
  if (col == "delta_eff") return r.delta_eff;
  if (col == "1+delta") return 1.0 + r.delta;
  if (col == "energy") return r.energy;
  if (col == "latency_slots") return r.latency_slots;
  if (col == "nu") return r.nu;
  throw invalid_parameter("unsupported column '" + col + "' (n, delta, delta_eff, 1+delta, nu, energy, latency_slots)");
}

// Fits mean y against x within every group of rows that agree on all the
// other sweep coordinates.
int cmd_fit(const std::string& path, const std::string& xcol, const std::string& ycol, const std::string& policy) {
  const auto rows = read_results(path);
  // budgets are compared as written, so n^a sweeps form one curve over n
  using Key = std::tuple<std::string, std::string, int, int, double, std::string>;
  const bool x_is_delta = xcol == "delta" || xcol == "1+delta" || xcol == "delta_eff";
  std::map<Key, std::map<double, std::vector<double>>> groups;
  for (const auto& r : rows) {
    if (r.status != "ok" || (!policy.empty() && r.policy != policy)) continue;
    Key k{r.policy, r.function, xcol == "n" ? 0 : r.n, r.d, xcol == "nu" ? 0.0 : r.nu,
          x_is_delta ? std::string("*") : r.delta_spec};
    groups[k][column_value(r, xcol)].push_back(column_value(r, ycol));
  }
  std::cout << "policy,function,n,d,nu,delta_spec,x,y,points,slope,intercept,r2\n";
  int fitted = 0;
  for (const auto& [k, byx] : groups) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [x, ys] : byx) pts.emplace_back(x, bootstrap_mean(ys).mean);
    const auto& [pol, fn, n, d, nu, delta_spec] = k;
    std::cout << pol << ',' << fn << ',' << (xcol == "n" ? "*" : std::to_string(n)) << ',' << d << ','
              << (xcol == "nu" ? "*" : text::format_double(nu)) << ',' << detail::csv_field(delta_spec) << ',' << xcol
              << ',' << ycol << ',' << pts.size();
    try {
      const auto f = fit_scaling_exponent(pts);
      std::cout << ',' << text::format_double(f.slope) << ',' << text::format_double(f.intercept) << ','
                << text::format_double(f.r2) << '\n';
      ++fitted;
    } catch (const invalid_input&) {
      std::cout << ",,,\n";
    }
  }
  return fitted > 0 ? 0 : 1;
}

int cmd_viz_results(const std::string& path, const std::string& output) {
  const auto groups = summarize(read_results(path));
  Output o(output);
  auto& out = o.stream();
  out << "policy,function,n,d,nu,delta,delta_spec,metric,mean,ci_lo,ci_hi,count,failed\n";
  for (const auto& g : groups) {
    const auto& k = g.key;
    for (auto [name, ci] : {std::pair{"energy", g.energy}, std::pair{"latency_slots", g.latency}})
      out << k.policy << ',' << k.function << ',' << k.n << ',' << k.d << ',' << text::format_double(k.nu) << ','
          << text::format_double(k.delta) << ',' << detail::csv_field(k.delta_spec) << ',' << name << ',' << text::format_double(ci.mean) << ','
          << text::format_double(ci.lo) << ',' << text::format_double(ci.hi) << ',' << ci.count << ','
          << g.failed << '\n';
  }
  o.close();
  return 0;
}

// Node positions plus one segment per tree edge or scheduled transmission.
int cmd_viz_links(const std::string& dep_path, const std::string& tree_path, const std::string& sched_path,
                  const std::string& output) {
  const Deployment dep = load_deployment(dep_path);
  Output o(output);
  auto& out = o.stream();
  auto coords = [&](NodeId v) {
    std::string s;
    for (int j = 0; j < dep.d; ++j) s += ',' + text::format_double(dep.coord(v, j));
    for (int j = dep.d; j < 3; ++j) s += ",";
    return s;
  };
  out << "kind,slot,a,b,ax,ay,az,bx,by,bz\n";
  for (NodeId v = 0; v < dep.n; ++v) out << (v == dep.root ? "root" : "node") << ",," << v << ",," << coords(v).substr(1) << ",,,\n";
  if (!tree_path.empty()) {
    const auto t = load_with<AggregationTree>(tree_path, read_tree);
    for (NodeId v = 0; v < t.n; ++v)
      if (v != t.root) out << "edge," << t.level[v] << ',' << v << ',' << t.parent[v] << coords(v) << coords(t.parent[v]) << '\n';
  }
  if (!sched_path.empty()) {
    const auto s = load_with<Schedule>(sched_path, read_schedule);
    for (int si = 1; si <= static_cast<int>(s.slots.size()); ++si)
      for (const auto& t : s.slots[si - 1]) out << "tx," << si << ',' << t.tx << ',' << t.rx << coords(t.tx) << coords(t.rx) << '\n';
  }
  o.close();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latency-constrained in-network aggregation simulator"};
  app.require_subcommand(1);
  int rc = 0;

  auto* place = app.add_subcommand("place", "Place n nodes uniformly in [0, n^(1/d)]^d");
  int place_n = 16, place_d = 2;
  std::uint64_t place_seed = 1;
  std::string place_out;
  place->add_option("-n,--n", place_n, "Node count")->required()->check(CLI::PositiveNumber);
  place->add_option("-d,--dim", place_d, "Dimension")->check(CLI::PositiveNumber);
  place->add_option("-s,--seed", place_seed, "Placement seed");
  place->add_option("-o,--output", place_out, "Output file (default stdout)");
  place->callback([&] {
    Output o(place_out);
    write_deployment(o.stream(), place_uniform(place_n, place_d, place_seed));
    o.close();
  });

  auto* run = app.add_subcommand("run", "Run an experiment sweep from a JSON config");
  std::string run_config, run_output;
  int run_workers = -1;
  bool run_quiet = false;
  run->add_option("config", run_config, "Config file")->required();
  run->add_option("-o,--output", run_output, "Override the output path");
  run->add_option("-w,--workers", run_workers, "Override the worker count");
  run->add_flag("-q,--quiet", run_quiet, "No progress on stderr");
  run->callback([&] {
    auto c = load_config(run_config);
    if (!run_output.empty()) c.output = run_output;
    if (run_workers >= 0) c.workers = run_workers;
    const auto total = expand_config(c).size();
    const auto rows = run_experiment(c, [&](std::size_t done) {
      if (!run_quiet && (done == total || done % 50 == 0)) std::cerr << "\r" << done << "/" << total << std::flush;
    });
    if (!run_quiet) std::cerr << '\n';
    if (c.output.empty()) write_results(std::cout, rows, c.format);
    std::size_t bad = 0, infeasible = 0;
    for (const auto& r : rows) {
      if (r.status == "error") ++bad;
      if (r.status == "infeasible") ++infeasible;
    }
    std::cerr << "rows " << rows.size() << " errors " << bad << " infeasible " << infeasible << '\n';
    if (bad) rc = 1;
  });

  auto* validate = app.add_subcommand("validate", "Check a schedule file against the communication model");
  std::string val_path, val_dep;
  validate->add_option("schedule", val_path, "Schedule file")->required();
  validate->add_option("--deployment", val_dep, "Deployment the schedule refers to");
  validate->callback([&] { rc = cmd_validate(val_path, val_dep); });

  auto* graph = app.add_subcommand("graph", "Build a dependency graph or the MST over a deployment");
  std::string g_dep, g_kind = "mst", g_out;
  bool g_cliques = false, g_coloring = false;
  graph->add_option("deployment", g_dep, "Deployment file")->required();
  graph->add_option("-k,--kind", g_kind, "knng:k, rgg:r, complete or mst");
  graph->add_flag("--cliques", g_cliques, "Print maximal cliques instead of edges");
  graph->add_flag("--coloring", g_coloring, "Print edges with a proper edge coloring");
  graph->add_option("-o,--output", g_out, "Output file (default stdout)");
  graph->callback([&] { rc = cmd_graph(g_dep, g_kind, g_cliques, g_coloring, g_out); });

  auto* sched = app.add_subcommand("schedule", "Build and schedule one policy on a deployment");
  ScheduleArgs sa;
  sched->add_option("deployment", sa.deployment, "Deployment file")->required();
  sched->add_option("-p,--policy", sa.policy, "alg2, pi_agg, pi_clq, mst or raw");
  sched->add_option("--delta", sa.delta, "Additional latency budget")->check(CLI::NonNegativeNumber);
  sched->add_option("--nu", sa.nu, "Path-loss exponent");
  sched->add_option("-f,--function", sa.function, "sum, knng:k, rgg:rho or complete (pi_clq)");
  sched->add_option("--path-mode", sa.path_mode, "exact or heuristic");
  sched->add_option("--exact-cost-cap", sa.cost_cap, "Exact path searches above this cost use the heuristic");
  sched->add_option("--tree", sa.tree_in, "Schedule this tree instead of building one (alg2)");
  sched->add_option("--tree-out", sa.tree_out, "Write the tree");
  sched->add_option("--plan-out", sa.plan_out, "Write the aggregation plan");
  sched->add_option("-o,--output", sa.output, "Schedule output (default stdout)");
  sched->add_flag("--no-payloads", sa.no_payloads, "Omit token payloads");
  sched->callback([&] { rc = cmd_schedule(sa); });

  auto* fit = app.add_subcommand("fit", "Fit log-log slopes over a results table");
  std::string fit_path, fit_x = "n", fit_y = "energy", fit_policy;
  fit->add_option("results", fit_path, "Results file (.csv or .json)")->required();
  fit->add_option("--x", fit_x, "n, delta, delta_eff, 1+delta or nu");
  fit->add_option("--y", fit_y, "energy or latency_slots");
  fit->add_option("--policy", fit_policy, "Only this policy");
  fit->callback([&] { rc = cmd_fit(fit_path, fit_x, fit_y, fit_policy); });

  auto* viz = app.add_subcommand("viz-data", "Emit plot-ready tables");
  std::string viz_results, viz_dep, viz_tree, viz_sched, viz_out;
  viz->add_option("results", viz_results, "Results file: per-point means with bootstrap intervals");
  viz->add_option("--deployment", viz_dep, "Emit node positions and link segments");
  viz->add_option("--tree", viz_tree, "Tree file for link segments");
  viz->add_option("--schedule", viz_sched, "Schedule file for link segments");
  viz->add_option("-o,--output", viz_out, "Output file (default stdout)");
  viz->callback([&] {
    if (!viz_results.empty()) rc = cmd_viz_results(viz_results, viz_out);
    else if (!viz_dep.empty()) rc = cmd_viz_links(viz_dep, viz_tree, viz_sched, viz_out);
    else throw CLI::ValidationError("viz-data", "give a results file or --deployment");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const aggnet::error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return rc;
}
