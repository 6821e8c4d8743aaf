#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "aggnet/aggnet.hpp"

using namespace aggnet;
namespace fs = std::filesystem;

namespace {

nlohmann::json base_config() {
  return nlohmann::json::parse(R"({"n_list": [16, 32], "nu_list": [2], "policies": ["alg2"], "trials": 3})");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("aggnet_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

ResultRow sample_row() {
  ResultRow r;
  r.policy = "pi_clq";
  r.function = "rgg:1.5";
  r.n = 64;
  r.d = 3;
  r.nu = 1.5;
  r.delta = 8;
  r.delta_spec = "n^(1/2)";
  r.delta_eff = 12;
  r.seed = 18446744073709551615ull;
  r.trial = 4;
  r.energy = 1234.5678901234567;
  r.latency_slots = 17;
  r.latency_bound = 18;
  r.violations = 0;
  r.verified = true;
  r.repairs = 1;
  r.forward_slots = 4;
  r.max_degree = 3;
  r.status = "ok";
  r.note = "has, a comma and \"quotes\"";
  return r;
}

}  // namespace

TEST(Config, Defaults) {
  auto c = parse_config(base_config());
  EXPECT_EQ(c.n_list, (std::vector<int>{16, 32}));
  EXPECT_EQ(c.d, 2);
  EXPECT_EQ(c.trials, 3);
  EXPECT_EQ(c.delta_list.size(), 1u);
  EXPECT_DOUBLE_EQ(c.delta_list[0].resolve(100), 0.0);
  EXPECT_EQ(c.format, "csv");
  EXPECT_EQ(c.function.kind, FunctionKind::sum);
}

TEST(Config, FullSchema) {
  auto j = base_config();
  j["d"] = 3;
  j["delta"] = nlohmann::json::array({0, "n^(1/3)", "n^0.5", 8});
  j["function"] = "knng:3";
  j["path_mode"] = "heuristic";
  j["clq_delta"] = "relative";
  j["format"] = "json";
  j["workers"] = 2;
  j["policies"] = nlohmann::json::array({"alg2", "pi_agg", "pi_clq", "mst", "raw"});
  auto c = parse_config(j);
  EXPECT_EQ(c.d, 3);
  ASSERT_EQ(c.delta_list.size(), 4u);
  EXPECT_TRUE(c.delta_list[1].scales);
  EXPECT_DOUBLE_EQ(c.delta_list[2].resolve(64), 8.0);
  EXPECT_DOUBLE_EQ(c.delta_list[3].resolve(64), 8.0);
  EXPECT_EQ(c.function.k, 3);
  EXPECT_EQ(c.plan.path_mode, PathMode::heuristic);
  EXPECT_EQ(c.clq_delta, ClqDelta::relative);
  EXPECT_EQ(c.policies.size(), 5u);
}

TEST(Config, Errors) {
  auto bad = [](auto mutate) {
    auto j = base_config();
    mutate(j);
    return j;
  };
  EXPECT_THROW(parse_config(bad([](auto& j) { j["colour"] = 1; })), invalid_input);
  EXPECT_THROW(parse_config(bad([](auto& j) { j.erase("n_list"); })), invalid_input);
  EXPECT_THROW(parse_config(bad([](auto& j) { j["n_list"] = "16"; })), invalid_input);
  EXPECT_THROW(parse_config(bad([](auto& j) { j["nu_list"] = nlohmann::json::array({0.5}); })), invalid_parameter);
  EXPECT_THROW(parse_config(bad([](auto& j) { j["policies"] = nlohmann::json::array({"greedy"}); })),
               invalid_parameter);
  EXPECT_THROW(parse_config(bad([](auto& j) { j["trials"] = 0; })), invalid_parameter);
  EXPECT_THROW(parse_config(bad([](auto& j) { j["format"] = "xml"; })), invalid_parameter);
  EXPECT_THROW(parse_config(bad([](auto& j) { j["delta"] = -1; })), invalid_parameter);
  EXPECT_THROW(parse_config(bad([](auto& j) { j["clq_delta"] = "both"; })), invalid_input);
  EXPECT_THROW(parse_config(nlohmann::json::array()), invalid_input);
}

TEST(Config, DeltaForms) {
  EXPECT_DOUBLE_EQ(parse_delta("8").resolve(1000), 8.0);
  EXPECT_NEAR(parse_delta("n^(1/3)").resolve(4096), 16.0, 1e-9);
  EXPECT_NEAR(parse_delta("n^0.25").resolve(4096), 8.0, 1e-9);
  EXPECT_THROW(parse_delta("n^"), invalid_input);
  EXPECT_THROW(parse_delta("n^(1/0)"), invalid_parameter);
  EXPECT_THROW(parse_delta("lots"), invalid_input);
}

TEST(Config, LoadWithCommentsAndEnvironment) {
  const auto path = scratch("cfg.json");
  {
    std::ofstream out(path);
    out << "// sweep\n{\"n_list\": [8], \"nu_list\": [2], \"policies\": [\"mst\"], \"output\": \"x/y/res.csv\"}\n";
  }
  ::setenv("AGGNET_OUTPUT_DIR", "/tmp/elsewhere", 1);
  ::setenv("AGGNET_WORKERS", "3", 1);
  auto c = load_config(path.string());
  ::unsetenv("AGGNET_OUTPUT_DIR");
  ::unsetenv("AGGNET_WORKERS");
  EXPECT_EQ(c.output, "/tmp/elsewhere/res.csv");
  EXPECT_EQ(c.workers, 3);
  auto plain = load_config(path.string());
  EXPECT_EQ(plain.output, "x/y/res.csv");
  EXPECT_THROW(load_config("/nonexistent/cfg.json"), io_error);
}

TEST(Trial, BisectionTreeLatencyIsLogN) {
  TrialPoint pt;
  pt.policy = Policy::alg2;
  pt.n = 16;
  auto r = run_trial(pt, 5);
  EXPECT_EQ(r.status, "ok");
  EXPECT_EQ(r.latency_slots, 4);
  EXPECT_EQ(r.latency_bound, 4);
  EXPECT_TRUE(r.verified);
  EXPECT_EQ(r.violations, 0);
}

TEST(Trial, ZeroBudgetMatchesBisectionTree) {
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    for (int d : {2, 3}) {
      TrialPoint a;
      a.policy = Policy::alg2;
      a.n = 128;
      a.d = d;
      a.nu = 3.0;
      auto b = a;
      b.policy = Policy::pi_agg;
      auto ra = run_trial(a, seed), rb = run_trial(b, seed);
      EXPECT_NEAR(ra.energy, rb.energy, 1e-9 * ra.energy);
      EXPECT_EQ(ra.latency_slots, rb.latency_slots);
    }
}

TEST(Trial, Deterministic) {
  for (Policy p : {Policy::alg2, Policy::pi_agg, Policy::pi_clq, Policy::mst, Policy::raw}) {
    TrialPoint pt;
    pt.policy = p;
    pt.n = 100;
    pt.nu = 2.0;
    pt.delta = 9;
    pt.function = parse_function("knng:2");
    EXPECT_EQ(run_trial(pt, 77), run_trial(pt, 77)) << to_string(p);
    EXPECT_EQ(run_trial(pt, 77).status, "ok") << to_string(p);
  }
}

TEST(Trial, InfeasibleCliqueBudget) {
  TrialPoint pt;
  pt.policy = Policy::pi_clq;
  pt.n = 100;
  pt.function = parse_function("knng:3");
  pt.delta = 1;
  auto r = run_trial(pt, 3);
  EXPECT_EQ(r.status, "infeasible");
  EXPECT_GT(r.max_degree, 0);
  pt.clq_delta = ClqDelta::relative;
  auto rel = run_trial(pt, 3);
  EXPECT_EQ(rel.status, "ok");
  EXPECT_DOUBLE_EQ(rel.delta_eff, rel.max_degree + 2);
}

TEST(Experiment, RowsAndSeeds) {
  auto c = parse_config(base_config());
  auto rows = run_experiment(c);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].n, 16);
  EXPECT_EQ(rows[3].n, 32);
  EXPECT_EQ(rows[2].trial, 2);
  EXPECT_EQ(rows[1].seed, trial_seed(1, 0, 1));
  EXPECT_NE(rows[0].seed, rows[1].seed);
  EXPECT_NE(rows[0].seed, rows[3].seed);
}

TEST(Experiment, SharedPlacementAcrossPolicies) {
  auto j = base_config();
  j["policies"] = nlohmann::json::array({"alg2", "mst"});
  j["nu_list"] = nlohmann::json::array({2, 4});
  const auto items = expand_config(parse_config(j));
  for (const auto& a : items)
    for (const auto& b : items)
      if (a.point.n == b.point.n && a.trial == b.trial) {
        EXPECT_EQ(a.seed, b.seed);
      }
}

TEST(Experiment, ByteIdenticalReruns) {
  for (const char* fmt : {"csv", "json"}) {
    auto j = base_config();
    j["policies"] = nlohmann::json::array({"alg2", "pi_agg", "pi_clq", "mst", "raw"});
    j["function"] = "knng:2";
    j["delta"] = nlohmann::json::array({"n^(1/2)", 16});
    j["format"] = fmt;
    auto c = parse_config(j);
    c.output = scratch(std::string("a.") + fmt).string();
    c.workers = 1;
    run_experiment(c);
    const auto first = slurp(c.output);
    c.output = scratch(std::string("b.") + fmt).string();
    c.workers = 4;
    auto rows = run_experiment(c);
    EXPECT_EQ(first, slurp(c.output)) << fmt;
    EXPECT_EQ(read_results(c.output), rows) << fmt;
  }
}

TEST(Experiment, CreatesOutputDirectory) {
  auto c = parse_config(base_config());
  c.output = (scratch("nested") / "deeper" / "r.csv").string();
  run_experiment(c);
  EXPECT_TRUE(fs::exists(c.output));
}

TEST(Results, CsvRoundTrip) {
  std::vector<ResultRow> rows{sample_row(), ResultRow{}};
  rows[1].policy = "mst";
  std::stringstream ss;
  write_results(ss, rows, "csv");
  EXPECT_EQ(read_results_csv(ss), rows);
}

TEST(Results, JsonRoundTrip) {
  std::vector<ResultRow> rows{sample_row()};
  std::stringstream ss;
  write_results(ss, rows, "json");
  EXPECT_EQ(read_results_json(ss), rows);
}

TEST(Results, HeaderAndLineCounts) {
  std::stringstream empty;
  write_results(empty, {}, "csv");
  std::string h = empty.str();
  EXPECT_EQ(std::count(h.begin(), h.end(), '\n'), 1);
  EXPECT_EQ(h.rfind("policy,function,n,d,nu,delta,delta_spec,delta_eff,seed,trial,energy,latency_slots", 0), 0u);
  std::stringstream one;
  auto r = sample_row();
  r.note = "plain";
  write_results(one, {r}, "csv");
  std::string s = one.str();
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 2);
  EXPECT_EQ(result_columns().size(), 21u);
}

TEST(Results, RejectsWrongHeader) {
  std::stringstream ss("a,b,c\n1,2,3\n");
  EXPECT_THROW(read_results_csv(ss), invalid_input);
}

TEST(Fit, LinearAndQuadratic) {
  std::vector<std::pair<double, double>> lin, quad, pw;
  for (double n : {64.0, 128.0, 256.0, 512.0, 1024.0}) {
    lin.emplace_back(n, 5 * n);
    quad.emplace_back(n, n * n);
    pw.emplace_back(n, std::pow(n, 4.0 / 2.0));
  }
  auto f = fit_scaling_exponent(lin);
  EXPECT_NEAR(f.slope, 1.0, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 5.0, 1e-9);
  EXPECT_NEAR(fit_scaling_exponent(quad).slope, 2.0, 1e-12);
  EXPECT_NEAR(fit_scaling_exponent(pw).slope, 2.0, 1e-12);
}

TEST(Fit, Errors) {
  EXPECT_THROW(fit_scaling_exponent({{1, 1}, {2, 2}}), invalid_input);
  EXPECT_THROW(fit_scaling_exponent({{1, 1}, {2, 0}, {3, 3}}), invalid_input);
  EXPECT_THROW(fit_scaling_exponent({{1, 1}, {-2, 2}, {3, 3}}), invalid_input);
  EXPECT_THROW(fit_scaling_exponent({{2, 1}, {2, 2}, {2, 3}}), invalid_input);
}

TEST(Bootstrap, DeterministicAndBracketsMean) {
  std::vector<double> v;
  Rng rng(9);
  for (int i = 0; i < 50; ++i) v.push_back(rng.uniform() * 10);
  auto a = bootstrap_mean(v, 500, 0.95, 42), b = bootstrap_mean(v, 500, 0.95, 42);
  EXPECT_EQ(a.lo, b.lo);
  EXPECT_EQ(a.hi, b.hi);
  EXPECT_LE(a.lo, a.mean);
  EXPECT_GE(a.hi, a.mean);
  auto c = bootstrap_mean({3.0, 3.0, 3.0});
  EXPECT_DOUBLE_EQ(c.lo, 3.0);
  EXPECT_DOUBLE_EQ(c.hi, 3.0);
}

TEST(Summary, GroupsAndSkipsFailures) {
  std::vector<ResultRow> rows(4);
  for (int i = 0; i < 4; ++i) {
    rows[i].policy = "alg2";
    rows[i].n = i < 2 ? 16 : 32;
    rows[i].energy = i + 1;
  }
  rows[3].status = "error";
  auto g = summarize(rows);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_DOUBLE_EQ(g[0].energy.mean, 1.5);
  EXPECT_EQ(g[1].failed, 1u);
  EXPECT_EQ(g[1].energy.count, 1u);
}

TEST(Experiment, ScalingBudgetKeepsItsSpelling) {
  auto j = base_config();
  j["delta"] = nlohmann::json::array({"n^(1/2)", 3});
  auto rows = run_experiment(parse_config(j));
  ASSERT_EQ(rows.size(), 12u);
  EXPECT_EQ(rows[0].delta_spec, "n^(1/2)");
  EXPECT_DOUBLE_EQ(rows[0].delta, 4.0);
  EXPECT_EQ(rows[3].delta_spec, "3");
  EXPECT_DOUBLE_EQ(rows[6].delta, std::sqrt(32.0));
}
