#pragma once

// Experiment sweeps: configuration, per-trial runs, a bounded worker pool,
// result tables in CSV/JSON, and log-log slope fitting.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "aggnet/baselines.hpp"
#include "aggnet/clique_policy.hpp"
#include "aggnet/errors.hpp"
#include "aggnet/geometry.hpp"
#include "aggnet/random.hpp"
#include "aggnet/schedule.hpp"
#include "aggnet/text.hpp"
#include "aggnet/tradeoff.hpp"
#include "aggnet/trees.hpp"

namespace aggnet {

enum class Policy { alg2, pi_agg, pi_clq, mst, raw };

inline const char* to_string(Policy p) {
  switch (p) {
    case Policy::alg2: return "alg2";
    case Policy::pi_agg: return "pi_agg";
    case Policy::pi_clq: return "pi_clq";
    case Policy::mst: return "mst";
    case Policy::raw: return "raw";
  }
  return "?";
}

inline Policy parse_policy(const std::string& s) {
  for (Policy p : {Policy::alg2, Policy::pi_agg, Policy::pi_clq, Policy::mst, Policy::raw})
    if (s == to_string(p)) return p;
  throw invalid_parameter("unknown policy '" + s + "' (expected alg2, pi_agg, pi_clq, mst or raw)");
}

// A latency budget: a constant, or coef * n^exponent written "n^a".
struct DeltaSpec {
  double value = 0.0;
  double exponent = 0.0;
  bool scales = false;
  std::string text;  // as written in the config

  double resolve(int n) const { return scales ? std::pow(static_cast<double>(n), exponent) : value; }
};

inline std::string to_string(const DeltaSpec& d) {
  if (!d.text.empty()) return d.text;
  return d.scales ? "n^" + text::format_double(d.exponent) : text::format_double(d.value);
}

inline DeltaSpec parse_delta(const std::string& s) {
  DeltaSpec d;
  if (s.rfind("n^", 0) == 0) {
    std::string e = s.substr(2);
    if (e.size() > 2 && e.front() == '(' && e.back() == ')') e = e.substr(1, e.size() - 2);
    d.scales = true;
    // a plain number or a ratio a/b
    if (auto slash = e.find('/'); slash != std::string::npos) {
      const double den = text::parse_number<double>(e.substr(slash + 1), "delta exponent");
      if (den == 0.0) throw invalid_parameter("delta exponent has zero denominator");
      d.exponent = text::parse_number<double>(e.substr(0, slash), "delta exponent") / den;
    } else {
      d.exponent = text::parse_number<double>(e, "delta exponent");
    }
  } else {
    d.value = text::parse_number<double>(s, "delta");
  }
  if (!d.scales && !(d.value >= 0.0)) throw invalid_parameter("delta must be >= 0");
  d.text = d.scales ? s : text::format_double(d.value);
  return d;
}

// How pi_clq interprets delta: as the whole budget, or as the budget on top
// of the realized max degree + 1.
enum class ClqDelta { absolute, relative };

struct ExperimentConfig {
  std::vector<int> n_list;
  int d = 2;
  std::vector<double> nu_list;
  std::vector<DeltaSpec> delta_list{DeltaSpec{}};
  std::vector<Policy> policies;
  FunctionKindSpec function;
  int trials = 1;
  std::uint64_t base_seed = 1;
  PlanOptions plan;
  ClqDelta clq_delta = ClqDelta::absolute;
  std::string output;
  std::string format = "csv";
  int workers = 0;  // 0: hardware concurrency
  bool timing = false;

  void check() const {
    if (n_list.empty() || nu_list.empty() || delta_list.empty() || policies.empty())
      throw invalid_parameter("config lists n_list, nu_list, delta and policies must be nonempty");
    for (int n : n_list)
      if (n < 1) throw invalid_parameter("n must be >= 1");
    for (double nu : nu_list) EnergyParams{nu}.check();
    if (d < 1) throw invalid_parameter("d must be >= 1");
    if (trials < 1) throw invalid_parameter("trials must be >= 1");
    if (format != "csv" && format != "json") throw invalid_parameter("format must be csv or json");
    if (workers < 0) throw invalid_parameter("workers must be >= 0");
  }
};

namespace detail {

inline std::string json_scalar_string(const nlohmann::json& v, const char* key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return text::format_double(v.get<double>());
  throw invalid_input(std::string("config key '") + key + "' must be a number or string");
}

template <class T>
T json_get(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw invalid_input(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  static const std::vector<std::string> known{
      "n_list", "d", "nu_list", "delta", "policies", "function", "trials", "base_seed",
      "path_mode", "exact_cost_cap", "clq_delta", "output", "format", "workers", "timing"};
  if (!j.is_object()) throw invalid_input("config must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw invalid_input("unknown config key '" + it.key() + "'");
  ExperimentConfig c;
  c.n_list = detail::json_get<std::vector<int>>(j, "n_list");
  c.nu_list = detail::json_get<std::vector<double>>(j, "nu_list");
  if (j.contains("d")) c.d = detail::json_get<int>(j, "d");
  if (j.contains("delta")) {
    c.delta_list.clear();
    const auto& dl = j.at("delta");
    if (dl.is_array()) {
      for (const auto& v : dl) c.delta_list.push_back(parse_delta(detail::json_scalar_string(v, "delta")));
    } else {
      c.delta_list.push_back(parse_delta(detail::json_scalar_string(dl, "delta")));
    }
  }
  for (const auto& p : detail::json_get<std::vector<std::string>>(j, "policies")) c.policies.push_back(parse_policy(p));
  if (j.contains("function")) c.function = parse_function(detail::json_get<std::string>(j, "function"));
  if (j.contains("trials")) c.trials = detail::json_get<int>(j, "trials");
  if (j.contains("base_seed")) c.base_seed = detail::json_get<std::uint64_t>(j, "base_seed");
  if (j.contains("path_mode")) c.plan.path_mode = parse_path_mode(detail::json_get<std::string>(j, "path_mode"));
  if (j.contains("exact_cost_cap")) c.plan.exact_cost_cap = detail::json_get<double>(j, "exact_cost_cap");
  if (j.contains("clq_delta")) {
    auto s = detail::json_get<std::string>(j, "clq_delta");
    if (s == "absolute") c.clq_delta = ClqDelta::absolute;
    else if (s == "relative") c.clq_delta = ClqDelta::relative;
    else throw invalid_input("clq_delta must be absolute or relative");
  }
  if (j.contains("output")) c.output = detail::json_get<std::string>(j, "output");
  if (j.contains("format")) c.format = detail::json_get<std::string>(j, "format");
  if (j.contains("workers")) c.workers = detail::json_get<int>(j, "workers");
  if (j.contains("timing")) c.timing = detail::json_get<bool>(j, "timing");
  c.check();
  return c;
}

// AGGNET_OUTPUT_DIR replaces the directory of the output path;
// AGGNET_WORKERS replaces the worker count.
inline void apply_environment(ExperimentConfig& c) {
  if (const char* dir = std::getenv("AGGNET_OUTPUT_DIR"); dir && *dir) {
    std::filesystem::path name = c.output.empty() ? std::filesystem::path("results." + c.format) : std::filesystem::path(c.output).filename();
    c.output = (std::filesystem::path(dir) / name).string();
  }
  if (const char* w = std::getenv("AGGNET_WORKERS"); w && *w) {
    c.workers = text::parse_number<int>(w, "AGGNET_WORKERS");
    if (c.workers < 0) throw invalid_parameter("AGGNET_WORKERS must be >= 0");
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config", path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw invalid_input("config " + path + ": " + e.what());
  }
  auto c = parse_config(j);
  apply_environment(c);
  return c;
}

struct ResultRow {
  std::string policy;
  std::string function = "sum";
  int n = 0;
  int d = 0;
  double nu = 0.0;
  double delta = 0.0;      // resolved configured budget
  std::string delta_spec;  // configured budget as written, e.g. n^(1/3)
  double delta_eff = 0.0;  // budget handed to the policy
  std::uint64_t seed = 0;
  int trial = 0;
  double energy = 0.0;
  int latency_slots = 0;
  int latency_bound = 0;
  int violations = 0;
  bool verified = false;
  int repairs = 0;
  int forward_slots = 0;
  int max_degree = 0;
  std::string status = "ok";  // ok | infeasible | error
  std::string note;
  double wall_time_ms = 0.0;

  bool operator==(const ResultRow&) const = default;
};

inline const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols{
      "policy", "function", "n", "d", "nu", "delta", "delta_spec", "delta_eff", "seed", "trial", "energy",
      "latency_slots", "latency_bound", "violations", "verified", "repairs", "forward_slots",
      "max_degree", "status", "note", "wall_time_ms"};
  return cols;
}

struct TrialPoint {
  Policy policy = Policy::alg2;
  FunctionKindSpec function;
  int n = 0;
  int d = 2;
  double nu = 2.0;
  double delta = 0.0;
  std::string delta_spec;
  PlanOptions plan;
  ClqDelta clq_delta = ClqDelta::absolute;
};

inline std::uint64_t trial_seed(std::uint64_t base, std::size_t n_index, int trial) {
  return derive_seed(base, {static_cast<std::uint64_t>(n_index), static_cast<std::uint64_t>(trial)});
}

namespace detail {

inline void check_schedule(ResultRow& row, const Schedule& s, const Deployment& dep, const CliqueSet& cliques) {
  const auto v = validate_schedule(s, dep);
  row.violations = static_cast<int>(v.violations.size());
  const auto r = verify_aggregate(s, cliques, dep.root);
  row.verified = r.passed();
  if (!v.ok()) row.note = std::string(to_string(v.violations.front().kind)) + " at slot " + std::to_string(v.violations.front().slot);
  else if (!r.passed()) row.note = r.failures.front();
}

}  // namespace detail

// Places nodes from `seed`, builds the policy, schedules, validates,
// verifies and measures. Failures become rows with status error/infeasible.
inline ResultRow run_trial(const TrialPoint& pt, std::uint64_t seed, bool timing = false) {
  ResultRow row;
  row.policy = to_string(pt.policy);
  row.function = pt.policy == Policy::pi_clq ? to_string(pt.function) : "sum";
  row.n = pt.n;
  row.d = pt.d;
  row.nu = pt.nu;
  row.delta = pt.delta;
  row.delta_spec = pt.delta_spec.empty() ? text::format_double(pt.delta) : pt.delta_spec;
  row.delta_eff = pt.delta;
  row.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    const EnergyParams params{pt.nu};
    const Deployment dep = place_uniform(pt.n, pt.d, seed);
    const int K = ceil_log2(pt.n);
    switch (pt.policy) {
      case Policy::alg2: {
        const auto tree = build_bisection_tree(dep);
        const auto s = schedule_tree(tree);
        row.energy = tree_energy(tree, dep, params);
        row.latency_slots = s.makespan();
        row.latency_bound = K;
        detail::check_schedule(row, s, dep, {});
        break;
      }
      case Policy::pi_agg: {
        Schedule s;
        s.n = 1;
        if (pt.n > 1) {
          const auto plan = build_agg_plan(dep, compute_weights(pt.n, pt.d, params, pt.delta), params, pt.plan);
          s = schedule_plan(plan);
          row.repairs = static_cast<int>(plan.repairs.size());
        }
        row.energy = schedule_energy(s, dep, params);
        row.latency_slots = s.makespan();
        row.latency_bound = K + static_cast<int>(std::floor(pt.delta)) + row.repairs;
        detail::check_schedule(row, s, dep, {});
        break;
      }
      case Policy::pi_clq: {
        const auto spec = make_function(dep, pt.function);
        row.max_degree = max_degree(spec.graph);
        const int min_delta = row.max_degree == 0 ? 0 : row.max_degree + 1;
        if (pt.clq_delta == ClqDelta::relative) row.delta_eff = min_delta + pt.delta;
        try {
          const auto r = build_clq_policy(dep, spec, row.delta_eff, params, pt.plan);
          row.forward_slots = r.forward_slots;
          row.repairs = static_cast<int>(r.plan.repairs.size());
          row.energy = schedule_energy(r.schedule, dep, params);
          row.latency_slots = r.schedule.makespan();
          row.latency_bound = K + static_cast<int>(std::floor(row.delta_eff)) + row.repairs;
          detail::check_schedule(row, r.schedule, dep, spec.cliques);
        } catch (const infeasible_budget& e) {
          row.status = "infeasible";
          row.note = e.what();
        }
        break;
      }
      case Policy::mst: {
        const auto r = mst_policy(dep, params);
        row.energy = r.energy;
        row.latency_slots = r.latency;
        row.latency_bound = r.latency_bound;
        detail::check_schedule(row, r.schedule, dep, {});
        break;
      }
      case Policy::raw: {
        const auto r = raw_forwarding_policy(dep, params);
        row.energy = r.energy;
        row.latency_slots = r.latency;
        row.latency_bound = r.latency_bound;
        detail::check_schedule(row, r.schedule, dep, {});
        break;
      }
    }
    if (row.status == "ok" && (row.violations != 0 || !row.verified)) row.status = "error";
  } catch (const std::exception& e) {
    row.status = "error";
    row.note = e.what();
  }
  if (timing)
    row.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return row;
}

struct WorkItem {
  TrialPoint point;
  std::uint64_t seed = 0;
  int trial = 0;
};

// Points in (n, nu, delta, policy) order, trials innermost. All policies and
// budgets of one (n, trial) share a placement.
inline std::vector<WorkItem> expand_config(const ExperimentConfig& c) {
  std::vector<WorkItem> items;
  for (std::size_t ni = 0; ni < c.n_list.size(); ++ni)
    for (double nu : c.nu_list)
      for (const auto& ds : c.delta_list)
        for (Policy p : c.policies)
          for (int t = 0; t < c.trials; ++t) {
            WorkItem w;
            w.point.policy = p;
            w.point.function = c.function;
            w.point.n = c.n_list[ni];
            w.point.d = c.d;
            w.point.nu = nu;
            w.point.delta = ds.resolve(c.n_list[ni]);
            w.point.delta_spec = to_string(ds);
            w.point.plan = c.plan;
            w.point.clq_delta = c.clq_delta;
            w.seed = trial_seed(c.base_seed, ni, t);
            w.trial = t;
            items.push_back(w);
          }
  return items;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::vector<std::string> row_fields(const ResultRow& r) {
  return {r.policy, r.function, std::to_string(r.n), std::to_string(r.d), text::format_double(r.nu),
          text::format_double(r.delta), r.delta_spec, text::format_double(r.delta_eff), std::to_string(r.seed),
          std::to_string(r.trial), text::format_double(r.energy), std::to_string(r.latency_slots),
          std::to_string(r.latency_bound), std::to_string(r.violations), r.verified ? "1" : "0",
          std::to_string(r.repairs), std::to_string(r.forward_slots), std::to_string(r.max_degree),
          r.status, r.note, text::format_double(r.wall_time_ms)};
}

inline ResultRow row_from_fields(const std::vector<std::string>& f) {
  if (f.size() != result_columns().size())
    throw invalid_input("result row has " + std::to_string(f.size()) + " fields, expected " +
                        std::to_string(result_columns().size()));
  ResultRow r;
  r.policy = f[0];
  r.function = f[1];
  r.n = text::parse_number<int>(f[2], "n");
  r.d = text::parse_number<int>(f[3], "d");
  r.nu = text::parse_number<double>(f[4], "nu");
  r.delta = text::parse_number<double>(f[5], "delta");
  r.delta_spec = f[6];
  r.delta_eff = text::parse_number<double>(f[7], "delta_eff");
  r.seed = text::parse_number<std::uint64_t>(f[8], "seed");
  r.trial = text::parse_number<int>(f[9], "trial");
  r.energy = text::parse_number<double>(f[10], "energy");
  r.latency_slots = text::parse_number<int>(f[11], "latency_slots");
  r.latency_bound = text::parse_number<int>(f[12], "latency_bound");
  r.violations = text::parse_number<int>(f[13], "violations");
  r.verified = text::parse_number<int>(f[14], "verified") != 0;
  r.repairs = text::parse_number<int>(f[15], "repairs");
  r.forward_slots = text::parse_number<int>(f[16], "forward_slots");
  r.max_degree = text::parse_number<int>(f[17], "max_degree");
  r.status = f[18];
  r.note = f[19];
  r.wall_time_ms = text::parse_number<double>(f[20], "wall_time_ms");
  return r;
}

// One CSV record, honoring quoted fields that span lines.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  std::string cur;
  bool quoted = false;
  for (;;) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      char ch = line[i];
      if (quoted) {
        if (ch == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            cur += '"';
            ++i;
          } else {
            quoted = false;
          }
        } else {
          cur += ch;
        }
      } else if (ch == '"') {
        quoted = true;
      } else if (ch == ',') {
        fields.push_back(std::move(cur));
        cur.clear();
      } else if (ch != '\r') {
        cur += ch;
      }
    }
    if (!quoted) break;
    cur += '\n';
    if (!std::getline(in, line)) throw invalid_input("unterminated quoted CSV field");
  }
  fields.push_back(std::move(cur));
  return true;
}

}  // namespace detail

inline void write_csv_header(std::ostream& out) {
  const auto& cols = result_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
}

inline void write_csv_row(std::ostream& out, const ResultRow& r) {
  const auto f = detail::row_fields(r);
  for (std::size_t i = 0; i < f.size(); ++i) out << (i ? "," : "") << detail::csv_field(f[i]);
  out << '\n';
}

inline nlohmann::json row_to_json(const ResultRow& r) {
  return {{"policy", r.policy}, {"function", r.function}, {"n", r.n}, {"d", r.d}, {"nu", r.nu},
          {"delta", r.delta}, {"delta_spec", r.delta_spec}, {"delta_eff", r.delta_eff}, {"seed", r.seed}, {"trial", r.trial},
          {"energy", r.energy}, {"latency_slots", r.latency_slots}, {"latency_bound", r.latency_bound},
          {"violations", r.violations}, {"verified", r.verified}, {"repairs", r.repairs},
          {"forward_slots", r.forward_slots}, {"max_degree", r.max_degree}, {"status", r.status},
          {"note", r.note}, {"wall_time_ms", r.wall_time_ms}};
}

inline ResultRow row_from_json(const nlohmann::json& j) {
  ResultRow r;
  try {
    r.policy = j.at("policy").get<std::string>();
    r.function = j.at("function").get<std::string>();
    r.n = j.at("n").get<int>();
    r.d = j.at("d").get<int>();
    r.nu = j.at("nu").get<double>();
    r.delta = j.at("delta").get<double>();
    r.delta_spec = j.at("delta_spec").get<std::string>();
    r.delta_eff = j.at("delta_eff").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.trial = j.at("trial").get<int>();
    r.energy = j.at("energy").get<double>();
    r.latency_slots = j.at("latency_slots").get<int>();
    r.latency_bound = j.at("latency_bound").get<int>();
    r.violations = j.at("violations").get<int>();
    r.verified = j.at("verified").get<bool>();
    r.repairs = j.at("repairs").get<int>();
    r.forward_slots = j.at("forward_slots").get<int>();
    r.max_degree = j.at("max_degree").get<int>();
    r.status = j.at("status").get<std::string>();
    r.note = j.at("note").get<std::string>();
    r.wall_time_ms = j.at("wall_time_ms").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw invalid_input(std::string("bad result row: ") + e.what());
  }
  return r;
}

inline void write_results(std::ostream& out, const std::vector<ResultRow>& rows, const std::string& format) {
  if (format == "csv") {
    write_csv_header(out);
    for (const auto& r : rows) write_csv_row(out, r);
  } else if (format == "json") {
    auto arr = nlohmann::json::array();
    for (const auto& r : rows) arr.push_back(row_to_json(r));
    out << arr.dump(1) << '\n';
  } else {
    throw invalid_parameter("unknown result format '" + format + "'");
  }
}

inline void write_results(const std::string& path, const std::vector<ResultRow>& rows, const std::string& format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write results", path);
  write_results(out, rows, format);
  if (!out) throw io_error("write failed", path);
}

inline std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::vector<std::string> f;
  if (!detail::read_csv_record(in, f)) throw invalid_input("empty results file");
  if (f != result_columns()) throw invalid_input("unexpected results header");
  std::vector<ResultRow> rows;
  while (detail::read_csv_record(in, f)) {
    if (f.size() == 1 && f[0].empty()) continue;
    rows.push_back(detail::row_from_fields(f));
  }
  return rows;
}

inline std::vector<ResultRow> read_results_json(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw invalid_input(std::string("results: ") + e.what());
  }
  if (!j.is_array()) throw invalid_input("results JSON must be an array");
  std::vector<ResultRow> rows;
  for (const auto& r : j) rows.push_back(row_from_json(r));
  return rows;
}

// Format from the extension: .json is JSON, anything else CSV.
inline std::vector<ResultRow> read_results(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open results", path);
  return std::filesystem::path(path).extension() == ".json" ? read_results_json(in) : read_results_csv(in);
}

// Streams rows in index order as they complete. CSV rows are written one by
// one; JSON is written as an array whose elements are appended as they land.
class ResultSink {
 public:
  ResultSink(std::ostream* out, std::string format, std::size_t total)
      : out_(out), format_(std::move(format)), slots_(total) {
    if (out_) {
      if (format_ == "csv") write_csv_header(*out_);
      else *out_ << "[";
      out_->flush();
    }
  }

  void put(std::size_t index, ResultRow row) {
    std::lock_guard lock(mu_);
    slots_[index] = std::move(row);
    while (next_ < slots_.size() && slots_[next_]) {
      if (out_) {
        if (format_ == "csv") {
          write_csv_row(*out_, *slots_[next_]);
        } else {
          *out_ << (next_ ? ",\n " : "\n ") << row_to_json(*slots_[next_]).dump();
        }
        out_->flush();
      }
      ++next_;
    }
  }

  std::vector<ResultRow> finish() {
    std::lock_guard lock(mu_);
    if (out_ && format_ == "json") {
      *out_ << (slots_.empty() ? "]\n" : "\n]\n");
      out_->flush();
    }
    std::vector<ResultRow> rows;
    rows.reserve(slots_.size());
    for (auto& s : slots_) rows.push_back(std::move(*s));
    return rows;
  }

 private:
  std::ostream* out_;
  std::string format_;
  std::mutex mu_;
  std::vector<std::optional<ResultRow>> slots_;
  std::size_t next_ = 0;
};

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs every work item on a bounded pool. Output order is item order.
inline std::vector<ResultRow> run_items(const std::vector<WorkItem>& items, int workers, bool timing,
                                        std::ostream* out = nullptr, const std::string& format = "csv",
                                        const std::function<void(std::size_t)>& progress = {}) {
  ResultSink sink(out, format, items.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  auto work = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      auto row = run_trial(items[i].point, items[i].seed, timing);
      row.trial = items[i].trial;
      sink.put(i, std::move(row));
      const auto d = ++done;
      if (progress) progress(d);
    }
  };
  const int w = std::min<int>(resolve_workers(workers), std::max<std::size_t>(items.size(), 1));
  if (w <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < w; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return sink.finish();
}

inline std::vector<ResultRow> run_experiment(const ExperimentConfig& c,
                                             const std::function<void(std::size_t)>& progress = {}) {
  c.check();
  const auto items = expand_config(c);
  if (c.output.empty()) return run_items(items, c.workers, c.timing, nullptr, c.format, progress);
  const auto parent = std::filesystem::path(c.output).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
    if (ec) throw io_error("cannot create output directory", parent.string());
  }
  std::ofstream out(c.output, std::ios::binary);
  if (!out) throw io_error("cannot write results", c.output);
  auto rows = run_items(items, c.workers, c.timing, &out, c.format, progress);
  if (!out) throw io_error("write failed", c.output);
  return rows;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares of log y on log x.
inline LineFit fit_scaling_exponent(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw invalid_input("slope fit needs at least 3 points");
  std::vector<double> lx, ly;
  for (auto [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(x) || !std::isfinite(y))
      throw invalid_input("slope fit needs positive finite values");
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
  }
  const double m = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx <= 0.0) throw invalid_input("slope fit needs at least two distinct x values");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

struct MeanCI {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

// Percentile bootstrap interval of the mean. Deterministic in `seed`.
inline MeanCI bootstrap_mean(const std::vector<double>& v, int resamples = 1000, double level = 0.95,
                             std::uint64_t seed = 0x5eed) {
  MeanCI ci;
  ci.count = v.size();
  if (v.empty()) return ci;
  double s = 0.0;
  for (double x : v) s += x;
  ci.mean = s / static_cast<double>(v.size());
  std::vector<double> means;
  means.reserve(resamples);
  Rng rng(seed);
  for (int b = 0; b < resamples; ++b) {
    double t = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) t += v[rng.below(v.size())];
    means.push_back(t / static_cast<double>(v.size()));
  }
  std::sort(means.begin(), means.end());
  auto pick = [&](double q) {
    const double pos = q * (resamples - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double f = pos - static_cast<double>(i);
    return i + 1 < means.size() ? means[i] * (1 - f) + means[i + 1] * f : means[i];
  };
  ci.lo = pick((1.0 - level) / 2.0);
  ci.hi = pick(1.0 - (1.0 - level) / 2.0);
  return ci;
}

struct GroupKey {
  std::string policy;
  std::string function;
  int n = 0;
  int d = 0;
  double nu = 0.0;
  double delta = 0.0;
  std::string delta_spec;

  auto operator<=>(const GroupKey&) const = default;
};

struct GroupSummary {
  GroupKey key;
  MeanCI energy;
  MeanCI latency;
  std::size_t rows = 0;
  std::size_t failed = 0;  // rows not ok
};

// Per-point means over rows with status ok, ordered by key.
inline std::vector<GroupSummary> summarize(const std::vector<ResultRow>& rows) {
  std::map<GroupKey, std::pair<std::vector<double>, std::vector<double>>> acc;
  std::map<GroupKey, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& r : rows) {
    GroupKey k{r.policy, r.function, r.n, r.d, r.nu, r.delta, r.delta_spec};
    auto& c = counts[k];
    ++c.first;
    if (r.status != "ok") {
      ++c.second;
      continue;
    }
    acc[k].first.push_back(r.energy);
    acc[k].second.push_back(static_cast<double>(r.latency_slots));
  }
  std::vector<GroupSummary> out;
  for (const auto& [k, c] : counts) {
    GroupSummary g;
    g.key = k;
    g.rows = c.first;
    g.failed = c.second;
    if (auto it = acc.find(k); it != acc.end()) {
      g.energy = bootstrap_mean(it->second.first);
      g.latency = bootstrap_mean(it->second.second);
    }
    out.push_back(g);
  }
  return out;
}

}  // namespace aggnet
