#include "atosync/cli.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

namespace atosync::cli {

namespace {

using nlohmann::json;

[[noreturn]] void field_error(std::string_view field, std::string_view what) {
  throw InvalidInput(fmt::format("config field '{}': {}", field, what));
}

double get_number(const json& obj, std::string_view section, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) field_error(fmt::format("{}.{}", section, key), "expected a number");
  return v.get<double>();
}

long get_integer(const json& obj, std::string_view section, const char* key, long fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) field_error(fmt::format("{}.{}", section, key), "expected an integer");
  const double d = v.get<double>();
  if (d != std::floor(d)) field_error(fmt::format("{}.{}", section, key), "expected an integer");
  return static_cast<long>(d);
}

std::vector<double> get_list(const json& obj, std::string_view section, const char* key,
                             std::vector<double> fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_array() || v.empty()) field_error(fmt::format("{}.{}", section, key), "expected a non-empty array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) field_error(fmt::format("{}.{}", section, key), "expected numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

IntPmf parse_pmf(const json& v, const std::string& field) {
  if (!v.is_array()) field_error(field, "expected a list of [value, probability] pairs");
  std::vector<std::pair<int, double>> pairs;
  for (const auto& e : v) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number())
      field_error(field, "expected [value, probability] pairs");
    pairs.emplace_back(e[0].get<int>(), e[1].get<double>());
  }
  try {
    return IntPmf::from_pairs(pairs);
  } catch (const InvalidInput& e) {
    field_error(field, e.what());
  }
}

std::optional<int> parse_cutoff(const json& obj, std::string_view section, std::optional<int> fallback) {
  if (!obj.contains("backlog_cutoff")) return fallback;
  const auto& v = obj.at("backlog_cutoff");
  if (v.is_null()) return std::nullopt;
  if (!v.is_number_integer() || v.get<int>() < 0)
    field_error(fmt::format("{}.backlog_cutoff", section), "expected a non-negative integer or null");
  return v.get<int>();
}

ModelKind parse_model(const json& v) {
  if (v == "continuous") return ModelKind::continuous;
  if (v == "discrete") return ModelKind::discrete;
  field_error("model", "expected \"continuous\" or \"discrete\"");
}

void parse_continuous(const json& c, RunConfig& cfg) {
  if (!c.is_object()) field_error("continuous", "expected an object");
  auto& p = cfg.continuous;
  p.lambda = get_number(c, "continuous", "lambda", p.lambda);
  p.mu = get_number(c, "continuous", "mu", p.mu);
  p.lead_time = get_number(c, "continuous", "lead_time", p.lead_time);
  p.h1 = get_number(c, "continuous", "h1", p.h1);
  p.h2 = get_number(c, "continuous", "h2", p.h2);
  p.b = get_number(c, "continuous", "b", p.b);
  p.epsilon = get_number(c, "continuous", "epsilon", p.epsilon);
  p.queue_tail_mass = get_number(c, "continuous", "queue_tail_mass", p.queue_tail_mass);
  cfg.backlog_cutoff = parse_cutoff(c, "continuous", cfg.backlog_cutoff);
}

void parse_discrete(const json& d, RunConfig& cfg) {
  if (!d.is_object()) field_error("discrete", "expected an object");
  auto& p = cfg.discrete;
  if (d.contains("case")) {
    const long which = get_integer(d, "discrete", "case", 1);
    if (which != 1 && which != 2) field_error("discrete.case", "reference cases are 1 and 2");
    p = reference_case(static_cast<int>(which));
  }
  if (d.contains("demand")) {
    p.demand = parse_pmf(d.at("demand"), "discrete.demand");
    p.case_label.reset();
  }
  if (d.contains("capacity")) {
    p.capacity = parse_pmf(d.at("capacity"), "discrete.capacity");
    p.case_label.reset();
  }
  p.lead_periods = static_cast<int>(get_integer(d, "discrete", "lead_periods", p.lead_periods));
  p.h1 = get_number(d, "discrete", "h1", p.h1);
  p.h2 = get_number(d, "discrete", "h2", p.h2);
  p.b = get_number(d, "discrete", "b", p.b);
  p.stabilization_tol = get_number(d, "discrete", "stabilization_tol", p.stabilization_tol);
  p.max_periods = get_integer(d, "discrete", "max_periods", p.max_periods);
}

void parse_experiment(const json& e, RunConfig& cfg) {
  if (!e.is_object()) field_error("experiment", "expected an object");
  auto& g = cfg.grid;
  g.lead_times = get_list(e, "experiment", "L", g.lead_times);
  g.h1s = get_list(e, "experiment", "h1", g.h1s);
  g.bs = get_list(e, "experiment", "b", g.bs);
  g.h2 = get_number(e, "experiment", "h2", g.h2);
  if (cfg.model == ModelKind::continuous) {
    g.lambdas = get_list(e, "experiment", "lambda", g.lambdas);
    g.mu = get_number(e, "experiment", "mu", g.mu);
    g.epsilon = get_number(e, "experiment", "epsilon", g.epsilon);
    g.backlog_sum.last_backlog = parse_cutoff(e, "experiment", g.backlog_sum.last_backlog);
  } else {
    g.stabilization_tol = get_number(e, "experiment", "stabilization_tol", g.stabilization_tol);
    if (e.contains("case")) {
      g.cases.clear();
      for (double c : get_list(e, "experiment", "case", {})) {
        if (c != 1.0 && c != 2.0) field_error("experiment.case", "reference cases are 1 and 2");
        const auto p = reference_case(static_cast<int>(c));
        g.cases[static_cast<int>(c)] = {p.demand, p.capacity};
      }
    }
    if (e.contains("cases")) {
      const auto& cs = e.at("cases");
      if (!cs.is_object()) field_error("experiment.cases", "expected an object keyed by case label");
      g.cases.clear();
      for (const auto& [label, spec] : cs.items()) {
        const std::string base = "experiment.cases." + label;
        int id = 0;
        try {
          id = std::stoi(label);
        } catch (const std::exception&) {
          field_error(base, "case labels must be integers");
        }
        if (!spec.contains("demand") || !spec.contains("capacity")) field_error(base, "needs demand and capacity");
        g.cases[id] = {parse_pmf(spec.at("demand"), base + ".demand"),
                       parse_pmf(spec.at("capacity"), base + ".capacity")};
      }
    }
  }
}

void parse_simulation(const json& s, RunConfig& cfg) {
  if (!s.is_object()) field_error("simulation", "expected an object");
  auto& c = cfg.simulation;
  c.horizon = get_number(s, "simulation", "horizon", c.horizon);
  if (s.contains("warmup")) {
    c.warmup = get_number(s, "simulation", "warmup", c.warmup);
    cfg.warmup_given = true;
  }
  c.seed = static_cast<std::uint64_t>(get_integer(s, "simulation", "seed", static_cast<long>(c.seed)));
  c.batches = static_cast<int>(get_integer(s, "simulation", "batches", c.batches));
  if (s.contains("policy")) {
    const auto& v = s.at("policy");
    if (v == "state_dependent")
      cfg.simulated_policy = SimulatedPolicy::state_dependent;
    else if (v == "fixed")
      cfg.simulated_policy = SimulatedPolicy::fixed;
    else
      field_error("simulation.policy", "expected \"state_dependent\" or \"fixed\"");
  }
}

OutputFormat parse_format(std::string_view s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  field_error("output.format", "expected \"csv\" or \"json\"");
}

// ---------------------------------------------------------------------------
// Rendering

std::string echo_block(const RunConfig& cfg) {
  if (cfg.model == ModelKind::continuous) {
    const auto& p = cfg.continuous;
    return fmt::format("# model=continuous lambda={} mu={} L={} h1={} h2={} b={} epsilon={} transition_bound={}\n",
                       p.lambda, p.mu, p.lead_time, p.h1, p.h2, p.b, p.epsilon,
                       transition_upper_bound(p.lambda, p.mu, p.lead_time, p.epsilon));
  }
  const auto& p = cfg.discrete;
  auto pmf_text = [](const IntPmf& pmf) {
    std::string s;
    for (const auto& [v, pr] : pmf.support()) s += fmt::format("{}{}:{}", s.empty() ? "" : ";", v, pr);
    return s;
  };
  return fmt::format("# model=discrete case={} demand={} capacity={} L={} h1={} h2={} b={}\n",
                     p.case_label ? std::to_string(*p.case_label) : "custom", pmf_text(p.demand),
                     pmf_text(p.capacity), p.lead_periods, p.h1, p.h2, p.b);
}

json params_json(const RunConfig& cfg) {
  if (cfg.model == ModelKind::continuous) {
    const auto& p = cfg.continuous;
    return {{"model", "continuous"}, {"lambda", p.lambda}, {"mu", p.mu},   {"lead_time", p.lead_time},
            {"h1", p.h1},           {"h2", p.h2},         {"b", p.b},     {"epsilon", p.epsilon}};
  }
  const auto& p = cfg.discrete;
  return {{"model", "discrete"},
          {"case", p.case_label ? json(*p.case_label) : json(nullptr)},
          {"demand", p.demand.support()},
          {"capacity", p.capacity.support()},
          {"lead_periods", p.lead_periods},
          {"h1", p.h1},
          {"h2", p.h2},
          {"b", p.b}};
}

class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : fallback_(fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw InvalidInput(fmt::format("config field 'output.path': cannot open '{}' for writing", path));
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : fallback_; }

 private:
  std::ofstream file_;
  std::ostream& fallback_;
};

std::vector<ProductionPmf> conditional_for(const RunConfig& cfg) {
  return cfg.model == ModelKind::continuous ? conditional_production_pmfs(cfg.continuous)
                                            : conditional_production_pmfs_discrete(cfg.discrete);
}

int cmd_policy(const RunConfig& cfg, bool debug, std::ostream& out, std::ostream& err) {
  const auto conditional = conditional_for(cfg);
  const double under = cfg.model == ModelKind::continuous ? cfg.continuous.underage() : cfg.discrete.underage();
  const double over = cfg.model == ModelKind::continuous ? cfg.continuous.overage() : cfg.discrete.overage();
  const auto table = policy_table(conditional, under, over, cfg.model);
  const int sat = table.first_saturated_backlog();

  if (debug) {
    for (std::size_t i = 0; i < conditional.size(); ++i) {
      const auto rules = fractile_rule_targets(conditional[i], under, over);
      err << fmt::format("# debug i={} argmin={} rule_F(S-1)>=CF={} rule_F(S)>=CF={}\n", i,
                         table.targets()[i], rules.strict, rules.weak);
    }
  }

  Sink sink(cfg.output_path, out);
  auto& os = sink.stream();
  if (cfg.format == OutputFormat::json) {
    json doc{{"params", params_json(cfg)},
             {"targets", std::vector<int>(table.targets().begin(), table.targets().begin() + sat)},
             {"saturation_backlog", sat},
             {"saturation_value", table.saturation_value()}};
    os << doc.dump(2) << '\n';
    return ok;
  }
  os << echo_block(cfg) << "i,target\n";
  for (int i = 0; i < sat; ++i) os << i << ',' << table.targets()[static_cast<std::size_t>(i)] << '\n';
  os << ">=" << sat << ',' << table.saturation_value() << '\n';
  return ok;
}

CostReport report_for(const RunConfig& cfg) {
  if (cfg.model == ModelKind::continuous) return cost_report(cfg.continuous, BacklogSum{cfg.backlog_cutoff});
  return expected_costs_discrete(cfg.discrete);
}

int cmd_cost(const RunConfig& cfg, std::ostream& out) {
  const auto report = report_for(cfg);
  Sink sink(cfg.output_path, out);
  auto& os = sink.stream();
  if (cfg.format == OutputFormat::json) {
    json doc{{"params", params_json(cfg)},
             {"fixed_target", report.fixed_target},
             {"cost_fixed", report.cost_fixed},
             {"cost_state_dep", report.cost_state_dependent},
             {"savings_pct", report.savings_pct}};
    os << doc.dump(2) << '\n';
    return ok;
  }
  os << echo_block(cfg);
  write_instances_csv(os, {report});
  return ok;
}

std::string summary_path_for(const std::string& path) {
  const auto dot = path.find_last_of('.');
  const auto slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + "_summary.csv";
  return path.substr(0, dot) + "_summary" + path.substr(dot);
}

int cmd_experiment(const RunConfig& cfg, std::ostream& out) {
  const auto reports = run_grid(cfg.grid);
  const auto rows = summarize(reports, default_grouping(cfg.grid.model));
  if (cfg.format == OutputFormat::json) {
    Sink sink(cfg.output_path, out);
    write_experiment_json(sink.stream(), reports, rows);
    return ok;
  }
  {
    Sink sink(cfg.output_path, out);
    write_instances_csv(sink.stream(), reports);
  }
  if (cfg.output_path.empty()) {
    out << '\n';
    write_summary_csv(out, rows);
  } else {
    Sink sink(summary_path_for(cfg.output_path), out);
    write_summary_csv(sink.stream(), rows);
  }
  return ok;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  SimulationControls controls = cfg.simulation;
  CostEstimate est;
  double analytic = 0.0;
  const bool fixed = cfg.simulated_policy == SimulatedPolicy::fixed;
  if (cfg.model == ModelKind::continuous) {
    const auto& p = cfg.continuous;
    if (!cfg.warmup_given) controls.warmup = default_warmup_continuous(p);
    if (fixed) {
      const auto f = expected_cost_fixed(p);
      analytic = f.cost;
      est = simulate_continuous(p, PolicyTable::constant(f.target, ModelKind::continuous), controls);
    } else {
      const auto conditional = conditional_production_pmfs(p);
      const auto table = policy_table(conditional, p.underage(), p.overage(), ModelKind::continuous);
      analytic = expected_cost_state_dependent(p, table, conditional, BacklogSum::closed());
      est = simulate_continuous(p, table, controls);
    }
  } else {
    const auto& p = cfg.discrete;
    if (!cfg.warmup_given) controls.warmup = default_warmup_discrete(p);
    const auto analysis = analyze_discrete(p);
    const auto report = expected_costs_discrete(p, analysis);
    analytic = fixed ? report.cost_fixed : report.cost_state_dependent;
    const auto table = fixed ? PolicyTable::constant(report.fixed_target, ModelKind::discrete) : analysis.table;
    est = simulate_discrete(p, table, controls);
  }
  const double z = est.std_error > 0.0 ? (est.mean - analytic) / est.std_error : 0.0;
  const char* policy = fixed ? "fixed" : "state_dependent";

  Sink sink(cfg.output_path, out);
  auto& os = sink.stream();
  if (cfg.format == OutputFormat::json) {
    json doc{{"params", params_json(cfg)}, {"policy", policy},        {"mean", est.mean},
             {"stderr", est.std_error},    {"horizon", est.horizon},  {"warmup", est.warmup},
             {"seed", est.seed},           {"batches", est.batches},  {"analytic_cost", analytic},
             {"z_score", z},               {"max_order_size", est.max_order_size}};
    os << doc.dump(2) << '\n';
    return ok;
  }
  os << echo_block(cfg);
  os << "policy,mean,stderr,horizon,warmup,seed,batches,analytic_cost,z_score,max_order_size\n";
  os << fmt::format("{},{:.17g},{:.17g},{},{},{},{},{:.17g},{:.6f},{}\n", policy, est.mean, est.std_error,
                    est.horizon, est.warmup, est.seed, est.batches, analytic, z, est.max_order_size);
  return ok;
}

int exit_code_for(std::exception_ptr e, std::ostream& err) {
  try {
    std::rethrow_exception(std::move(e));
  } catch (const GridError& g) {
    err << "error: " << g.what() << '\n';
    try {
      std::rethrow_exception(g.inner());
    } catch (const InvalidParameters&) {
      return config_error;
    } catch (const InvalidInput&) {
      return config_error;
    } catch (const InstabilityError&) {
      return instability;
    } catch (const ConvergenceError&) {
      return convergence;
    } catch (const ResourceError&) {
      return convergence;
    } catch (...) {
      return failure;
    }
  } catch (const InvalidParameters& x) {
    err << "config error: " << x.what() << '\n';
    return config_error;
  } catch (const InvalidInput& x) {
    err << "config error: " << x.what() << '\n';
    return config_error;
  } catch (const InstabilityError& x) {
    err << "unstable model: " << x.what() << '\n';
    return instability;
  } catch (const ConvergenceError& x) {
    err << "convergence error: " << x.what() << '\n';
    return convergence;
  } catch (const ResourceError& x) {
    err << "resource error: " << x.what() << '\n';
    return convergence;
  } catch (const std::exception& x) {
    err << "error: " << x.what() << '\n';
    return failure;
  }
}

}  // namespace

RunConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(fmt::format("config is not valid JSON: {}", e.what()));
  }
  if (!doc.is_object()) throw InvalidInput("config must be a JSON object");

  RunConfig cfg;
  if (doc.contains("model")) cfg.model = parse_model(doc.at("model"));
  cfg.grid = cfg.model == ModelKind::continuous ? continuous_reference_grid() : discrete_reference_grid();
  if (doc.contains("continuous")) parse_continuous(doc.at("continuous"), cfg);
  if (doc.contains("discrete")) parse_discrete(doc.at("discrete"), cfg);
  if (doc.contains("experiment")) parse_experiment(doc.at("experiment"), cfg);
  if (doc.contains("simulation")) parse_simulation(doc.at("simulation"), cfg);
  if (doc.contains("output")) {
    const auto& o = doc.at("output");
    if (!o.is_object()) field_error("output", "expected an object");
    if (o.contains("path")) {
      if (!o.at("path").is_string()) field_error("output.path", "expected a string");
      cfg.output_path = o.at("path").get<std::string>();
    }
    if (o.contains("format")) {
      if (!o.at("format").is_string()) field_error("output.format", "expected a string");
      cfg.format = parse_format(o.at("format").get<std::string>());
    }
  }
  if (cfg.model == ModelKind::continuous)
    cfg.continuous.validate();
  else
    cfg.discrete.validate();
  return cfg;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"State-dependent base-stock policies for a two-module assemble-to-order system", "atosync"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_path;
  std::optional<std::string> format;
  std::optional<std::uint64_t> seed;
  bool debug = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config document");
    sub->add_option("--out", out_path, "Output file (default: standard output)");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };
  auto* policy = app.add_subcommand("policy", "Target inventory position per backlog level");
  add_common(policy);
  policy->add_flag("--debug", debug, "Print both fractile-rule readings next to the cost argmin");
  auto* cost = app.add_subcommand("cost", "Expected cost of the fixed and state-dependent policies");
  add_common(cost);
  auto* experiment = app.add_subcommand("experiment", "Full-factorial experiment with grouped summary");
  add_common(experiment);
  auto* simulate = app.add_subcommand("simulate", "Simulated long-run average cost of one policy");
  add_common(simulate);
  simulate->add_option("--seed", seed, "RNG seed");

  std::vector<const char*> argv{"atosync"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return config_error;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path, std::ios::binary);
      if (!in) throw InvalidInput(fmt::format("cannot read config file '{}'", config_path));
      std::stringstream buf;
      buf << in.rdbuf();
      cfg = parse_config(buf.str());
    }
    if (out_path) cfg.output_path = *out_path;
    if (format) cfg.format = parse_format(*format);
    if (seed) cfg.simulation.seed = *seed;

    if (policy->parsed()) return cmd_policy(cfg, debug, out, err);
    if (cost->parsed()) return cmd_cost(cfg, out);
    if (experiment->parsed()) return cmd_experiment(cfg, out);
    return cmd_simulate(cfg, out);
  } catch (...) {
    return exit_code_for(std::current_exception(), err);
  }
}

}  // namespace atosync::cli
