#include "atosync/experiments.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>

#include "json.hpp"

namespace atosync {

namespace {

std::string fmt_value(double v) { return fmt::format("{}", v); }

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_value(*v) : std::string(); }

// Grouping value of one report for a parameter name.
std::optional<std::string> key_of(const CostReport& r, const std::string& param) {
  const auto& d = r.instance;
  if (param == "lambda") return d.lambda ? std::optional(fmt_value(*d.lambda)) : std::nullopt;
  if (param == "mu") return d.mu ? std::optional(fmt_value(*d.mu)) : std::nullopt;
  if (param == "case")
    return d.demand_case ? std::optional(std::to_string(*d.demand_case)) : std::nullopt;
  if (param == "L") return fmt_value(d.lead_time);
  if (param == "h1") return fmt_value(d.h1);
  if (param == "h2") return fmt_value(d.h2);
  if (param == "b") return fmt_value(d.b);
  throw InvalidInput("unknown grouping parameter '" + param + "'");
}

double numeric_key(const std::string& s) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    return 0.0;
  }
}

SummaryRow aggregate(std::string parameter, std::string value, const std::vector<const CostReport*>& group) {
  SummaryRow row{std::move(parameter), std::move(value), group.size()};
  row.max_saving_pct = -std::numeric_limits<double>::infinity();
  row.min_saving_pct = std::numeric_limits<double>::infinity();
  for (const auto* r : group) {
    row.avg_cost_fixed += r->cost_fixed;
    row.avg_cost_state_dep += r->cost_state_dependent;
    row.avg_saving_pct += r->savings_pct;
    row.max_saving_pct = std::max(row.max_saving_pct, r->savings_pct);
    row.min_saving_pct = std::min(row.min_saving_pct, r->savings_pct);
  }
  const auto n = static_cast<double>(group.size());
  row.avg_cost_fixed /= n;
  row.avg_cost_state_dep /= n;
  row.avg_saving_pct /= n;
  return row;
}

template <typename Params>
std::vector<CostReport> evaluate_all(const std::vector<Params>& instances,
                                     const std::function<CostReport(const Params&, Execution)>& evaluate,
                                     Execution exec) {
  std::vector<CostReport> reports(instances.size());
  std::vector<std::exception_ptr> errors(instances.size());
  const auto n = static_cast<long>(instances.size());
  if (exec == Execution::parallel) {
    // Instances run concurrently; each one computes serially inside.
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
      try {
        reports[static_cast<std::size_t>(i)] = evaluate(instances[static_cast<std::size_t>(i)], Execution::serial);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  } else {
    for (long i = 0; i < n; ++i) {
      try {
        reports[static_cast<std::size_t>(i)] = evaluate(instances[static_cast<std::size_t>(i)], Execution::serial);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
        break;
      }
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    std::string cause = "unknown error";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      cause = e.what();
    } catch (...) {
    }
    throw GridError(describe_instance(describe(instances[i])), cause, errors[i]);
  }
  return reports;
}

}  // namespace

std::size_t ExperimentGrid::size() const {
  const std::size_t outer = model == ModelKind::continuous ? lambdas.size() : cases.size();
  return outer * lead_times.size() * h1s.size() * bs.size();
}

ExperimentGrid continuous_reference_grid() {
  ExperimentGrid g;
  g.model = ModelKind::continuous;
  g.lambdas = {0.8, 0.9};
  g.lead_times = {2, 3, 4};
  g.h1s = {1, 2, 4};
  g.bs = {1, 5, 10};
  g.backlog_sum = BacklogSum::truncated(20);
  return g;
}

ExperimentGrid discrete_reference_grid() {
  ExperimentGrid g;
  g.model = ModelKind::discrete;
  for (int c : {1, 2}) {
    const auto p = reference_case(c);
    g.cases[c] = {p.demand, p.capacity};
  }
  g.lead_times = {2, 3, 4};
  g.h1s = {1, 2, 4};
  g.bs = {1, 5, 10};
  return g;
}

std::vector<ContinuousParams> continuous_instances(const ExperimentGrid& grid) {
  std::vector<ContinuousParams> out;
  for (double lambda : grid.lambdas)
    for (double L : grid.lead_times)
      for (double h1 : grid.h1s)
        for (double b : grid.bs) {
          ContinuousParams p;
          p.lambda = lambda;
          p.mu = grid.mu;
          p.lead_time = L;
          p.h1 = h1;
          p.h2 = grid.h2;
          p.b = b;
          p.epsilon = grid.epsilon;
          out.push_back(p);
        }
  return out;
}

std::vector<DiscreteParams> discrete_instances(const ExperimentGrid& grid) {
  std::vector<DiscreteParams> out;
  for (const auto& [label, dc] : grid.cases)
    for (double L : grid.lead_times)
      for (double h1 : grid.h1s)
        for (double b : grid.bs) {
          DiscreteParams p;
          p.demand = dc.demand;
          p.capacity = dc.capacity;
          p.case_label = label;
          if (L < 0 || L != std::floor(L)) throw InvalidParameters("discrete lead times must be whole periods");
          p.lead_periods = static_cast<int>(L);
          p.h1 = h1;
          p.h2 = grid.h2;
          p.b = b;
          p.stabilization_tol = grid.stabilization_tol;
          out.push_back(p);
        }
  return out;
}

GridError::GridError(const std::string& instance, const std::string& cause, std::exception_ptr inner)
    : std::runtime_error("instance " + instance + ": " + cause), inner_(std::move(inner)) {}

std::string describe_instance(const InstanceDescriptor& d) {
  std::string s = fmt::format("model={}", to_string(d.model));
  if (d.demand_case) s += fmt::format(" case={}", *d.demand_case);
  if (d.lambda) s += fmt::format(" lambda={}", *d.lambda);
  if (d.mu) s += fmt::format(" mu={}", *d.mu);
  s += fmt::format(" L={} h1={} h2={} b={}", d.lead_time, d.h1, d.h2, d.b);
  return s;
}

std::vector<CostReport> run_grid(const ExperimentGrid& grid, Execution exec) {
  if (grid.size() == 0) throw InvalidInput("experiment grid is empty");
  if (grid.model == ModelKind::continuous) {
    const std::function<CostReport(const ContinuousParams&, Execution)> eval =
        [&](const ContinuousParams& p, Execution inner) { return cost_report(p, grid.backlog_sum, inner); };
    return evaluate_all(continuous_instances(grid), eval, exec);
  }
  const std::function<CostReport(const DiscreteParams&, Execution)> eval =
      [](const DiscreteParams& p, Execution inner) { return expected_costs_discrete(p, inner); };
  return evaluate_all(discrete_instances(grid), eval, exec);
}

std::vector<std::string> default_grouping(ModelKind model) {
  if (model == ModelKind::continuous) return {"lambda", "L", "h1", "b"};
  return {"case", "L", "h1", "b"};
}

std::vector<SummaryRow> summarize(const std::vector<CostReport>& reports, const std::vector<std::string>& grouping) {
  if (reports.empty()) throw InvalidInput("no reports to summarize");
  std::vector<SummaryRow> rows;
  for (const auto& param : grouping) {
    std::vector<std::string> values;
    for (const auto& r : reports)
      if (auto k = key_of(r, param); k && std::find(values.begin(), values.end(), *k) == values.end())
        values.push_back(*k);
    std::sort(values.begin(), values.end(),
              [](const std::string& a, const std::string& b) { return numeric_key(a) < numeric_key(b); });
    for (const auto& v : values) {
      std::vector<const CostReport*> group;
      for (const auto& r : reports)
        if (key_of(r, param) == v) group.push_back(&r);
      rows.push_back(aggregate(param, v, group));
    }
  }
  std::vector<const CostReport*> all;
  for (const auto& r : reports) all.push_back(&r);
  rows.push_back(aggregate("All", "", all));
  return rows;
}

void write_instances_csv(std::ostream& os, const std::vector<CostReport>& reports) {
  os << "model,case,lambda,mu,L,h1,h2,b,fixed_target,cost_fixed,cost_state_dep,savings_pct\n";
  for (const auto& r : reports) {
    const auto& d = r.instance;
    os << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", to_string(d.model),
                      d.demand_case ? std::to_string(*d.demand_case) : std::string(), fmt_opt(d.lambda),
                      fmt_opt(d.mu), d.lead_time, d.h1, d.h2, d.b, r.fixed_target, r.cost_fixed,
                      r.cost_state_dependent, r.savings_pct);
  }
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "parameter,value,instances,avg_cost_fixed,avg_cost_state_dep,avg_saving_pct,max_saving_pct,min_saving_pct\n";
  for (const auto& r : rows)
    os << fmt::format("{},{},{},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f}\n", r.parameter, r.value, r.instances,
                      r.avg_cost_fixed, r.avg_cost_state_dep, r.avg_saving_pct, r.max_saving_pct,
                      r.min_saving_pct);
}

void write_experiment_json(std::ostream& os, const std::vector<CostReport>& reports,
                           const std::vector<SummaryRow>& rows) {
  using nlohmann::json;
  json doc;
  doc["instances"] = json::array();
  for (const auto& r : reports) {
    const auto& d = r.instance;
    json j;
    j["model"] = to_string(d.model);
    j["case"] = d.demand_case ? json(*d.demand_case) : json(nullptr);
    j["lambda"] = d.lambda ? json(*d.lambda) : json(nullptr);
    j["mu"] = d.mu ? json(*d.mu) : json(nullptr);
    j["L"] = d.lead_time;
    j["h1"] = d.h1;
    j["h2"] = d.h2;
    j["b"] = d.b;
    j["fixed_target"] = r.fixed_target;
    j["cost_fixed"] = r.cost_fixed;
    j["cost_state_dep"] = r.cost_state_dependent;
    j["savings_pct"] = r.savings_pct;
    doc["instances"].push_back(std::move(j));
  }
  doc["summary"] = json::array();
  for (const auto& r : rows) {
    doc["summary"].push_back({{"parameter", r.parameter},
                              {"value", r.value},
                              {"instances", r.instances},
                              {"avg_cost_fixed", r.avg_cost_fixed},
                              {"avg_cost_state_dep", r.avg_cost_state_dep},
                              {"avg_saving_pct", r.avg_saving_pct},
                              {"max_saving_pct", r.max_saving_pct},
                              {"min_saving_pct", r.min_saving_pct}});
  }
  os << doc.dump(2) << '\n';
}

}  // namespace atosync
