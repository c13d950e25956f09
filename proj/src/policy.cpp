#include "atosync/policy.hpp"

#include <algorithm>
#include <cmath>

namespace atosync {

namespace {

void check_costs(double underage, double overage) {
  if (!(underage >= 0.0) || !(overage >= 0.0) || !(underage + overage > 0.0))
    throw InvalidParameters("newsvendor costs must be >= 0 with a positive sum");
}

void check_stable(const ContinuousParams& params) {
  if (!(params.rho() < 1.0)) throw InstabilityError("stationary costs require lambda < mu (rho < 1)");
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::continuous ? "continuous" : "discrete";
}

PolicyTable::PolicyTable(std::vector<int> targets, ModelKind model)
    : targets_(std::move(targets)), model_(model) {
  if (targets_.empty()) throw InvalidInput("policy table needs at least one target");
  if (std::any_of(targets_.begin(), targets_.end(), [](int t) { return t < 0; }))
    throw InvalidInput("policy targets must be >= 0");
}

PolicyTable PolicyTable::constant(int target, ModelKind model) { return PolicyTable({target}, model); }

int PolicyTable::target(int backlog) const {
  if (backlog < 0) throw InvalidInput("backlog must be >= 0");
  return targets_[static_cast<std::size_t>(std::min(backlog, saturation_index()))];
}

int PolicyTable::first_saturated_backlog() const {
  int i = saturation_index();
  while (i > 0 && targets_[static_cast<std::size_t>(i - 1)] == saturation_value()) --i;
  return i;
}

bool PolicyTable::is_well_defined() const {
  for (std::size_t i = 1; i < targets_.size(); ++i) {
    const int step = targets_[i] - targets_[i - 1];
    if (step < 0 || step > 1) return false;
  }
  return true;
}

InstanceDescriptor describe(const ContinuousParams& params) {
  InstanceDescriptor d;
  d.model = ModelKind::continuous;
  d.lambda = params.lambda;
  d.mu = params.mu;
  d.lead_time = params.lead_time;
  d.h1 = params.h1;
  d.h2 = params.h2;
  d.b = params.b;
  return d;
}

double savings_percent(double cost_fixed, double cost_state_dependent) {
  if (cost_fixed == 0.0) return 0.0;
  return 100.0 * (cost_fixed - cost_state_dependent) / cost_fixed;
}

double newsvendor_cost(const ProductionPmf& pmf, int target, double underage, double overage) {
  double cost = 0.0;
  const auto p = pmf.probs();
  for (std::size_t j = 0; j < p.size(); ++j) {
    const int diff = static_cast<int>(j) - target;
    cost += p[j] * (diff > 0 ? underage * diff : overage * static_cast<double>(-diff));
  }
  return cost;
}

int newsvendor_target(const ProductionPmf& pmf, double underage, double overage) {
  check_costs(underage, overage);
  if (pmf.size() == 0) throw InvalidInput("empty production pmf");
  // The cost is convex in S and flat beyond the support, so 0..max_value()
  // contains a minimizer. A relative margin absorbs rounding noise when two
  // levels tie exactly.
  int best = 0;
  double best_cost = newsvendor_cost(pmf, 0, underage, overage);
  for (int s = 1; s <= pmf.max_value(); ++s) {
    const double c = newsvendor_cost(pmf, s, underage, overage);
    if (c < best_cost - 1e-12 * std::max(1.0, best_cost)) {
      best = s;
      best_cost = c;
    }
  }
  return best;
}

FractileRuleTargets fractile_rule_targets(const ProductionPmf& pmf, double underage, double overage) {
  check_costs(underage, overage);
  const double cf = underage / (underage + overage);
  FractileRuleTargets out{pmf.max_value() + 1, pmf.max_value()};
  bool strict_found = false;
  bool weak_found = false;
  double cum = 0.0;
  for (int s = 0; s <= pmf.max_value() + 1; ++s) {
    // cum == F(s - 1) here
    if (!strict_found && cum >= cf) {
      out.strict = s;
      strict_found = true;
    }
    cum += pmf[s];
    if (!weak_found && cum >= cf) {
      out.weak = s;
      weak_found = true;
    }
  }
  return out;
}

PolicyTable policy_table(const std::vector<ProductionPmf>& conditional, double underage, double overage,
                         ModelKind model) {
  if (conditional.empty()) throw InvalidInput("no conditional production pmfs");
  std::vector<int> targets;
  targets.reserve(conditional.size());
  for (const auto& pmf : conditional) targets.push_back(newsvendor_target(pmf, underage, overage));
  return PolicyTable(std::move(targets), model);
}

PolicyTable policy_table(const ContinuousParams& params, Execution exec) {
  return policy_table(conditional_production_pmfs(params, exec), params.underage(), params.overage(),
                      ModelKind::continuous);
}

double expected_cost_state_dependent(const ContinuousParams& params, const PolicyTable& table,
                                     const std::vector<ProductionPmf>& conditional, BacklogSum sum) {
  params.validate();
  check_stable(params);
  if (conditional.empty()) throw InvalidInput("no conditional production pmfs");
  const double rho = params.rho();
  const int sat = static_cast<int>(conditional.size()) - 1;
  auto state_cost = [&](int i) {
    const auto& pmf = conditional[static_cast<std::size_t>(std::min(i, sat))];
    return newsvendor_cost(pmf, table.target(i), params.underage(), params.overage());
  };

  double total = 0.0;
  double weight = 1.0 - rho;
  if (sum.last_backlog) {
    if (*sum.last_backlog < 0) throw InvalidParameters("last_backlog must be >= 0");
    for (int i = 0; i <= *sum.last_backlog; ++i, weight *= rho) total += weight * state_cost(i);
    return total;
  }
  // Both the pmf and the target are constant from the saturation point on,
  // so sum_{i >= last} (1 - rho) rho^i collapses to rho^last.
  const int last = std::max(sat, table.saturation_index());
  for (int i = 0; i < last; ++i, weight *= rho) total += weight * state_cost(i);
  total += std::pow(rho, last) * state_cost(last);
  return total;
}

double expected_cost_state_dependent(const ContinuousParams& params, const PolicyTable& table, BacklogSum sum) {
  return expected_cost_state_dependent(params, table, conditional_production_pmfs(params), sum);
}

FixedPolicyCost expected_cost_fixed(const ContinuousParams& params) {
  params.validate();
  // Same truncation depth as the conditional mixtures, so both policies are
  // priced against the same output distribution.
  const double tail = std::min(params.epsilon, kNegligiblePoissonTail);
  const ProductionPmf pmf(truncated_poisson(params.lambda * params.lead_time, tail), 0);
  const int target = newsvendor_target(pmf, params.underage(), params.overage());
  return {target, newsvendor_cost(pmf, target, params.underage(), params.overage())};
}

CostReport cost_report(const ContinuousParams& params, BacklogSum sum, Execution exec) {
  params.validate();
  check_stable(params);
  const auto conditional = conditional_production_pmfs(params, exec);
  const auto table = policy_table(conditional, params.underage(), params.overage(), ModelKind::continuous);
  const auto fixed = expected_cost_fixed(params);

  CostReport report;
  report.instance = describe(params);
  report.fixed_target = fixed.target;
  report.cost_fixed = fixed.cost;
  report.cost_state_dependent = expected_cost_state_dependent(params, table, conditional, sum);
  report.savings_pct = savings_percent(report.cost_fixed, report.cost_state_dependent);
  return report;
}

}  // namespace atosync
