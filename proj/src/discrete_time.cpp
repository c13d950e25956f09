#include "atosync/discrete_time.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace atosync {

namespace {

constexpr std::size_t kMaxGridCells = 50'000'000;

double max_abs_diff(const ProductionPmf& a, const ProductionPmf& b) {
  const int n = std::max(a.max_value(), b.max_value());
  double d = 0.0;
  for (int j = 0; j <= n; ++j) d = std::max(d, std::abs(a[j] - b[j]));
  return d;
}

}  // namespace

IntPmf IntPmf::from_pairs(const std::vector<std::pair<int, double>>& pairs) {
  if (pairs.empty()) throw InvalidInput("pmf has no entries");
  int max_v = 0;
  double total = 0.0;
  for (const auto& [v, p] : pairs) {
    if (v < 0) throw InvalidInput("pmf values must be >= 0, got " + std::to_string(v));
    if (!(std::isfinite(p) && p >= 0.0)) throw InvalidInput("pmf probabilities must be >= 0");
    max_v = std::max(max_v, v);
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw InvalidInput("pmf probabilities sum to " + std::to_string(total) + ", expected 1");
  std::vector<double> dense(static_cast<std::size_t>(max_v) + 1, 0.0);
  for (const auto& [v, p] : pairs) dense[static_cast<std::size_t>(v)] += p / total;
  return from_dense(std::move(dense));
}

IntPmf IntPmf::point_mass(int value) {
  if (value < 0) throw InvalidInput("pmf values must be >= 0");
  std::vector<double> dense(static_cast<std::size_t>(value) + 1, 0.0);
  dense.back() = 1.0;
  return IntPmf(std::move(dense));
}

IntPmf IntPmf::from_dense(std::vector<double> probs) {
  while (probs.size() > 1 && probs.back() == 0.0) probs.pop_back();
  if (probs.empty()) throw InvalidInput("pmf has no entries");
  return IntPmf(std::move(probs));
}

double IntPmf::operator[](int v) const {
  if (v < 0 || v > max_value()) return 0.0;
  return probs_[static_cast<std::size_t>(v)];
}

double IntPmf::mean() const {
  double m = 0.0;
  for (std::size_t v = 0; v < probs_.size(); ++v) m += static_cast<double>(v) * probs_[v];
  return m;
}

std::vector<std::pair<int, double>> IntPmf::support() const {
  std::vector<std::pair<int, double>> out;
  for (std::size_t v = 0; v < probs_.size(); ++v)
    if (probs_[v] > 0.0) out.emplace_back(static_cast<int>(v), probs_[v]);
  return out;
}

void DiscreteParams::validate() const {
  if (lead_periods < 0) throw InvalidParameters("lead_periods must be >= 0");
  for (double c : {h1, h2, b})
    if (!(std::isfinite(c) && c >= 0.0)) throw InvalidParameters("cost rates h1, h2, b must be >= 0");
  if (!(h2 > 0.0 || b + h1 > 0.0))
    throw InvalidParameters("critical fractile undefined: h2 and b + h1 are both zero");
  if (!(stabilization_tol > 0.0)) throw InvalidParameters("stabilization_tol must be > 0");
  if (max_periods <= 0) throw InvalidParameters("max_periods must be > 0");
}

DiscreteParams reference_case(int which) {
  DiscreteParams p;
  p.case_label = which;
  if (which == 1) {
    p.demand = IntPmf::from_pairs({{1, 0.4}, {2, 0.4}, {3, 0.2}});
    p.capacity = IntPmf::from_pairs({{2, 0.7}, {3, 0.3}});
  } else if (which == 2) {
    p.demand = IntPmf::from_pairs({{0, 0.1}, {1, 0.2}, {2, 0.2}, {3, 0.25}, {4, 0.15}, {5, 0.1}});
    p.capacity = IntPmf::from_pairs({{2, 0.2}, {3, 0.45}, {4, 0.35}});
  } else {
    throw InvalidParameters("reference cases are 1 and 2, got " + std::to_string(which));
  }
  return p;
}

InstanceDescriptor describe(const DiscreteParams& params) {
  InstanceDescriptor d;
  d.model = ModelKind::discrete;
  d.demand_case = params.case_label;
  d.lead_time = params.lead_periods;
  d.h1 = params.h1;
  d.h2 = params.h2;
  d.b = params.b;
  return d;
}

PeriodOutcome period_transition(int backlog, int demand, int capacity) {
  const int work = backlog + demand;
  return {std::max(work - capacity, 0), std::min(work, capacity)};
}

ProductionPmf production_pmf_discrete(int i0, const DiscreteParams& params) {
  params.validate();
  if (i0 < 0) throw InvalidParameters("backlog must be >= 0");
  const int periods = params.lead_periods;
  const auto demand = params.demand.support();
  const auto capacity = params.capacity.support();

  const int max_backlog = i0 + periods * params.demand.max_value();
  const int max_produced = std::min(max_backlog, periods * params.capacity.max_value());
  const auto rows = static_cast<std::size_t>(max_backlog) + 1;
  const auto cols = static_cast<std::size_t>(max_produced) + 1;
  if (rows * cols > kMaxGridCells)
    throw ResourceError("discrete production grid too large: " + std::to_string(rows * cols) + " states");

  std::vector<double> cur(rows * cols, 0.0);
  std::vector<double> next(rows * cols, 0.0);
  cur[static_cast<std::size_t>(i0) * cols] = 1.0;
  for (int t = 0; t < periods; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        const double w = cur[i * cols + j];
        if (w == 0.0) continue;
        for (const auto& [d, pd] : demand) {
          for (const auto& [c, pc] : capacity) {
            const auto out = period_transition(static_cast<int>(i), d, c);
            next[static_cast<std::size_t>(out.next_backlog) * cols + j + static_cast<std::size_t>(out.produced)] +=
                w * pd * pc;
          }
        }
      }
    }
    std::swap(cur, next);
  }
  std::vector<double> marginal(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) marginal[j] += cur[i * cols + j];
  while (marginal.size() > 1 && marginal.back() == 0.0) marginal.pop_back();
  return ProductionPmf(std::move(marginal), i0);
}

IntPmf backlog_distribution(const DiscreteParams& params) {
  params.validate();
  if (!(params.demand.mean() < params.capacity.mean()))
    throw InstabilityError("stationary backlog requires E[D] < E[C]");
  const auto demand = params.demand.support();
  const auto capacity = params.capacity.support();
  const auto grow = static_cast<std::size_t>(params.demand.max_value());

  std::vector<double> pi{1.0};
  std::vector<double> next;
  for (long n = 0; n < params.max_periods; ++n) {
    next.assign(pi.size() + grow, 0.0);
    for (std::size_t i = 0; i < pi.size(); ++i) {
      if (pi[i] == 0.0) continue;
      for (const auto& [d, pd] : demand)
        for (const auto& [c, pc] : capacity)
          next[static_cast<std::size_t>(period_transition(static_cast<int>(i), d, c).next_backlog)] +=
              pi[i] * pd * pc;
    }
    // Geometric tail underflows; keep the support finite.
    while (next.size() > 1 && next.back() < 1e-300) next.pop_back();

    double tv = 0.0;
    for (std::size_t i = 0; i < std::max(pi.size(), next.size()); ++i) {
      const double a = i < pi.size() ? pi[i] : 0.0;
      const double b = i < next.size() ? next[i] : 0.0;
      tv += std::abs(a - b);
    }
    pi.swap(next);
    if (0.5 * tv < params.stabilization_tol) {
      const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
      for (double& x : pi) x /= total;
      return IntPmf::from_dense(std::move(pi));
    }
  }
  throw ConvergenceError("backlog distribution did not stabilize within " + std::to_string(params.max_periods) +
                         " periods");
}

std::vector<ProductionPmf> conditional_production_pmfs_discrete(const DiscreteParams& params, Execution exec) {
  params.validate();
  // From this backlog on, every period runs at full capacity.
  const int guaranteed = params.lead_periods * params.capacity.max_value();
  std::vector<ProductionPmf> pmfs(static_cast<std::size_t>(guaranteed) + 1);
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i <= guaranteed; ++i) pmfs[static_cast<std::size_t>(i)] = production_pmf_discrete(i, params);
  } else {
    for (int i = 0; i <= guaranteed; ++i) pmfs[static_cast<std::size_t>(i)] = production_pmf_discrete(i, params);
  }
  std::size_t sat = 0;
  while (sat < pmfs.size() - 1 && max_abs_diff(pmfs[sat], pmfs.back()) > 1e-12) ++sat;
  pmfs.resize(sat + 1);
  return pmfs;
}

PolicyTable policy_table_discrete(const DiscreteParams& params, Execution exec) {
  return policy_table(conditional_production_pmfs_discrete(params, exec), params.underage(), params.overage(),
                      ModelKind::discrete);
}

DiscreteAnalysis analyze_discrete(const DiscreteParams& params, Execution exec) {
  auto backlog = backlog_distribution(params);
  auto conditional = conditional_production_pmfs_discrete(params, exec);
  auto table = policy_table(conditional, params.underage(), params.overage(), ModelKind::discrete);

  const int sat = static_cast<int>(conditional.size()) - 1;
  std::vector<double> mix;
  for (int i = 0; i <= backlog.max_value(); ++i) {
    const auto& pmf = conditional[static_cast<std::size_t>(std::min(i, sat))];
    if (static_cast<int>(mix.size()) <= pmf.max_value()) mix.resize(pmf.size(), 0.0);
    for (int j = 0; j <= pmf.max_value(); ++j) mix[static_cast<std::size_t>(j)] += backlog[i] * pmf[j];
  }
  return {std::move(backlog), std::move(conditional), std::move(table), ProductionPmf(std::move(mix), 0)};
}

CostReport expected_costs_discrete(const DiscreteParams& params, const DiscreteAnalysis& analysis) {
  const int sat = static_cast<int>(analysis.conditional.size()) - 1;
  double state_dependent = 0.0;
  for (int i = 0; i <= analysis.backlog.max_value(); ++i) {
    const auto& pmf = analysis.conditional[static_cast<std::size_t>(std::min(i, sat))];
    state_dependent +=
        analysis.backlog[i] * newsvendor_cost(pmf, analysis.table.target(i), params.underage(), params.overage());
  }
  CostReport report;
  report.instance = describe(params);
  report.fixed_target = newsvendor_target(analysis.unconditional, params.underage(), params.overage());
  report.cost_fixed =
      newsvendor_cost(analysis.unconditional, report.fixed_target, params.underage(), params.overage());
  report.cost_state_dependent = state_dependent;
  report.savings_pct = savings_percent(report.cost_fixed, report.cost_state_dependent);
  return report;
}

CostReport expected_costs_discrete(const DiscreteParams& params, Execution exec) {
  return expected_costs_discrete(params, analyze_discrete(params, exec));
}

}  // namespace atosync
