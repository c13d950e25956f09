#pragma once

// Periodic-review variant: per-period demand D and production capacity C are
// independent finite pmfs, and the backlog evolves as i -> (i + D - C)^+ with
// min(i + D, C) units produced.

#include <optional>
#include <utility>
#include <vector>

#include "atosync/policy.hpp"

namespace atosync {

// Finite pmf over non-negative integers, stored densely by value.
class IntPmf {
 public:
  IntPmf() = default;
  // Probabilities must sum to 1 within 1e-9 (they are then renormalized);
  // repeated values accumulate.
  static IntPmf from_pairs(const std::vector<std::pair<int, double>>& pairs);
  static IntPmf point_mass(int value);
  static IntPmf from_dense(std::vector<double> probs);

  [[nodiscard]] double operator[](int v) const;
  [[nodiscard]] int max_value() const { return static_cast<int>(probs_.size()) - 1; }
  [[nodiscard]] double mean() const;
  [[nodiscard]] const std::vector<double>& probs() const { return probs_; }
  // (value, probability) for the values with positive mass.
  [[nodiscard]] std::vector<std::pair<int, double>> support() const;

 private:
  explicit IntPmf(std::vector<double> probs) : probs_(std::move(probs)) {}
  std::vector<double> probs_{1.0};
};

struct DiscreteParams {
  IntPmf demand;
  IntPmf capacity;
  int lead_periods = 2;
  double h1 = 4.0;
  double h2 = 1.0;
  double b = 5.0;
  double stabilization_tol = 1e-10;
  long max_periods = 1'000'000;
  std::optional<int> case_label;  // reporting only

  void validate() const;
  [[nodiscard]] double underage() const { return b + h1; }
  [[nodiscard]] double overage() const { return h2; }
};

// The two demand/capacity cases of the reference experiment.
DiscreteParams reference_case(int which);

InstanceDescriptor describe(const DiscreteParams& params);

struct PeriodOutcome {
  int next_backlog;
  int produced;
};

PeriodOutcome period_transition(int backlog, int demand, int capacity);

// Production over lead_periods periods, starting with backlog i0.
ProductionPmf production_pmf_discrete(int i0, const DiscreteParams& params);

// Stationary backlog (end of period), obtained by iterating from an empty
// system until successive distributions differ by < stabilization_tol in
// total variation.
IntPmf backlog_distribution(const DiscreteParams& params);

// Conditional production pmfs for i0 = 0..i_sat, where i_sat is the first
// backlog whose pmf equals the guaranteed-saturated one (backlog
// lead_periods * max capacity) within 1e-12.
std::vector<ProductionPmf> conditional_production_pmfs_discrete(const DiscreteParams& params,
                                                                Execution exec = Execution::parallel);

PolicyTable policy_table_discrete(const DiscreteParams& params, Execution exec = Execution::parallel);

// Everything needed to price both policies, computed once.
struct DiscreteAnalysis {
  IntPmf backlog;
  std::vector<ProductionPmf> conditional;
  PolicyTable table;
  ProductionPmf unconditional;  // backlog-weighted mixture of the conditional pmfs
};

DiscreteAnalysis analyze_discrete(const DiscreteParams& params, Execution exec = Execution::parallel);

CostReport expected_costs_discrete(const DiscreteParams& params, Execution exec = Execution::parallel);
CostReport expected_costs_discrete(const DiscreteParams& params, const DiscreteAnalysis& analysis);

}  // namespace atosync
