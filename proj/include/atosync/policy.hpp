#pragma once

// State-dependent base-stock policy for the lead-time module m2 and the
// expected-cost evaluation of that policy against a fixed base-stock level.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "atosync/markov_core.hpp"

namespace atosync {

enum class ModelKind { continuous, discrete };

std::string_view to_string(ModelKind kind);

// Target inventory position of m2 as a function of the m1 backlog.
// targets()[i] is the target for backlog i, for i = 0..saturation_index();
// every larger backlog uses saturation_value().
class PolicyTable {
 public:
  PolicyTable(std::vector<int> targets, ModelKind model);

  // A table that ignores the backlog: the fixed base-stock policy.
  static PolicyTable constant(int target, ModelKind model);

  [[nodiscard]] int target(int backlog) const;
  [[nodiscard]] const std::vector<int>& targets() const { return targets_; }
  [[nodiscard]] int saturation_index() const { return static_cast<int>(targets_.size()) - 1; }
  [[nodiscard]] int saturation_value() const { return targets_.back(); }
  [[nodiscard]] ModelKind model() const { return model_; }

  // Smallest backlog from which the target stays at saturation_value().
  [[nodiscard]] int first_saturated_backlog() const;

  // Non-decreasing with increments in {0, 1}.
  [[nodiscard]] bool is_well_defined() const;

 private:
  std::vector<int> targets_;
  ModelKind model_;
};

// Identifies one evaluated instance. Continuous instances carry lambda/mu,
// discrete ones a demand/capacity case label.
struct InstanceDescriptor {
  ModelKind model = ModelKind::continuous;
  std::optional<int> demand_case;
  std::optional<double> lambda;
  std::optional<double> mu;
  double lead_time = 0.0;
  double h1 = 0.0;
  double h2 = 0.0;
  double b = 0.0;
};

InstanceDescriptor describe(const ContinuousParams& params);

struct CostReport {
  InstanceDescriptor instance;
  int fixed_target = 0;
  double cost_fixed = 0.0;
  double cost_state_dependent = 0.0;
  double savings_pct = 0.0;
};

// 100 (fixed - state_dependent) / fixed, and 0 when both costs are zero.
double savings_percent(double cost_fixed, double cost_state_dependent);

// Expected newsvendor cost sum_j pmf(j) (underage (j - S)^+ + overage (S - j)^+).
double newsvendor_cost(const ProductionPmf& pmf, int target, double underage, double overage);

// Smallest S >= 0 minimizing newsvendor_cost. Solved by scanning the cost,
// not by a fractile threshold.
int newsvendor_target(const ProductionPmf& pmf, double underage, double overage);

// The two readings of the fractile rule "P(prod < S) >= CF": smallest S with
// F(S - 1) >= CF and smallest S with F(S) >= CF. Diagnostic only.
struct FractileRuleTargets {
  int strict;  // F(S - 1) >= CF
  int weak;    // F(S) >= CF
};
FractileRuleTargets fractile_rule_targets(const ProductionPmf& pmf, double underage, double overage);

// How the stationary weights (1 - rho) rho^i are summed over backlogs.
struct BacklogSum {
  // nullopt: exact, with the geometric remainder beyond the saturation
  // index collapsed into one closed-form term. Otherwise: the plain sum over
  // i = 0..last_backlog, with the remaining mass dropped.
  std::optional<int> last_backlog;

  static BacklogSum closed() { return {}; }
  static BacklogSum truncated(int last) { return {last}; }
};

// Continuous-model policy table: T(i) = newsvendor target of the production
// pmf conditional on backlog i.
PolicyTable policy_table(const ContinuousParams& params, Execution exec = Execution::parallel);
PolicyTable policy_table(const std::vector<ProductionPmf>& conditional, double underage, double overage,
                         ModelKind model);

double expected_cost_state_dependent(const ContinuousParams& params, const PolicyTable& table,
                                     BacklogSum sum = BacklogSum::closed());
double expected_cost_state_dependent(const ContinuousParams& params, const PolicyTable& table,
                                     const std::vector<ProductionPmf>& conditional, BacklogSum sum);

struct FixedPolicyCost {
  int target;
  double cost;
};

// Fixed base-stock level against the unconditional Poisson(lambda L) output
// of the stationary queue, truncated where its tail is below
// min(epsilon, kNegligiblePoissonTail).
FixedPolicyCost expected_cost_fixed(const ContinuousParams& params);

CostReport cost_report(const ContinuousParams& params, BacklogSum sum = BacklogSum::closed(),
                       Execution exec = Execution::parallel);

}  // namespace atosync
