#pragma once

// Full-factorial experiment harness: enumerate instances, price both policies
// for each, and aggregate the savings one parameter at a time.

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "atosync/discrete_time.hpp"
#include "atosync/policy.hpp"

namespace atosync {

struct DemandCapacityCase {
  IntPmf demand;
  IntPmf capacity;
};

struct ExperimentGrid {
  ModelKind model = ModelKind::continuous;
  // continuous
  std::vector<double> lambdas;
  double mu = 1.0;
  double epsilon = 1e-8;
  BacklogSum backlog_sum = BacklogSum::closed();
  // discrete
  std::map<int, DemandCapacityCase> cases;
  double stabilization_tol = 1e-10;
  // shared
  std::vector<double> lead_times;
  std::vector<double> h1s;
  std::vector<double> bs;
  double h2 = 1.0;

  [[nodiscard]] std::size_t size() const;
};

// lambda in {0.8, 0.9}, L, h1 in {1, 2, 4}... with mu = h2 = 1. Stationary
// weights are summed over backlogs 0..20, the convention the published
// continuous table follows.
ExperimentGrid continuous_reference_grid();
// Cases 1 and 2 with the same L, h1, b lists.
ExperimentGrid discrete_reference_grid();

// Instance enumeration in lexicographic parameter order:
// (lambda | case), L, h1, b.
std::vector<ContinuousParams> continuous_instances(const ExperimentGrid& grid);
std::vector<DiscreteParams> discrete_instances(const ExperimentGrid& grid);

// Raised when one instance fails; what() names the instance.
class GridError : public std::runtime_error {
 public:
  GridError(const std::string& instance, const std::string& cause, std::exception_ptr inner);
  [[nodiscard]] std::exception_ptr inner() const { return inner_; }

 private:
  std::exception_ptr inner_;
};

std::string describe_instance(const InstanceDescriptor& d);

// One report per instance, in enumeration order. The parallel path evaluates
// instances concurrently and merges by index.
std::vector<CostReport> run_grid(const ExperimentGrid& grid, Execution exec = Execution::parallel);

struct SummaryRow {
  std::string parameter;  // "lambda", "case", "L", "h1", "b", or "All"
  std::string value;      // empty for "All"
  std::size_t instances = 0;
  double avg_cost_fixed = 0.0;
  double avg_cost_state_dep = 0.0;
  double avg_saving_pct = 0.0;
  double max_saving_pct = 0.0;
  double min_saving_pct = 0.0;
};

// Parameters grouped by default for a model.
std::vector<std::string> default_grouping(ModelKind model);

// One row per value of every grouping parameter, then the "All" row.
// Savings statistics are over per-instance percentages.
std::vector<SummaryRow> summarize(const std::vector<CostReport>& reports,
                                  const std::vector<std::string>& grouping);

// Output formats.
void write_instances_csv(std::ostream& os, const std::vector<CostReport>& reports);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);
void write_experiment_json(std::ostream& os, const std::vector<CostReport>& reports,
                           const std::vector<SummaryRow>& rows);

}  // namespace atosync
