#pragma once

// Command-line driver: `policy`, `cost`, `experiment`, `simulate`.
// Exit codes: 0 success, 2 configuration error, 3 unstable model,
// 4 convergence or resource error.

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "atosync/experiments.hpp"
#include "atosync/simulator.hpp"

namespace atosync::cli {

enum ExitCode : int { ok = 0, failure = 1, config_error = 2, instability = 3, convergence = 4 };

enum class OutputFormat { csv, json };
enum class SimulatedPolicy { state_dependent, fixed };

struct RunConfig {
  ModelKind model = ModelKind::continuous;
  ContinuousParams continuous;
  DiscreteParams discrete = reference_case(1);
  // Continuous stationary sum for `cost`; nullopt = exact tail closure.
  std::optional<int> backlog_cutoff;
  ExperimentGrid grid = continuous_reference_grid();
  SimulationControls simulation;
  bool warmup_given = false;
  SimulatedPolicy simulated_policy = SimulatedPolicy::state_dependent;
  std::string output_path;  // empty: standard output
  OutputFormat format = OutputFormat::csv;
};

// Parses a JSON config document. Throws InvalidInput naming the offending field.
RunConfig parse_config(std::string_view json_text);

// Entry point used by the executable and the tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace atosync::cli
