#pragma once

// Simulation of the full assembly system under a base-stock table, used to
// validate the analytic cost formulas. One run is sequential; independent
// runs share nothing.

#include <cstdint>

#include "atosync/discrete_time.hpp"
#include "atosync/policy.hpp"

namespace atosync {

struct SimulationControls {
  double horizon = 1e6;  // time units (continuous) or periods (discrete)
  double warmup = 0.0;
  std::uint64_t seed = 42;
  int batches = 20;
};

// Long-run average of (b + h1) I1 + h2 I2 over [warmup, horizon], with a
// batch-means standard error.
struct CostEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double horizon = 0.0;
  double warmup = 0.0;
  std::uint64_t seed = 0;
  int batches = 0;

  // Diagnostics.
  double mean_backlog = 0.0;
  double backlog_stderr = 0.0;
  long max_order_size = 0;
  long orders_placed = 0;
  long overshoots = 0;  // policy actions that left IP2 above the target
  long events = 0;
};

double default_warmup_continuous(const ContinuousParams& params);
double default_warmup_discrete(const DiscreteParams& params);

// Event-driven simulation of Poisson arrivals, an exponential single server
// for m1, and m2 deliveries exactly lead_time after ordering. After every
// event finished pairs are assembled instantly and m2 is ordered up to
// table.target(backlog).
CostEstimate simulate_continuous(const ContinuousParams& params, const PolicyTable& table,
                                 const SimulationControls& controls);

// Period order: receive m2 due this period, demand arrives, produce
// min(backlog, capacity), assemble, order up to target, accrue end-of-period cost.
CostEstimate simulate_discrete(const DiscreteParams& params, const PolicyTable& table,
                               const SimulationControls& controls);

}  // namespace atosync
