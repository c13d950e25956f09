#include "atosync/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <vector>

namespace atosync {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  int sample(const IntPmf& pmf) {
    const double u = uniform();
    double cum = 0.0;
    const auto& p = pmf.probs();
    for (std::size_t v = 0; v < p.size(); ++v) {
      cum += p[v];
      if (u < cum) return static_cast<int>(v);
    }
    return pmf.max_value();
  }

 private:
  std::mt19937_64 engine_;
};

// Splits [warmup, horizon] into equal batches and accumulates time integrals.
class BatchAccumulator {
 public:
  BatchAccumulator(double warmup, double horizon, int batches)
      : start_(warmup), width_((horizon - warmup) / batches), sums_(static_cast<std::size_t>(batches), 0.0) {}

  // Adds rate * |[from, to] ∩ window|.
  void add(double from, double to, double rate) {
    from = std::max(from, start_);
    const double end = start_ + width_ * static_cast<double>(sums_.size());
    to = std::min(to, end);
    while (from < to) {
      auto b = static_cast<std::size_t>((from - start_) / width_);
      b = std::min(b, sums_.size() - 1);
      const double batch_end = start_ + width_ * static_cast<double>(b + 1);
      const double seg_end = std::min(to, batch_end);
      sums_[b] += rate * (seg_end - from);
      from = seg_end;
    }
  }

  struct Summary {
    double mean;
    double std_error;
  };

  [[nodiscard]] Summary summary() const {
    const auto n = static_cast<double>(sums_.size());
    double mean = 0.0;
    for (double s : sums_) mean += s / width_;
    mean /= n;
    double ss = 0.0;
    for (double s : sums_) ss += (s / width_ - mean) * (s / width_ - mean);
    const double sd = sums_.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return {mean, sd / std::sqrt(n)};
  }

 private:
  double start_;
  double width_;
  std::vector<double> sums_;
};

void check_controls(const SimulationControls& c) {
  if (!(c.warmup >= 0.0) || !(c.horizon > c.warmup) || !std::isfinite(c.horizon))
    throw InvalidParameters("simulation needs horizon > warmup >= 0");
  if (c.batches < 2) throw InvalidParameters("simulation needs at least 2 batches");
}

// m1/m2 stock shared by both simulators.
struct Stock {
  long finished_m1 = 0;
  long on_hand_m2 = 0;

  void assemble() {
    const long pairs = std::min(finished_m1, on_hand_m2);
    finished_m1 -= pairs;
    on_hand_m2 -= pairs;
  }
  [[nodiscard]] double cost_rate(double underage, double overage) const {
    return underage * static_cast<double>(finished_m1) + overage * static_cast<double>(on_hand_m2);
  }
};

}  // namespace

double default_warmup_continuous(const ContinuousParams& params) {
  return std::max(10.0 * params.lead_time, 10.0 / (params.mu - params.lambda));
}

double default_warmup_discrete(const DiscreteParams& params) { return 50.0 * params.lead_periods; }

CostEstimate simulate_continuous(const ContinuousParams& params, const PolicyTable& table,
                                 const SimulationControls& controls) {
  params.validate();
  if (!(params.rho() < 1.0)) throw InstabilityError("simulation requires lambda < mu");
  check_controls(controls);

  constexpr double kNever = std::numeric_limits<double>::infinity();
  Rng rng(controls.seed);
  BatchAccumulator cost(controls.warmup, controls.horizon, controls.batches);
  BatchAccumulator backlog_time(controls.warmup, controls.horizon, controls.batches);

  CostEstimate est;
  Stock stock;
  long backlog = 0;
  std::deque<double> in_transit;  // due times, FIFO because the lead time is constant
  stock.on_hand_m2 = table.target(0);
  double clock = 0.0;
  double next_arrival = rng.exponential(params.lambda);
  double next_service = kNever;

  auto act = [&] {
    stock.assemble();
    const long position = stock.on_hand_m2 + static_cast<long>(in_transit.size()) - stock.finished_m1;
    const long order = table.target(static_cast<int>(backlog)) - position;
    if (order < 0) ++est.overshoots;
    if (order <= 0) return;
    est.max_order_size = std::max(est.max_order_size, order);
    ++est.orders_placed;
    if (params.lead_time == 0.0) {
      stock.on_hand_m2 += order;
      stock.assemble();
    } else {
      for (long k = 0; k < order; ++k) in_transit.push_back(clock + params.lead_time);
    }
  };

  while (true) {
    const double next_delivery = in_transit.empty() ? kNever : in_transit.front();
    const double t = std::min({next_arrival, next_service, next_delivery});
    const double stop = std::min(t, controls.horizon);
    cost.add(clock, stop, stock.cost_rate(params.underage(), params.overage()));
    backlog_time.add(clock, stop, static_cast<double>(backlog));
    if (t > controls.horizon) break;
    clock = t;
    ++est.events;

    if (t == next_delivery) {
      in_transit.pop_front();
      ++stock.on_hand_m2;
    } else if (t == next_arrival) {
      if (++backlog == 1) next_service = clock + rng.exponential(params.mu);
      next_arrival = clock + rng.exponential(params.lambda);
    } else {
      --backlog;
      ++stock.finished_m1;
      next_service = backlog > 0 ? clock + rng.exponential(params.mu) : kNever;
    }
    act();
  }

  const auto c = cost.summary();
  const auto q = backlog_time.summary();
  est.mean = c.mean;
  est.std_error = c.std_error;
  est.mean_backlog = q.mean;
  est.backlog_stderr = q.std_error;
  est.horizon = controls.horizon;
  est.warmup = controls.warmup;
  est.seed = controls.seed;
  est.batches = controls.batches;
  return est;
}

CostEstimate simulate_discrete(const DiscreteParams& params, const PolicyTable& table,
                               const SimulationControls& controls) {
  params.validate();
  // Equal means are only stable when both quantities are deterministic.
  const bool deterministic = params.demand.support().size() == 1 && params.capacity.support().size() == 1;
  if (params.demand.mean() > params.capacity.mean() ||
      (params.demand.mean() == params.capacity.mean() && !deterministic))
    throw InstabilityError("simulation requires E[D] < E[C]");
  check_controls(controls);
  const auto horizon = static_cast<long>(std::floor(controls.horizon));
  const auto warmup = static_cast<long>(std::floor(controls.warmup));

  Rng rng(controls.seed);
  BatchAccumulator cost(static_cast<double>(warmup), static_cast<double>(horizon), controls.batches);
  BatchAccumulator backlog_time(static_cast<double>(warmup), static_cast<double>(horizon), controls.batches);

  CostEstimate est;
  Stock stock;
  long backlog = 0;
  long in_transit = 0;
  // pipeline.front() arrives at the start of the current period.
  std::deque<long> pipeline(static_cast<std::size_t>(params.lead_periods), 0);
  stock.on_hand_m2 = table.target(0);

  for (long t = 0; t < horizon; ++t) {
    if (!pipeline.empty()) {
      stock.on_hand_m2 += pipeline.front();
      in_transit -= pipeline.front();
      pipeline.pop_front();
    }
    backlog += rng.sample(params.demand);
    const long produced = std::min<long>(backlog, rng.sample(params.capacity));
    backlog -= produced;
    stock.finished_m1 += produced;
    stock.assemble();

    const long position = stock.on_hand_m2 + in_transit - stock.finished_m1;
    long order = table.target(static_cast<int>(backlog)) - position;
    if (order < 0) ++est.overshoots;
    order = std::max(order, 0L);
    if (order > 0) {
      est.max_order_size = std::max(est.max_order_size, order);
      ++est.orders_placed;
    }
    if (params.lead_periods == 0) {
      stock.on_hand_m2 += order;
      stock.assemble();
    } else {
      pipeline.push_back(order);
      in_transit += order;
    }
    ++est.events;

    const auto from = static_cast<double>(t);
    cost.add(from, from + 1.0, stock.cost_rate(params.underage(), params.overage()));
    backlog_time.add(from, from + 1.0, static_cast<double>(backlog));
  }

  const auto c = cost.summary();
  const auto q = backlog_time.summary();
  est.mean = c.mean;
  est.std_error = c.std_error;
  est.mean_backlog = q.mean;
  est.backlog_stderr = q.std_error;
  est.horizon = static_cast<double>(horizon);
  est.warmup = static_cast<double>(warmup);
  est.seed = controls.seed;
  est.batches = controls.batches;
  return est;
}

}  // namespace atosync
