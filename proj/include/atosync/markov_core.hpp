#pragma once

// Transient analysis of the make-to-order production queue (M/M/1) over one
// supplier lead time. The queue is uniformized at rate lambda + mu; the number
// of uniformized transitions in [t, t+L] is Poisson((lambda + mu) L), and the
// production count after k transitions is obtained by propagating a sparse
// distribution over (backlog, produced) states.

#include <cstddef>
#include <span>
#include <vector>

#include "atosync/errors.hpp"

namespace atosync {

struct ContinuousParams {
  double lambda = 0.8;  // order arrival rate
  double mu = 1.0;      // service rate of the m1 production server
  double lead_time = 4.0;
  double h1 = 4.0;  // holding cost per finished m1 per unit time
  double h2 = 1.0;  // holding cost per m2 per unit time
  double b = 5.0;   // waiting cost per customer per unit time
  double epsilon = 1e-8;          // Poisson tail tolerance for X^U
  double queue_tail_mass = 1e-10;  // truncation of stationary geometric sums

  // Throws InvalidParameters. Stability (lambda < mu) is checked separately
  // by the operations that need a stationary distribution.
  void validate() const;
  [[nodiscard]] double rho() const { return lambda / mu; }
  [[nodiscard]] double underage() const { return b + h1; }
  [[nodiscard]] double overage() const { return h2; }
};

struct UniformizedRates {
  double lambda_tilde;  // probability a uniformized transition is an arrival
  double mu_tilde;      // probability it is a (possibly fictitious) service completion
};

// Distribution of units produced over a horizon, conditional on the backlog
// at the start of the horizon. probs[j] = P(production = j).
class ProductionPmf {
 public:
  ProductionPmf() = default;
  ProductionPmf(std::vector<double> probs, int conditioning_backlog);

  [[nodiscard]] std::span<const double> probs() const { return probs_; }
  [[nodiscard]] int conditioning_backlog() const { return backlog_; }
  [[nodiscard]] std::size_t size() const { return probs_.size(); }
  [[nodiscard]] int max_value() const { return static_cast<int>(probs_.size()) - 1; }
  // Zero outside the support.
  [[nodiscard]] double operator[](int j) const;
  [[nodiscard]] double cdf(int j) const;
  [[nodiscard]] double mean() const;
  [[nodiscard]] double total_mass() const;

  friend bool operator==(const ProductionPmf&, const ProductionPmf&) = default;

 private:
  std::vector<double> probs_{1.0};
  int backlog_ = 0;
};

// (b + h1) / (b + h1 + h2).
double critical_fractile(double h1, double h2, double b);

UniformizedRates uniformized_rates(double lambda, double mu);

// Poisson mass, evaluated in log space.
double poisson_pmf(int k, double rate);

// Cantelli bound: smallest integer X^U with P(X >= X^U) <= epsilon for
// X ~ Poisson((lambda + mu) L). Zero when L = 0.
int transition_upper_bound(double lambda, double mu, double lead_time, double epsilon);

// Poisson tail mass below which further terms are dropped; past it the terms
// vanish relative to a distribution that sums to one.
inline constexpr double kNegligiblePoissonTail = 1e-18;

// Number of uniformized transitions actually mixed: X^U, capped where the
// remaining Poisson tail drops below 1e-18 (beyond that the terms vanish in
// double precision). Also the backlog saturation index of the continuous model.
int transition_cap(const ContinuousParams& params);

// Distribution of production after exactly k uniformized transitions from
// state (i0, 0). Entry j of the result, j = 0..k.
std::vector<double> production_pmf_given_transitions(int i0, int k, UniformizedRates rates);

// Poisson mixture over k = 0..transition_cap of the above, renormalized.
ProductionPmf production_pmf(int i0, const ContinuousParams& params);

// production_pmf for i0 = 0..transition_cap(params). Entry i conditions on
// backlog i; the last entry is the saturated pmf shared by all larger backlogs.
std::vector<ProductionPmf> conditional_production_pmfs(const ContinuousParams& params,
                                                       Execution exec = Execution::parallel);

// Poisson(rate) truncated where the upper tail is <= tail_mass, renormalized.
std::vector<double> truncated_poisson(double rate, double tail_mass);

// Stationary mixture sum_i (1 - rho) rho^i P(prod = j | i), with the i-sum
// cut where the geometric tail is <= params.queue_tail_mass. Requires rho < 1.
std::vector<double> stationary_production_mixture(const ContinuousParams& params);

namespace detail {

// Distribution over (backlog, produced) states of the uniformized chain.
// Dense storage over the reachable window; one propagate() is one transition.
class ChainStateDistribution {
 public:
  ChainStateDistribution(int i0, int max_steps);

  void propagate(UniformizedRates rates);
  // P(produced = j) for j = 0..steps taken so far; written into out[0..max_steps].
  void production_marginal(std::span<double> out) const;
  [[nodiscard]] int steps() const { return steps_; }
  [[nodiscard]] double weight(int backlog, int produced) const;

 private:
  [[nodiscard]] std::size_t index(int backlog, int produced) const {
    return static_cast<std::size_t>(backlog) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(produced);
  }

  int i0_;
  int rows_;
  int cols_;
  int steps_ = 0;
  std::vector<double> cur_;
  std::vector<double> next_;
};

}  // namespace detail

}  // namespace atosync
