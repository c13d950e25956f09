#include "atosync/markov_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace atosync {

namespace {

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

// Upper bound on P(X > n) for X ~ Poisson(rate), valid once n + 2 > rate:
// the terms after n decay at least geometrically with ratio rate / (n + 2).
double poisson_tail_bound(int n, double rate) {
  const double ratio = rate / (n + 2.0);
  if (ratio >= 1.0) return 1.0;
  return poisson_pmf(n + 1, rate) / (1.0 - ratio);
}

}  // namespace

void ContinuousParams::validate() const {
  if (!(std::isfinite(lambda) && lambda > 0.0))
    throw InvalidParameters("lambda must be a positive finite rate");
  if (!(std::isfinite(mu) && mu > 0.0)) throw InvalidParameters("mu must be a positive finite rate");
  if (!finite_nonneg(lead_time)) throw InvalidParameters("lead_time must be >= 0");
  if (!finite_nonneg(h1) || !finite_nonneg(h2) || !finite_nonneg(b))
    throw InvalidParameters("cost rates h1, h2, b must be >= 0");
  if (!(h2 > 0.0 || b + h1 > 0.0))
    throw InvalidParameters("critical fractile undefined: h2 and b + h1 are both zero");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidParameters("epsilon must lie in (0, 1)");
  if (!(queue_tail_mass > 0.0 && queue_tail_mass < 1.0))
    throw InvalidParameters("queue_tail_mass must lie in (0, 1)");
}

ProductionPmf::ProductionPmf(std::vector<double> probs, int conditioning_backlog)
    : probs_(std::move(probs)), backlog_(conditioning_backlog) {
  if (probs_.empty()) throw InvalidInput("production pmf must have a non-empty support");
  if (backlog_ < 0) throw InvalidInput("conditioning backlog must be >= 0");
}

double ProductionPmf::operator[](int j) const {
  if (j < 0 || j >= static_cast<int>(probs_.size())) return 0.0;
  return probs_[static_cast<std::size_t>(j)];
}

double ProductionPmf::cdf(int j) const {
  if (j < 0) return 0.0;
  const auto end = std::min<std::size_t>(static_cast<std::size_t>(j) + 1, probs_.size());
  return std::accumulate(probs_.begin(), probs_.begin() + static_cast<std::ptrdiff_t>(end), 0.0);
}

double ProductionPmf::mean() const {
  double m = 0.0;
  for (std::size_t j = 0; j < probs_.size(); ++j) m += static_cast<double>(j) * probs_[j];
  return m;
}

double ProductionPmf::total_mass() const { return std::accumulate(probs_.begin(), probs_.end(), 0.0); }

double critical_fractile(double h1, double h2, double b) {
  if (!finite_nonneg(h1) || !finite_nonneg(h2) || !finite_nonneg(b))
    throw InvalidParameters("cost parameters must be >= 0");
  const double total = b + h1 + h2;
  if (total <= 0.0) throw InvalidParameters("cost parameters are all zero");
  return (b + h1) / total;
}

UniformizedRates uniformized_rates(double lambda, double mu) {
  if (!(std::isfinite(lambda) && lambda > 0.0) || !(std::isfinite(mu) && mu > 0.0))
    throw InvalidParameters("uniformization needs positive rates");
  const double lt = lambda / (lambda + mu);
  return {lt, 1.0 - lt};
}

double poisson_pmf(int k, double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw InvalidParameters("Poisson rate must be >= 0");
  if (k < 0) return 0.0;
  if (rate == 0.0) return k == 0 ? 1.0 : 0.0;
  const double kd = static_cast<double>(k);
  const double log_p = kd * std::log(rate) - rate - std::lgamma(kd + 1.0);
  if (std::isfinite(log_p)) return std::exp(log_p);
  // Recurrence fallback p(k) = p(k-1) * rate / k.
  double p = std::exp(-rate);
  for (int m = 1; m <= k; ++m) p *= rate / m;
  return p;
}

int transition_upper_bound(double lambda, double mu, double lead_time, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidParameters("epsilon must lie in (0, 1)");
  if (!(lambda > 0.0) || !(mu > 0.0)) throw InvalidParameters("rates must be positive");
  if (!finite_nonneg(lead_time)) throw InvalidParameters("lead_time must be >= 0");
  const double mean = (lambda + mu) * lead_time;
  if (mean == 0.0) return 0;
  return static_cast<int>(std::ceil(mean + std::sqrt((1.0 / epsilon - 1.0) * mean)));
}

int transition_cap(const ContinuousParams& params) {
  const int upper = transition_upper_bound(params.lambda, params.mu, params.lead_time, params.epsilon);
  const double rate = (params.lambda + params.mu) * params.lead_time;
  int k = 0;
  while (k < upper && poisson_tail_bound(k, rate) >= kNegligiblePoissonTail) ++k;
  return k;
}

namespace detail {

ChainStateDistribution::ChainStateDistribution(int i0, int max_steps)
    : i0_(i0), rows_(i0 + max_steps + 2), cols_(max_steps + 1) {
  if (i0 < 0 || max_steps < 0) throw InvalidParameters("chain start and horizon must be >= 0");
  const auto cells = static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_);
  cur_.assign(cells, 0.0);
  next_.assign(cells, 0.0);
  cur_[index(i0, 0)] = 1.0;
}

void ChainStateDistribution::propagate(UniformizedRates rates) {
  if (steps_ + 1 >= cols_) throw InvalidParameters("chain propagated past its horizon");
  // Reachable window after s steps: backlog in [i0 - s, i0 + s], produced in [0, s].
  const int s = steps_;
  const int lo = std::max(0, i0_ - s);
  const int hi = i0_ + s;
  const int nlo = std::max(0, i0_ - s - 1);
  for (int i = nlo; i <= hi + 1; ++i)
    std::fill_n(next_.begin() + static_cast<std::ptrdiff_t>(index(i, 0)), s + 2, 0.0);

  for (int i = lo; i <= hi; ++i) {
    const double* row = &cur_[index(i, 0)];
    double* up = &next_[index(i + 1, 0)];
    for (int j = 0; j <= s; ++j) up[j] += rates.lambda_tilde * row[j];
    if (i > 0) {
      double* down = &next_[index(i - 1, 0)];
      for (int j = 0; j <= s; ++j) down[j + 1] += rates.mu_tilde * row[j];
    } else {
      // Empty queue: a fictitious service completion leaves the state unchanged.
      double* stay = &next_[index(0, 0)];
      for (int j = 0; j <= s; ++j) stay[j] += rates.mu_tilde * row[j];
    }
  }
  std::swap(cur_, next_);
  ++steps_;
}

void ChainStateDistribution::production_marginal(std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const int s = steps_;
  const int lo = std::max(0, i0_ - s);
  const int hi = i0_ + s;
  const int jmax = std::min(s, static_cast<int>(out.size()) - 1);
  for (int i = lo; i <= hi; ++i) {
    const double* row = &cur_[index(i, 0)];
    for (int j = 0; j <= jmax; ++j) out[static_cast<std::size_t>(j)] += row[j];
  }
}

double ChainStateDistribution::weight(int backlog, int produced) const {
  if (backlog < 0 || backlog >= rows_ || produced < 0 || produced >= cols_) return 0.0;
  return cur_[index(backlog, produced)];
}

}  // namespace detail

std::vector<double> production_pmf_given_transitions(int i0, int k, UniformizedRates rates) {
  if (i0 < 0 || k < 0) throw InvalidParameters("backlog and transition count must be >= 0");
  detail::ChainStateDistribution chain(i0, k);
  for (int step = 0; step < k; ++step) chain.propagate(rates);
  std::vector<double> out(static_cast<std::size_t>(k) + 1, 0.0);
  chain.production_marginal(out);
  return out;
}

ProductionPmf production_pmf(int i0, const ContinuousParams& params) {
  params.validate();
  if (i0 < 0) throw InvalidParameters("backlog must be >= 0");
  const int cap = transition_cap(params);
  // Beyond the cap the empty-queue boundary is unreachable, so every larger
  // backlog shares the pmf computed at the cap.
  const int start = std::min(i0, cap);
  const auto rates = uniformized_rates(params.lambda, params.mu);
  const double rate = (params.lambda + params.mu) * params.lead_time;

  detail::ChainStateDistribution chain(start, cap);
  std::vector<double> mix(static_cast<std::size_t>(cap) + 1, 0.0);
  std::vector<double> marginal(mix.size(), 0.0);
  double covered = 0.0;
  for (int k = 0; k <= cap; ++k) {
    const double pk = poisson_pmf(k, rate);
    chain.production_marginal(marginal);
    for (int j = 0; j <= k; ++j) mix[static_cast<std::size_t>(j)] += pk * marginal[static_cast<std::size_t>(j)];
    covered += pk;
    if (k < cap) chain.propagate(rates);
  }
  for (double& p : mix) p /= covered;
  while (mix.size() > 1 && mix.back() == 0.0) mix.pop_back();
  return ProductionPmf(std::move(mix), i0);
}

std::vector<ProductionPmf> conditional_production_pmfs(const ContinuousParams& params, Execution exec) {
  params.validate();
  const int cap = transition_cap(params);
  std::vector<ProductionPmf> pmfs(static_cast<std::size_t>(cap) + 1);
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i <= cap; ++i) pmfs[static_cast<std::size_t>(i)] = production_pmf(i, params);
  } else {
    for (int i = 0; i <= cap; ++i) pmfs[static_cast<std::size_t>(i)] = production_pmf(i, params);
  }
  return pmfs;
}

std::vector<double> truncated_poisson(double rate, double tail_mass) {
  if (!(tail_mass > 0.0 && tail_mass < 1.0)) throw InvalidParameters("tail_mass must lie in (0, 1)");
  if (!finite_nonneg(rate)) throw InvalidParameters("Poisson rate must be >= 0");
  if (rate == 0.0) return {1.0};
  std::vector<double> p;
  int n = 0;
  for (;; ++n) {
    p.push_back(poisson_pmf(n, rate));
    if (n + 2.0 > rate && poisson_tail_bound(n, rate) <= tail_mass) break;
  }
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= total;
  return p;
}

std::vector<double> stationary_production_mixture(const ContinuousParams& params) {
  params.validate();
  const double rho = params.rho();
  if (!(rho < 1.0)) throw InstabilityError("stationary backlog requires lambda < mu");
  const auto pmfs = conditional_production_pmfs(params);
  const int last = static_cast<int>(std::ceil(std::log(params.queue_tail_mass) / std::log(rho)));
  std::vector<double> mix;
  double weight_sum = 0.0;
  double weight = 1.0 - rho;
  for (int i = 0; i <= last; ++i, weight *= rho) {
    const auto& pmf = pmfs[std::min<std::size_t>(static_cast<std::size_t>(i), pmfs.size() - 1)];
    if (mix.size() < pmf.size()) mix.resize(pmf.size(), 0.0);
    for (int j = 0; j <= pmf.max_value(); ++j) mix[static_cast<std::size_t>(j)] += weight * pmf[j];
    weight_sum += weight;
  }
  for (double& x : mix) x /= weight_sum;
  return mix;
}

}  // namespace atosync
