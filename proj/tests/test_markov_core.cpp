#include "doctest.h"

#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "atosync/markov_core.hpp"

using namespace atosync;

namespace {

// Production after k transitions by enumerating all 2^k arrival/service paths.
std::vector<double> enumerate_paths(int i0, int k, double lt, double mt) {
  std::vector<double> out(static_cast<std::size_t>(k) + 1, 0.0);
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    int backlog = i0;
    int produced = 0;
    double p = 1.0;
    for (int s = 0; s < k; ++s) {
      if (mask & (1u << s)) {
        ++backlog;
        p *= lt;
      } else {
        p *= mt;
        if (backlog > 0) {
          --backlog;
          ++produced;
        }
      }
    }
    out[static_cast<std::size_t>(produced)] += p;
  }
  return out;
}

// Forward Kolmogorov equations of the (backlog, produced) process integrated
// with classical RK4 on a truncated grid. Independent of uniformization.
std::vector<double> kolmogorov_production(int i0, double lambda, double mu, double L, int nmax) {
  const int rows = nmax + 1;
  const int cols = nmax + 1;
  auto idx = [&](int i, int j) { return static_cast<std::size_t>(i * cols + j); };
  std::vector<double> p(static_cast<std::size_t>(rows * cols), 0.0);
  p[idx(i0, 0)] = 1.0;
  auto deriv = [&](const std::vector<double>& x) {
    std::vector<double> d(x.size(), 0.0);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) {
        const double v = x[idx(i, j)];
        if (v == 0.0) continue;
        if (i + 1 < rows) {
          d[idx(i, j)] -= lambda * v;
          d[idx(i + 1, j)] += lambda * v;
        }
        if (i > 0 && j + 1 < cols) {
          d[idx(i, j)] -= mu * v;
          d[idx(i - 1, j + 1)] += mu * v;
        }
      }
    return d;
  };
  const int steps = 4000;
  const double h = L / steps;
  for (int s = 0; s < steps; ++s) {
    auto k1 = deriv(p);
    std::vector<double> t(p.size());
    for (std::size_t n = 0; n < p.size(); ++n) t[n] = p[n] + 0.5 * h * k1[n];
    auto k2 = deriv(t);
    for (std::size_t n = 0; n < p.size(); ++n) t[n] = p[n] + 0.5 * h * k2[n];
    auto k3 = deriv(t);
    for (std::size_t n = 0; n < p.size(); ++n) t[n] = p[n] + h * k3[n];
    auto k4 = deriv(t);
    for (std::size_t n = 0; n < p.size(); ++n) p[n] += h / 6.0 * (k1[n] + 2 * k2[n] + 2 * k3[n] + k4[n]);
  }
  std::vector<double> prod(static_cast<std::size_t>(cols), 0.0);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) prod[static_cast<std::size_t>(j)] += p[idx(i, j)];
  return prod;
}

double poisson_tail_from(int n, double rate) {
  double below = 0.0;
  double p = std::exp(-rate);
  for (int k = 0; k < n; ++k) {
    below += p;
    p *= rate / (k + 1);
  }
  return 1.0 - below;
}

}  // namespace

TEST_CASE("critical fractile") {
  CHECK(critical_fractile(4, 1, 5) == doctest::Approx(0.9));
  CHECK(critical_fractile(1, 1, 0) == doctest::Approx(0.5));
  CHECK(critical_fractile(0, 1, 0) == 0.0);
  CHECK_THROWS_AS(critical_fractile(0, 0, 0), InvalidParameters);
  CHECK_THROWS_AS(critical_fractile(-1, 1, 1), InvalidParameters);
}

TEST_CASE("uniformized rates sum to one") {
  auto r = uniformized_rates(1, 1);
  CHECK(r.lambda_tilde == 0.5);
  CHECK(r.mu_tilde == 0.5);
  r = uniformized_rates(0.8, 1);
  CHECK(r.lambda_tilde == doctest::Approx(4.0 / 9).epsilon(1e-15));
  CHECK(r.mu_tilde == doctest::Approx(5.0 / 9).epsilon(1e-15));
  CHECK(r.lambda_tilde + r.mu_tilde == 1.0);
  r = uniformized_rates(0.9, 1);
  CHECK(r.lambda_tilde == doctest::Approx(9.0 / 19).epsilon(1e-15));
  CHECK(r.lambda_tilde + r.mu_tilde == 1.0);
  CHECK_THROWS_AS(uniformized_rates(0, 1), InvalidParameters);
  CHECK_THROWS_AS(uniformized_rates(1, -2), InvalidParameters);
}

TEST_CASE("poisson pmf") {
  CHECK(poisson_pmf(0, 0) == 1.0);
  CHECK(poisson_pmf(3, 0) == 0.0);
  CHECK(poisson_pmf(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  // recurrence p(k) = p(k-1) rate / k
  const double rec = std::exp(-3.6) * 3.6 * 3.6 / 2.0;
  CHECK(poisson_pmf(2, 3.6) == doctest::Approx(rec).epsilon(1e-13));
  CHECK(poisson_pmf(2, 3.6) == doctest::Approx(0.1770577).epsilon(1e-6));
  CHECK_THROWS_AS(poisson_pmf(1, -0.5), InvalidParameters);

  SUBCASE("stable at large rates") {
    double sum = 0.0;
    for (int k = 0; k < 400; ++k) {
      const double p = poisson_pmf(k, 150.0);
      CHECK(std::isfinite(p));
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("transition upper bound covers the poisson tail") {
  CHECK(transition_upper_bound(0.8, 1, 4, 0.01) == 34);
  CHECK(poisson_tail_from(34, 7.2) <= 0.01);
  CHECK(transition_upper_bound(0.8, 1, 0, 0.3) == 0);

  const int v = transition_upper_bound(0.9, 1, 2, 1e-6);
  CHECK(poisson_tail_from(v, 3.8) <= 1e-6);

  for (double eps : {0.5, 0.1, 1e-3, 1e-6, 1e-9})
    for (double L : {0.5, 2.0, 4.0}) {
      const int x = transition_upper_bound(0.9, 1, L, eps);
      CHECK(poisson_tail_from(x, 1.9 * L) <= eps);
    }

  CHECK_THROWS_AS(transition_upper_bound(0.8, 1, 4, 0.0), InvalidParameters);
  CHECK_THROWS_AS(transition_upper_bound(0.8, 1, 4, 1.0), InvalidParameters);
}

TEST_CASE("transition cap never exceeds the bound and leaves a negligible tail") {
  ContinuousParams p;
  const int cap = transition_cap(p);
  CHECK(cap <= transition_upper_bound(p.lambda, p.mu, p.lead_time, p.epsilon));
  CHECK(poisson_tail_from(cap + 1, 7.2) < 1e-15);
  p.epsilon = 0.05;
  CHECK(transition_cap(p) == transition_upper_bound(p.lambda, p.mu, p.lead_time, p.epsilon));
}

TEST_CASE("two transitions from an empty queue, matrix form") {
  const double lt = 0.8 / 1.8;
  const double mt = 1.0 - lt;
  // Ten-state truncated chain with absorbing overflow state, squared.
  enum { s00, s10, s20, s01, s11, s21, s02, s12, s22, s03, N };
  std::array<std::array<double, N>, N> P{};
  P[s00][s00] = mt, P[s00][s10] = lt;
  P[s10][s20] = lt, P[s10][s01] = mt;
  P[s20][s20] = lt, P[s20][s11] = mt;
  P[s01][s01] = mt, P[s01][s11] = lt;
  P[s11][s21] = lt, P[s11][s02] = mt;
  P[s21][s21] = lt, P[s21][s12] = mt;
  P[s02][s02] = mt, P[s02][s12] = lt;
  P[s12][s22] = lt, P[s12][s03] = mt;
  P[s22][s22] = lt, P[s22][s03] = mt;
  P[s03][s03] = 1.0;
  std::array<double, N> s{};
  s[s00] = 1.0;
  for (int step = 0; step < 2; ++step) {
    std::array<double, N> next{};
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b) next[b] += s[a] * P[a][b];
    s = next;
  }
  CHECK(s[s00] == doctest::Approx(mt * mt).epsilon(1e-15));
  CHECK(s[s10] == doctest::Approx(lt * mt).epsilon(1e-15));
  CHECK(s[s20] == doctest::Approx(lt * lt).epsilon(1e-15));
  CHECK(s[s01] == doctest::Approx(lt * mt).epsilon(1e-15));

  const auto pmf = production_pmf_given_transitions(0, 2, uniformized_rates(0.8, 1));
  REQUIRE(pmf.size() == 3);
  CHECK(std::abs(pmf[0] - (s[s00] + s[s10] + s[s20])) <= 1e-15);
  CHECK(std::abs(pmf[1] - (s[s01] + s[s11] + s[s21])) <= 1e-15);
  CHECK(std::abs(pmf[2] - (s[s02] + s[s12] + s[s22])) <= 1e-15);
}

TEST_CASE("transition pmf edge cases") {
  const auto r = uniformized_rates(0.8, 1);
  for (int i0 : {0, 1, 7}) {
    const auto pmf = production_pmf_given_transitions(i0, 0, r);
    REQUIRE(pmf.size() == 1);
    CHECK(pmf[0] == 1.0);
  }
  // The boundary never binds when i0 >= k: binomial number of services.
  const auto pmf = production_pmf_given_transitions(3, 2, r);
  CHECK(pmf[0] == doctest::Approx(r.lambda_tilde * r.lambda_tilde).epsilon(1e-15));
  CHECK(pmf[1] == doctest::Approx(2 * r.lambda_tilde * r.mu_tilde).epsilon(1e-15));
  CHECK(pmf[2] == doctest::Approx(r.mu_tilde * r.mu_tilde).epsilon(1e-15));
  CHECK_THROWS_AS(production_pmf_given_transitions(-1, 2, r), InvalidParameters);
}

TEST_CASE("transition pmf agrees with path enumeration") {
  for (auto [lambda, mu] : {std::pair{0.8, 1.0}, std::pair{0.3, 1.7}, std::pair{2.0, 1.0}}) {
    const auto r = uniformized_rates(lambda, mu);
    for (int i0 = 0; i0 <= 5; ++i0)
      for (int k = 0; k <= 12; ++k) {
        const auto got = production_pmf_given_transitions(i0, k, r);
        const auto want = enumerate_paths(i0, k, r.lambda_tilde, r.mu_tilde);
        for (std::size_t j = 0; j < want.size(); ++j) CHECK(std::abs(got[j] - want[j]) < 1e-13);
      }
  }
}

TEST_CASE("chain state distribution stays normalized") {
  const auto r = uniformized_rates(0.9, 1);
  detail::ChainStateDistribution chain(2, 40);
  for (int s = 0; s < 40; ++s) {
    chain.propagate(r);
    double total = 0.0;
    for (int i = 0; i <= 2 + 40 + 1; ++i)
      for (int j = 0; j <= 40; ++j) {
        const double w = chain.weight(i, j);
        CHECK(w >= 0.0);
        total += w;
      }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
  CHECK(chain.steps() == 40);
  CHECK_THROWS_AS(chain.propagate(r), InvalidParameters);
}

TEST_CASE("production pmf matches the forward equations") {
  ContinuousParams p;
  p.lambda = 0.8;
  p.lead_time = 1.5;
  for (int i0 : {0, 1, 3}) {
    const auto pmf = production_pmf(i0, p);
    const auto ode = kolmogorov_production(i0, p.lambda, p.mu, p.lead_time, 28);
    for (int j = 0; j < 20; ++j) CHECK(std::abs(pmf[j] - ode[static_cast<std::size_t>(j)]) < 1e-9);
  }
}

TEST_CASE("production pmf basics") {
  ContinuousParams p;
  SUBCASE("zero lead time") {
    p.lead_time = 0;
    for (int i0 : {0, 4}) {
      const auto pmf = production_pmf(i0, p);
      REQUIRE(pmf.size() == 1);
      CHECK(pmf[0] == 1.0);
    }
  }
  SUBCASE("normalized with non-negative entries") {
    for (int i0 = 0; i0 < 12; ++i0) {
      const auto pmf = production_pmf(i0, p);
      CHECK(std::abs(pmf.total_mass() - 1.0) < 1e-9);
      for (double x : pmf.probs()) CHECK(x >= 0.0);
      CHECK(pmf.conditioning_backlog() == i0);
      CHECK(pmf.max_value() <= transition_upper_bound(p.lambda, p.mu, p.lead_time, p.epsilon));
    }
  }
  SUBCASE("saturated beyond the cap") {
    const int cap = transition_cap(p);
    const auto a = production_pmf(cap, p);
    const auto b = production_pmf(cap + 5, p);
    const int xu = transition_upper_bound(p.lambda, p.mu, p.lead_time, p.epsilon);
    const auto c = production_pmf(xu, p);
    CHECK(std::equal(a.probs().begin(), a.probs().end(), b.probs().begin(), b.probs().end()));
    CHECK(std::equal(a.probs().begin(), a.probs().end(), c.probs().begin(), c.probs().end()));
    // With a server that never idles, output is Poisson(mu L).
    for (int j = 0; j < 20; ++j) CHECK(std::abs(a[j] - poisson_pmf(j, p.mu * p.lead_time)) < 1e-12);
  }
}

TEST_CASE("mean output of an initially empty queue, Monte Carlo") {
  ContinuousParams p;  // lambda 0.8, mu 1, L 4
  const double analytic = production_pmf(0, p).mean();

  std::mt19937_64 rng(2024);
  std::exponential_distribution<double> arrive(p.lambda);
  std::exponential_distribution<double> serve(p.mu);
  const int reps = 1'000'000;
  double sum = 0.0;
  double sumsq = 0.0;
  for (int r = 0; r < reps; ++r) {
    double t = 0.0;
    int q = 0;
    int done = 0;
    double next_a = arrive(rng);
    double next_s = std::numeric_limits<double>::infinity();
    while (true) {
      const double nt = std::min(next_a, next_s);
      if (nt > p.lead_time) break;
      t = nt;
      if (next_a <= next_s) {
        if (q++ == 0) next_s = t + serve(rng);
        next_a = t + arrive(rng);
      } else {
        ++done;
        next_s = --q > 0 ? t + serve(rng) : std::numeric_limits<double>::infinity();
      }
    }
    sum += done;
    sumsq += static_cast<double>(done) * done;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sumsq / reps - mean * mean) / reps);
  CHECK(std::abs(mean - analytic) < 3 * se);
}

TEST_CASE("dominance and bounded shift in the backlog") {
  for (double lambda : {0.5, 0.8, 0.95}) {
    ContinuousParams p;
    p.lambda = lambda;
    p.lead_time = 3;
    const auto pmfs = conditional_production_pmfs(p);
    for (std::size_t i = 0; i + 1 < pmfs.size(); ++i) {
      const int top = pmfs[i + 1].max_value() + 1;
      for (int j = 0; j <= top; ++j) {
        CHECK(pmfs[i + 1].cdf(j) <= pmfs[i].cdf(j) + 1e-10);
        CHECK(pmfs[i + 1].cdf(j + 1) >= pmfs[i].cdf(j) - 1e-10);
      }
    }
  }
}

TEST_CASE("serial and parallel conditional pmfs are identical") {
  ContinuousParams p;
  p.lambda = 0.9;
  p.lead_time = 3;
  const auto a = conditional_production_pmfs(p, Execution::serial);
  const auto b = conditional_production_pmfs(p, Execution::parallel);
  CHECK(a == b);
  CHECK(static_cast<int>(a.size()) == transition_cap(p) + 1);
}

TEST_CASE("stationary mixture reproduces the poisson output process") {
  for (double lambda : {0.3, 0.8, 0.9}) {
    ContinuousParams p;
    p.lambda = lambda;
    p.lead_time = 2.5;
    const auto mix = stationary_production_mixture(p);
    double tv = 0.0;
    for (std::size_t j = 0; j < mix.size() + 30; ++j) {
      const double m = j < mix.size() ? mix[j] : 0.0;
      tv += std::abs(m - poisson_pmf(static_cast<int>(j), lambda * p.lead_time));
    }
    CHECK(0.5 * tv < 1e-4);
  }
  ContinuousParams unstable;
  unstable.lambda = 1.0;
  CHECK_THROWS_AS(stationary_production_mixture(unstable), InstabilityError);
}

TEST_CASE("truncated poisson") {
  const auto p = truncated_poisson(3.2, 1e-8);
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(poisson_tail_from(static_cast<int>(p.size()), 3.2) <= 1e-8);
  CHECK(truncated_poisson(0.0, 1e-8) == std::vector<double>{1.0});
  CHECK_THROWS_AS(truncated_poisson(1.0, 0.0), InvalidParameters);
}

TEST_CASE("parameter validation") {
  ContinuousParams p;
  CHECK_NOTHROW(p.validate());
  auto bad = p;
  bad.lambda = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidParameters);
  bad = p;
  bad.lead_time = -1;
  CHECK_THROWS_AS(bad.validate(), InvalidParameters);
  bad = p;
  bad.epsilon = 1.5;
  CHECK_THROWS_AS(bad.validate(), InvalidParameters);
  bad = p;
  bad.h2 = 0, bad.h1 = 0, bad.b = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidParameters);
  CHECK_THROWS_AS(ProductionPmf({}, 0), InvalidInput);
}
