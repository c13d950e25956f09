#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "atosync/policy.hpp"

using namespace atosync;

namespace {

// Exhaustive scan over a wide S range, smallest S among exact minimizers.
int brute_force_target(const std::vector<double>& pmf, double under, double over) {
  int best = -1;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int s = 0; s <= static_cast<int>(pmf.size()) + 5; ++s) {
    double c = 0.0;
    for (std::size_t j = 0; j < pmf.size(); ++j) {
      const double d = static_cast<double>(j) - s;
      c += pmf[j] * (d > 0 ? under * d : -over * d);
    }
    if (c < best_cost - 1e-12) {
      best_cost = c;
      best = s;
    }
  }
  return best;
}

ContinuousParams example_instance() { return ContinuousParams{}; }

}  // namespace

TEST_CASE("newsvendor target on simple pmfs") {
  CHECK(newsvendor_target(ProductionPmf({0, 0, 0, 1}, 0), 9, 1) == 3);
  CHECK(newsvendor_target(ProductionPmf({0, 0, 0, 1}, 0), 1, 100) == 3);

  const std::vector<double> uniform{0.25, 0.25, 0.25, 0.25};
  CHECK(newsvendor_target(ProductionPmf(uniform, 0), 9, 1) == brute_force_target(uniform, 9, 1));
  CHECK(newsvendor_target(ProductionPmf(uniform, 0), 9, 1) == 3);

  // Exact tie between S = 1 and S = 2 resolves to the smaller level.
  CHECK(newsvendor_target(ProductionPmf({0.5, 0, 0, 0.5}, 0), 1, 1) == 0);
  CHECK(newsvendor_target(ProductionPmf({0.0, 0.5, 0.5}, 0), 1, 1) == 1);

  CHECK_THROWS_AS(newsvendor_target(ProductionPmf({1.0}, 0), 0, 0), InvalidParameters);
}

TEST_CASE("newsvendor target matches brute force on random pmfs") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> pmf(1 + rng() % 12);
    double total = 0.0;
    for (double& x : pmf) total += (x = u(rng) < 0.2 ? 0.0 : u(rng));
    if (total == 0.0) continue;
    for (double& x : pmf) x /= total;
    const double under = 0.1 + 10 * u(rng);
    const double over = 0.1 + 10 * u(rng);
    CHECK(newsvendor_target(ProductionPmf(pmf, 0), under, over) == brute_force_target(pmf, under, over));
  }
}

TEST_CASE("fractile rule readings bracket the argmin") {
  const ProductionPmf pmf({0.1, 0.2, 0.3, 0.4}, 0);
  const auto r = fractile_rule_targets(pmf, 9, 1);
  CHECK(r.weak == 3);
  CHECK(r.strict == 4);
  CHECK(newsvendor_target(pmf, 9, 1) == r.weak);
}

TEST_CASE("policy table of the base instance") {
  const auto table = policy_table(example_instance());
  const std::vector<int> expected{4, 4, 5, 6, 6, 6, 7};
  for (int i = 0; i < 7; ++i) CHECK(table.target(i) == expected[static_cast<std::size_t>(i)]);
  CHECK(table.first_saturated_backlog() == 6);
  CHECK(table.saturation_value() == 7);
  CHECK(table.target(1000) == 7);
  CHECK(table.is_well_defined());
  CHECK(table.model() == ModelKind::continuous);
}

TEST_CASE("policy table with zero lead time is all zero") {
  auto p = example_instance();
  p.lead_time = 0;
  const auto table = policy_table(p);
  for (int i = 0; i < 20; ++i) CHECK(table.target(i) == 0);
}

TEST_CASE("policy table is insensitive to the truncation tolerance") {
  ContinuousParams p;
  p.lambda = 0.9, p.lead_time = 2, p.h1 = 1, p.b = 1;
  const auto a = policy_table(p);
  p.epsilon = 1e-10;
  const auto b = policy_table(p);
  CHECK(a.is_well_defined());
  CHECK(a.saturation_value() == b.saturation_value());
  for (int i = 0; i < 80; ++i) CHECK(a.target(i) == b.target(i));
}

TEST_CASE("policy table accessors") {
  const PolicyTable t({1, 2, 2, 3, 3, 3}, ModelKind::discrete);
  CHECK(t.saturation_index() == 5);
  CHECK(t.first_saturated_backlog() == 3);
  CHECK(PolicyTable({1, 3}, ModelKind::discrete).is_well_defined() == false);
  CHECK(PolicyTable({2, 1}, ModelKind::discrete).is_well_defined() == false);
  CHECK(PolicyTable::constant(6, ModelKind::continuous).target(42) == 6);
  CHECK_THROWS_AS(PolicyTable({}, ModelKind::continuous), InvalidInput);
  CHECK_THROWS_AS(static_cast<void>(t.target(-1)), InvalidInput);
}

TEST_CASE("fixed policy of the base instance") {
  const auto f = expected_cost_fixed(example_instance());
  CHECK(f.target == 6);
  // Poisson(3.2) newsvendor cost at S = 6, summed directly.
  double direct = 0.0;
  double p = std::exp(-3.2);
  for (int j = 0; j < 80; ++j) {
    direct += p * (j > 6 ? 9.0 * (j - 6) : 1.0 * (6 - j));
    p *= 3.2 / (j + 1);
  }
  CHECK(f.cost == doctest::Approx(direct).epsilon(1e-12));

  auto zero = example_instance();
  zero.lead_time = 0;
  const auto z = expected_cost_fixed(zero);
  CHECK(z.target == 0);
  CHECK(z.cost == 0.0);
}

TEST_CASE("state-dependent cost") {
  const auto p = example_instance();
  const auto conditional = conditional_production_pmfs(p);
  const auto table = policy_table(conditional, p.underage(), p.overage(), ModelKind::continuous);

  SUBCASE("closed tail equals a long explicit sum") {
    const double closed = expected_cost_state_dependent(p, table, conditional, BacklogSum::closed());
    double explicit_sum = 0.0;
    double w = 1.0 - p.rho();
    for (int i = 0; i < 400; ++i, w *= p.rho()) {
      const auto& pmf = conditional[std::min<std::size_t>(static_cast<std::size_t>(i), conditional.size() - 1)];
      explicit_sum += w * newsvendor_cost(pmf, table.target(i), p.underage(), p.overage());
    }
    CHECK(closed == doctest::Approx(explicit_sum).epsilon(1e-12));
    CHECK(closed <= expected_cost_fixed(p).cost);
  }

  SUBCASE("truncated sum drops the remaining weight") {
    const double cut = expected_cost_state_dependent(p, table, conditional, BacklogSum::truncated(0));
    CHECK(cut == doctest::Approx((1 - p.rho()) * newsvendor_cost(conditional[0], 4, 9, 1)).epsilon(1e-14));
    CHECK(expected_cost_state_dependent(p, table, conditional, BacklogSum::truncated(20)) <
          expected_cost_state_dependent(p, table, conditional, BacklogSum::closed()));
  }

  SUBCASE("no per-state target change lowers the cost") {
    const double base = expected_cost_state_dependent(p, table, conditional, BacklogSum::closed());
    for (int i = 0; i < table.saturation_index(); ++i)
      for (int delta : {-1, 1}) {
        auto targets = table.targets();
        targets[static_cast<std::size_t>(i)] += delta;
        if (targets[static_cast<std::size_t>(i)] < 0) continue;
        const PolicyTable moved(targets, ModelKind::continuous);
        CHECK(expected_cost_state_dependent(p, moved, conditional, BacklogSum::closed()) >= base - 1e-12);
      }
  }

  SUBCASE("beats every constant target under the same mixture") {
    const double base = expected_cost_state_dependent(p, table, conditional, BacklogSum::closed());
    for (int s = 0; s < 20; ++s) {
      const auto flat = PolicyTable::constant(s, ModelKind::continuous);
      CHECK(base <= expected_cost_state_dependent(p, flat, conditional, BacklogSum::closed()) + 1e-12);
    }
  }

  SUBCASE("zero lead time costs nothing") {
    auto z = p;
    z.lead_time = 0;
    CHECK(expected_cost_state_dependent(z, policy_table(z)) == 0.0);
  }

  SUBCASE("unstable queue") {
    auto u = p;
    u.lambda = 1.2;
    CHECK_THROWS_AS(expected_cost_state_dependent(u, table, conditional, BacklogSum::closed()), InstabilityError);
    CHECK_THROWS_AS(cost_report(u), InstabilityError);
  }
}

TEST_CASE("cost report") {
  const auto r = cost_report(example_instance());
  CHECK(r.fixed_target == 6);
  CHECK(r.cost_state_dependent <= r.cost_fixed);
  CHECK(r.savings_pct == doctest::Approx(100.0 * (1 - r.cost_state_dependent / r.cost_fixed)));
  CHECK(r.savings_pct >= 8.72);
  CHECK(r.savings_pct <= 22.07);
  CHECK(r.instance.lambda == 0.8);
  CHECK_FALSE(r.instance.demand_case.has_value());

  CHECK(savings_percent(0, 0) == 0.0);
  CHECK(savings_percent(2, 2) == 0.0);
  CHECK(savings_percent(4, 3) == doctest::Approx(25.0));

  auto z = example_instance();
  z.lead_time = 0;
  const auto rz = cost_report(z);
  CHECK(rz.cost_fixed == 0.0);
  CHECK(rz.cost_state_dependent == 0.0);
  CHECK(rz.savings_pct == 0.0);
}

TEST_CASE("policy properties over random instances") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    ContinuousParams p;
    p.mu = 0.5 + u(rng);
    p.lambda = p.mu * (0.05 + 0.9 * u(rng));
    p.lead_time = 5 * u(rng);
    p.h1 = 5 * u(rng), p.h2 = 0.1 + 3 * u(rng), p.b = 10 * u(rng);
    const auto r = cost_report(p);
    CHECK(policy_table(p).is_well_defined());
    CHECK(r.cost_state_dependent <= r.cost_fixed + 1e-9);
  }
}
