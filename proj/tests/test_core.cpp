#include <catch2/catch_amalgamated.hpp>

#include "bidopt/core.hpp"
#include "bidopt/rng.hpp"

using namespace bidopt;

namespace {

std::vector<CampaignConfig> two_campaigns() {
  return {{"C1", 0.5, 2.0, 0.0, 4.0, 1.0, 1.0}, {"C2", 0.5, 2.0, 0.0, 4.0, 1.0, 1.0}};
}

}  // namespace

TEST_CASE("bid grid rejects malformed level sets") {
  CHECK_THROWS_AS(BidGrid({}), std::invalid_argument);
  CHECK_THROWS_AS(BidGrid({0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(BidGrid({0.5, 0.4}), std::invalid_argument);
  CHECK_THROWS_AS(BidGrid({-0.1, 0.4}), std::invalid_argument);
  CHECK_NOTHROW(BidGrid({0.0, 0.5, 1.0}));
}

TEST_CASE("budget grid must start at zero and stay evenly spaced") {
  CHECK_THROWS_AS(BudgetGrid({1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(BudgetGrid({0.0, 1.0, 2.5}), std::invalid_argument);
  const auto g = BudgetGrid::linspace(500.0, 10);
  CHECK(g.size() == 10);
  CHECK(g[0] == 0.0);
  CHECK(g[9] == Catch::Approx(500.0));
  CHECK(g.spacing() == Catch::Approx(500.0 / 9.0));
  CHECK(g.index_of(g[7]).value() == 7);
  CHECK_FALSE(g.index_of(123.456).has_value());
}

TEST_CASE("allocation at the shared cap boundary is accepted") {
  const BidGrid bids({0.5, 1.0, 2.0});
  const BudgetGrid budgets({0.0, 1.0, 2.0, 3.0});
  AllocationPlan plan{1, {{1.0, 3.0}, {1.0, 2.0}}};
  CHECK(validate_allocation(plan, two_campaigns(), bids, budgets, 5.0).empty());
}

TEST_CASE("cap overruns are reported as shared-budget violations") {
  const BidGrid bids({0.5, 1.0, 2.0});
  const BudgetGrid budgets({0.0, 1.0, 2.0, 3.0});
  AllocationPlan plan{1, {{1.0, 3.0}, {1.0, 3.0}}};
  const auto violations = validate_allocation(plan, two_campaigns(), bids, budgets, 5.0);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].kind == ConstraintKind::budget_cap);
  CHECK(violations[0].campaign_id.empty());
}

TEST_CASE("bids above the campaign maximum are range violations") {
  const BidGrid bids({0.5, 1.0, 2.5});
  const BudgetGrid budgets({0.0, 1.0, 2.0, 3.0});
  AllocationPlan plan{1, {{2.5, 1.0}, {1.0, 1.0}}};
  const auto violations = validate_allocation(plan, two_campaigns(), bids, budgets, 5.0);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].kind == ConstraintKind::bid_range);
  CHECK(violations[0].campaign_id == "C1");
}

TEST_CASE("zero budget marks a campaign inactive regardless of budget_min") {
  const BidGrid bids({0.5, 1.0});
  const BudgetGrid budgets({0.0, 1.0, 2.0});
  std::vector<CampaignConfig> configs{{"C1", 0.5, 1.0, 1.0, 2.0, 1.0, 1.0}};
  AllocationPlan plan{1, {{0.5, 0.0}}};
  CHECK(validate_allocation(plan, configs, bids, budgets, 2.0).empty());
}

TEST_CASE("random plans agree with an independent feasibility re-check") {
  const BidGrid bids = BidGrid::linspace(0.0, 2.0, 5);
  const BudgetGrid budgets = BudgetGrid::linspace(4.0, 5);
  const auto configs = two_campaigns();
  const double cap = 5.0;
  Rng rng(7);

  for (int trial = 0; trial < 500; ++trial) {
    AllocationPlan plan;
    plan.day = 1;
    for (std::size_t j = 0; j < configs.size(); ++j) {
      const double bid = bids[static_cast<std::size_t>(rng.next_u64() % bids.size())];
      const double budget =
          budgets[static_cast<std::size_t>(rng.next_u64() % budgets.size())];
      plan.arms.push_back({bid, budget});
    }

    // independent re-check, written from the constraint definitions
    bool feasible = true;
    double total = 0.0;
    for (std::size_t j = 0; j < plan.arms.size(); ++j) {
      const auto& arm = plan.arms[j];
      total += arm.budget;
      if (arm.bid < configs[j].bid_min || arm.bid > configs[j].bid_max) feasible = false;
      if (arm.budget != 0.0 &&
          (arm.budget < configs[j].budget_min || arm.budget > configs[j].budget_max))
        feasible = false;
    }
    if (total > cap * (1.0 + 1e-12)) feasible = false;

    CHECK(validate_allocation(plan, configs, bids, budgets, cap).empty() == feasible);
  }
}
