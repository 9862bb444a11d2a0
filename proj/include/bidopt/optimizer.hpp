#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bidopt/core.hpp"
#include "bidopt/sampling.hpp"

namespace bidopt {

class AllocationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Grid indices a campaign may use. Budgets are the contiguous range
/// [budget_lo, budget_hi] plus the implicit zero cell (campaign inactive),
/// which is always selectable.
struct FeasibleArms {
  std::vector<int> bids;  // ascending grid indices
  int budget_lo = 1;      // empty range when lo > hi
  int budget_hi = 0;
};

inline FeasibleArms feasible_arms(const BidGrid& bids, const BudgetGrid& budgets,
                                  const CampaignConfig& cfg) {
  FeasibleArms out;
  for (std::size_t i = 0; i < bids.size(); ++i) {
    const double x = bids[i];
    if ((x > cfg.bid_min || currency_eq(x, cfg.bid_min)) &&
        (x < cfg.bid_max || currency_eq(x, cfg.bid_max)))
      out.bids.push_back(static_cast<int>(i));
  }
  int lo = static_cast<int>(budgets.size());
  int hi = -1;
  for (std::size_t k = 0; k < budgets.size(); ++k) {
    const double y = budgets[k];
    if ((y > cfg.budget_min || currency_eq(y, cfg.budget_min)) &&
        (y < cfg.budget_max || currency_eq(y, cfg.budget_max))) {
      lo = std::min(lo, static_cast<int>(k));
      hi = std::max(hi, static_cast<int>(k));
    }
  }
  out.budget_lo = lo;
  out.budget_hi = hi;
  return out;
}

/// Per-campaign reduction of the arm table: for every budget level the
/// click-maximizing bid and the expected revenue at that pair. Budgets
/// outside the campaign's range carry zero value and are not selectable
/// (except the zero cell). A campaign with no feasible bid is excluded.
struct CampaignValueTable {
  std::vector<double> value;     // w(y) over budget index
  std::vector<int> bid_index;    // z(y); -1 when excluded
  std::vector<char> selectable;  // {0} plus the feasible range
  bool excluded = false;
};

inline CampaignValueTable build_value_table(const ArmEstimates& est,
                                            const FeasibleArms& feas,
                                            std::size_t budget_levels) {
  CampaignValueTable out;
  out.value.assign(budget_levels, 0.0);
  out.bid_index.assign(budget_levels, -1);
  out.selectable.assign(budget_levels, 0);
  out.selectable[0] = 1;
  if (feas.bids.empty()) {
    out.excluded = true;
    return out;
  }
  for (std::size_t k = 0; k < budget_levels; ++k) {
    int best = feas.bids.front();
    double best_clicks = est.clicks(best, static_cast<Eigen::Index>(k));
    for (int bi : feas.bids) {
      const double c = est.clicks(bi, static_cast<Eigen::Index>(k));
      if (c > best_clicks) {  // ties keep the lowest bid
        best_clicks = c;
        best = bi;
      }
    }
    out.bid_index[k] = best;
    const bool in_range = static_cast<int>(k) >= feas.budget_lo &&
                          static_cast<int>(k) <= feas.budget_hi;
    if (in_range) {
      out.selectable[k] = 1;
      out.value[k] = est.value_per_click * best_clicks;
    } else {
      out.value[k] = 0.0;
    }
  }
  out.value[0] = 0.0;  // zero budget yields nothing by definition
  return out;
}

/// Joint budget split plus the bid chosen at each campaign's level.
struct Allocation {
  std::vector<int> budget_index;
  std::vector<int> bid_index;  // -1 for an excluded campaign
  double value = 0.0;
};

/// Exact multiple-choice knapsack over the budget grid.
///
/// All arithmetic on budgets runs on grid indices (the grid is evenly
/// spaced and starts at 0), so the recursion never accumulates float
/// error. Ties prefer the smaller per-campaign budget and the smaller
/// total spend. A cap between grid points rounds down to the grid.
inline Allocation allocate(const std::vector<CampaignValueTable>& tables,
                           const BudgetGrid& budgets, double cap) {
  if (!(cap >= 0.0)) throw AllocationError("cap must be >= 0");
  const int n = static_cast<int>(tables.size());
  const int levels = static_cast<int>(budgets.size());
  for (const auto& t : tables) {
    if (static_cast<int>(t.value.size()) != levels)
      throw AllocationError("value table does not match the budget grid");
    if (std::find(t.selectable.begin(), t.selectable.end(), char(1)) ==
        t.selectable.end())
      throw AllocationError("a campaign has no selectable budget level");
  }

  const double step = budgets.spacing();
  int cap_index = 0;
  if (levels > 1 && step > 0.0) {
    cap_index = static_cast<int>(std::floor(cap / step + kCurrencyRelTol * 1e3));
    cap_index = std::min(cap_index, n * (levels - 1));
  }

  const double neg = -std::numeric_limits<double>::infinity();
  const int cols = cap_index + 1;
  std::vector<double> prev(static_cast<std::size_t>(cols), 0.0);
  std::vector<double> cur(static_cast<std::size_t>(cols), neg);
  std::vector<std::vector<int>> choice(
      static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(cols), -1));

  for (int j = 0; j < n; ++j) {
    const auto& t = tables[static_cast<std::size_t>(j)];
    for (int c = 0; c < cols; ++c) {
      double best = neg;
      int best_i = -1;
      const int imax = std::min(c, levels - 1);
      for (int i = 0; i <= imax; ++i) {  // ascending: ties keep low budget
        if (!t.selectable[static_cast<std::size_t>(i)]) continue;
        const double v = prev[static_cast<std::size_t>(c - i)] +
                         t.value[static_cast<std::size_t>(i)];
        if (v > best) {
          best = v;
          best_i = i;
        }
      }
      if (best_i < 0) throw AllocationError("no feasible split at this cap");
      cur[static_cast<std::size_t>(c)] = best;
      choice[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)] = best_i;
    }
    std::swap(prev, cur);
  }

  int best_c = 0;
  for (int c = 1; c < cols; ++c)  // ties keep the smaller total spend
    if (prev[static_cast<std::size_t>(c)] > prev[static_cast<std::size_t>(best_c)])
      best_c = c;

  Allocation out;
  out.value = prev[static_cast<std::size_t>(best_c)];
  out.budget_index.assign(static_cast<std::size_t>(n), 0);
  out.bid_index.assign(static_cast<std::size_t>(n), -1);
  int c = best_c;
  for (int j = n - 1; j >= 0; --j) {
    const int i = choice[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)];
    out.budget_index[static_cast<std::size_t>(j)] = i;
    out.bid_index[static_cast<std::size_t>(j)] =
        tables[static_cast<std::size_t>(j)].excluded
            ? -1
            : tables[static_cast<std::size_t>(j)].bid_index[static_cast<std::size_t>(i)];
    c -= i;
  }
  return out;
}

/// Materializes grid indices into bid/budget values for a given day.
inline AllocationPlan make_plan(const Allocation& alloc, const BidGrid& bids,
                                const BudgetGrid& budgets, int day) {
  AllocationPlan plan;
  plan.day = day;
  plan.arms.reserve(alloc.budget_index.size());
  for (std::size_t j = 0; j < alloc.budget_index.size(); ++j) {
    const int bi = alloc.bid_index[j];
    plan.arms.push_back(
        {bi >= 0 ? bids[static_cast<std::size_t>(bi)] : bids[0],
         budgets[static_cast<std::size_t>(alloc.budget_index[j])]});
  }
  return plan;
}

}  // namespace bidopt
