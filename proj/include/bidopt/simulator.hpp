#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bidopt/core.hpp"
#include "bidopt/optimizer.hpp"
#include "bidopt/rng.hpp"

namespace bidopt {

/// Ground-truth generator parameters for one campaign: daily auction
/// volume, the slate of competitors, slot prominence and the user model.
struct CampaignWorld {
  double auctions_mean = 1000.0;
  double auctions_std = 50.0;
  int slots = 5;        // gamma
  int advertisers = 7;  // delta, includes us; slots <= advertisers
  double comp_bid_mean = 0.5;
  double comp_bid_std = 0.1;
  std::vector<double> obs_prob;  // per slot, non-increasing
  double click_prob = 0.5;       // our quality rho
  double conv_prob = 0.05;
  double conversion_value = 1.0;

  double value_per_click() const { return conv_prob * conversion_value; }

  void validate() const {
    if (slots < 1 || advertisers < 1 || slots > advertisers)
      throw std::invalid_argument("need 1 <= slots <= advertisers");
    if (static_cast<int>(obs_prob.size()) != slots)
      throw std::invalid_argument("one observation probability per slot");
    for (std::size_t s = 0; s < obs_prob.size(); ++s) {
      if (obs_prob[s] < 0.0 || obs_prob[s] > 1.0)
        throw std::invalid_argument("observation probabilities must lie in [0,1]");
      if (s > 0 && obs_prob[s] > obs_prob[s - 1])
        throw std::invalid_argument("observation probabilities must not increase");
    }
    if (click_prob < 0.0 || click_prob > 1.0 || conv_prob < 0.0 || conv_prob > 1.0)
      throw std::invalid_argument("probabilities must lie in [0,1]");
  }
};

struct AuctionWorld {
  std::vector<CampaignWorld> campaigns;
};

struct DayOutcome {
  long long clicks = 0;
  long long conversions = 0;
  double cost = 0.0;
  std::optional<double> exhaust_hours;
  double revenue = 0.0;
};

struct AuctionOutcome {
  int slot = -1;  // 0-based; -1 when we lose
  double payment_per_click = 0.0;
};

/// One VCG position auction under the separable click model: slots go to
/// the highest bid*quality scores, a winner's click rate in slot s is
/// obs_prob[s]*quality, and the per-click price is the externality our
/// presence imposes on the others divided by our expected clicks.
inline AuctionOutcome run_auction(double our_bid, double our_quality,
                                  const std::vector<double>& competitor_scores,
                                  int slots, const std::vector<double>& obs_prob) {
  const double ours = our_bid * our_quality;
  int rank = 0;  // number of competitors strictly ahead of us
  for (double w : competitor_scores)
    if (w > ours) ++rank;
  if (rank >= slots) return {};

  // Scores of the competitors displaced one slot down by our presence:
  // those ranked below us within the slate, plus the first loser.
  thread_local std::vector<double> below;
  below.clear();
  for (double w : competitor_scores)
    if (w <= ours) below.push_back(w);
  std::sort(below.begin(), below.end(), std::greater<double>());

  double externality = 0.0;
  for (int s = rank + 1; s < slots; ++s) {
    const std::size_t idx = static_cast<std::size_t>(s - rank - 1);
    if (idx >= below.size()) break;
    externality += (obs_prob[static_cast<std::size_t>(s - 1)] -
                    obs_prob[static_cast<std::size_t>(s)]) *
                   below[idx];
  }
  const std::size_t loser = static_cast<std::size_t>(slots - rank - 1);
  if (loser < below.size())
    externality += obs_prob[static_cast<std::size_t>(slots - 1)] * below[loser];

  const double expected_clicks = obs_prob[static_cast<std::size_t>(rank)] * our_quality;
  const double payment =
      expected_clicks > 0.0 ? std::max(0.0, externality) / expected_clicks : 0.0;
  return {rank, payment};
}

namespace detail {

inline long long draw_auction_count(const CampaignWorld& w, Rng& rng) {
  const double k = std::llround(rng.normal(w.auctions_mean, w.auctions_std));
  return static_cast<long long>(std::max(0.0, k));
}

inline void draw_competitor_scores(const CampaignWorld& w, Rng& rng,
                                   std::vector<double>& scores) {
  scores.resize(static_cast<std::size_t>(w.advertisers - 1));
  for (auto& s : scores) {
    const double bid = rng.normal(w.comp_bid_mean, w.comp_bid_std);
    const double quality = rng.uniform();
    s = bid * quality;
  }
}

/// Cumulative cost after each click of a full day at one bid with no
/// budget limit, plus the arrival hour of each click. Truncating this
/// sequence at a budget reproduces exactly what a budget-limited day
/// would have produced from the same draws.
struct DayClickTrace {
  std::vector<double> cost_after;
  std::vector<double> hour;
};

inline DayClickTrace simulate_click_trace(const CampaignWorld& w, double bid,
                                          Rng& rng) {
  DayClickTrace trace;
  thread_local std::vector<double> scores;
  const long long n_auctions = draw_auction_count(w, rng);
  double cum = 0.0;
  for (long long i = 0; i < n_auctions; ++i) {
    draw_competitor_scores(w, rng, scores);
    const auto out = run_auction(bid, w.click_prob, scores, w.slots, w.obs_prob);
    if (out.slot < 0) continue;
    const double p_click =
        w.obs_prob[static_cast<std::size_t>(out.slot)] * w.click_prob;
    if (rng.uniform() < p_click) {
      cum += out.payment_per_click;
      trace.cost_after.push_back(cum);
      trace.hour.push_back(24.0 * (static_cast<double>(i) + 0.5) /
                           static_cast<double>(n_auctions));
    }
  }
  return trace;
}

}  // namespace detail

/// Plays out one day for every campaign under the given plan: auctions
/// arrive spread over 24 hours, each click pays its VCG price, and the
/// campaign leaves the market once the paid total reaches its budget (the
/// crossing click is honored, so cost can exceed the budget by at most
/// one payment). Zero-budget campaigns never enter.
inline std::pair<std::vector<DayOutcome>, std::vector<ObservationRecord>>
simulate_day(const AuctionWorld& world, const AllocationPlan& plan, Rng& rng) {
  if (world.campaigns.size() != plan.arms.size())
    throw std::invalid_argument("plan/world campaign count mismatch");
  std::vector<DayOutcome> outcomes(world.campaigns.size());
  std::vector<ObservationRecord> records(world.campaigns.size());

  for (std::size_t j = 0; j < world.campaigns.size(); ++j) {
    const auto& w = world.campaigns[j];
    const auto& arm = plan.arms[j];
    DayOutcome& day = outcomes[j];

    if (arm.budget > 0.0) {
      thread_local std::vector<double> scores;
      const long long n_auctions = detail::draw_auction_count(w, rng);
      double remaining = arm.budget;
      for (long long i = 0; i < n_auctions && remaining > 0.0; ++i) {
        detail::draw_competitor_scores(w, rng, scores);
        const auto out = run_auction(arm.bid, w.click_prob, scores, w.slots, w.obs_prob);
        if (out.slot < 0) continue;
        const double p_click =
            w.obs_prob[static_cast<std::size_t>(out.slot)] * w.click_prob;
        if (rng.uniform() < p_click) {
          ++day.clicks;
          day.cost += out.payment_per_click;
          remaining -= out.payment_per_click;
          if (rng.uniform() < w.conv_prob) {
            ++day.conversions;
            day.revenue += w.conversion_value;
          }
          if (remaining <= 0.0)
            day.exhaust_hours = 24.0 * (static_cast<double>(i) + 0.5) /
                                static_cast<double>(n_auctions);
        }
      }
    }

    ObservationRecord& rec = records[j];
    rec.day = plan.day;
    rec.clicks = day.clicks;
    rec.cost = day.cost;
    rec.exhaust_hours = day.exhaust_hours;
    if (day.clicks > 0)
      rec.value_per_click = day.revenue / static_cast<double>(day.clicks);
    outcomes[j] = day;
  }
  return {outcomes, records};
}

/// Monte-Carlo ground truth for one campaign: expected clicks over the
/// whole bid x budget grid, with standard errors. One simulated day per
/// (bid, replication) serves every budget level via truncation.
struct TrueClickTable {
  Eigen::MatrixXd mean;  // bid index x budget index
  Eigen::MatrixXd se;
};

inline TrueClickTable true_click_table(const CampaignWorld& w, const BidGrid& bids,
                                       const BudgetGrid& budgets, int replications,
                                       std::uint64_t seed) {
  const Eigen::Index nx = static_cast<Eigen::Index>(bids.size());
  const Eigen::Index ny = static_cast<Eigen::Index>(budgets.size());
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(nx, ny);
  Eigen::MatrixXd sum2 = Eigen::MatrixXd::Zero(nx, ny);

  for (Eigen::Index xi = 0; xi < nx; ++xi) {
    Rng rng(substream_seed(seed, {stream::truth, static_cast<std::uint64_t>(xi)}));
    for (int r = 0; r < replications; ++r) {
      const auto trace = detail::simulate_click_trace(w, bids[static_cast<std::size_t>(xi)], rng);
      for (Eigen::Index yi = 0; yi < ny; ++yi) {
        const double y = budgets[static_cast<std::size_t>(yi)];
        long long clicks = 0;
        if (y > 0.0) {
          // a click lands iff the budget was not yet exhausted before it
          for (std::size_t c = 0; c < trace.cost_after.size(); ++c) {
            const double before = c == 0 ? 0.0 : trace.cost_after[c - 1];
            if (before < y)
              ++clicks;
            else
              break;
          }
        }
        sum(xi, yi) += static_cast<double>(clicks);
        sum2(xi, yi) += static_cast<double>(clicks) * static_cast<double>(clicks);
      }
    }
  }

  TrueClickTable out;
  const double r = static_cast<double>(replications);
  out.mean = sum / r;
  out.se = ((sum2 / r - out.mean.cwiseProduct(out.mean)).cwiseMax(0.0) / r).cwiseSqrt();
  return out;
}

inline double true_expected_clicks(const CampaignWorld& w, double bid, double budget,
                                   int replications, std::uint64_t seed) {
  Rng rng(substream_seed(seed, {stream::truth}));
  double sum = 0.0;
  for (int r = 0; r < replications; ++r) {
    const auto trace = detail::simulate_click_trace(w, bid, rng);
    long long clicks = 0;
    if (budget > 0.0) {
      for (std::size_t c = 0; c < trace.cost_after.size(); ++c) {
        const double before = c == 0 ? 0.0 : trace.cost_after[c - 1];
        if (before < budget)
          ++clicks;
        else
          break;
      }
    }
    sum += static_cast<double>(clicks);
  }
  return sum / static_cast<double>(replications);
}

/// Clairvoyant benchmark: the exact knapsack run on the Monte-Carlo click
/// tables with the true values per click.
struct ClairvoyantSolution {
  Allocation alloc;
  double value = 0.0;
  double se = 0.0;  // Monte-Carlo error of the optimal value
};

inline ClairvoyantSolution true_optimum(const AuctionWorld& world,
                                        const std::vector<TrueClickTable>& tables,
                                        const std::vector<CampaignConfig>& configs,
                                        const BidGrid& bids, const BudgetGrid& budgets,
                                        double cap) {
  std::vector<CampaignValueTable> value_tables;
  value_tables.reserve(world.campaigns.size());
  for (std::size_t j = 0; j < world.campaigns.size(); ++j) {
    ArmEstimates est{tables[j].mean, world.campaigns[j].value_per_click()};
    value_tables.push_back(
        build_value_table(est, feasible_arms(bids, budgets, configs[j]), budgets.size()));
  }
  ClairvoyantSolution out;
  out.alloc = allocate(value_tables, budgets, cap);
  out.value = out.alloc.value;
  double var = 0.0;
  for (std::size_t j = 0; j < world.campaigns.size(); ++j) {
    const double v = world.campaigns[j].value_per_click();
    const double s =
        tables[j].se(out.alloc.bid_index[j] < 0 ? 0 : out.alloc.bid_index[j],
                     out.alloc.budget_index[j]);
    var += v * v * s * s;
  }
  out.se = std::sqrt(var);
  return out;
}

/// Surrogate random setting: keeps the volume/slate shape of the base
/// world and redraws the competitive landscape from uniform ranges that
/// bracket the reference values.
inline AuctionWorld generate_random_setting(const AuctionWorld& base, Rng& rng) {
  AuctionWorld out = base;
  for (auto& w : out.campaigns) {
    w.comp_bid_mean = rng.uniform(0.3, 0.6);
    w.comp_bid_std = rng.uniform(0.05, 0.5);
    w.click_prob = rng.uniform(0.2, 0.5);
    for (auto& p : w.obs_prob) p = rng.uniform(0.2, 0.95);
    std::sort(w.obs_prob.begin(), w.obs_prob.end(), std::greater<double>());
    w.validate();
  }
  return out;
}

}  // namespace bidopt
