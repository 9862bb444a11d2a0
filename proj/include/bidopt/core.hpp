#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bidopt {

/// Comparison tolerance for currency amounts. Grids are indexed by
/// position everywhere; float equality is only used to map external
/// values back onto grid points.
inline constexpr double kCurrencyRelTol = 1e-9;

inline bool currency_eq(double a, double b) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) <= kCurrencyRelTol * scale;
}

/// Finite set of bid levels, strictly increasing. Zero is a legal level
/// (a paused campaign); negative bids are not.
class BidGrid {
 public:
  explicit BidGrid(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("bid grid is empty");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i]) || values_[i] < 0.0)
        throw std::invalid_argument("bid levels must be finite and >= 0");
      if (i > 0 && values_[i] <= values_[i - 1])
        throw std::invalid_argument("bid levels must be strictly increasing");
    }
  }

  static BidGrid linspace(double lo, double hi, int count) {
    if (count < 1) throw std::invalid_argument("bid grid needs >= 1 level");
    std::vector<double> v(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
      v[static_cast<std::size_t>(i)] =
          count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
    return BidGrid(std::move(v));
  }

  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  std::optional<std::size_t> index_of(double bid) const {
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (currency_eq(values_[i], bid)) return i;
    return std::nullopt;
  }

 private:
  std::vector<double> values_;
};

/// Evenly spaced daily-budget levels starting at 0. The zero cell is what
/// lets the allocator leave a campaign dark for a day.
class BudgetGrid {
 public:
  explicit BudgetGrid(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("budget grid is empty");
    if (!currency_eq(values_.front(), 0.0))
      throw std::invalid_argument("budget grid must start at 0");
    values_.front() = 0.0;
    if (values_.size() > 1) {
      const double step = values_[1] - values_[0];
      if (step <= 0.0) throw std::invalid_argument("budget levels must increase");
      for (std::size_t i = 1; i < values_.size(); ++i) {
        const double d = values_[i] - values_[i - 1];
        if (std::abs(d - step) > kCurrencyRelTol * std::max(1.0, std::abs(step)))
          throw std::invalid_argument("budget levels must be evenly spaced");
      }
    }
  }

  static BudgetGrid linspace(double hi, int count) {
    if (count < 1) throw std::invalid_argument("budget grid needs >= 1 level");
    std::vector<double> v(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
      v[static_cast<std::size_t>(i)] = count == 1 ? 0.0 : hi * i / (count - 1);
    return BudgetGrid(std::move(v));
  }

  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  double spacing() const { return values_.size() > 1 ? values_[1] : 0.0; }

  std::optional<std::size_t> index_of(double budget) const {
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (currency_eq(values_[i], budget)) return i;
    return std::nullopt;
  }

 private:
  std::vector<double> values_;
};

/// Static per-campaign data: box constraints plus the value-per-click
/// prior hyperparameters.
struct CampaignConfig {
  std::string id;
  double bid_min = 0.0;
  double bid_max = 0.0;
  double budget_min = 0.0;
  double budget_max = 0.0;
  double vpc_prior_variance = 1.0;  // psi^2
  double vpc_noise = 1.0;           // xi

  void validate() const {
    if (bid_min > bid_max) throw std::invalid_argument(id + ": bid_min > bid_max");
    if (budget_min > budget_max)
      throw std::invalid_argument(id + ": budget_min > budget_max");
    if (!(vpc_prior_variance > 0.0))
      throw std::invalid_argument(id + ": vpc prior variance must be > 0");
    if (!(vpc_noise > 0.0)) throw std::invalid_argument(id + ": vpc noise must be > 0");
  }
};

/// Cumulative daily caps over the horizon.
struct SpendingPlan {
  std::vector<double> daily_caps;

  static SpendingPlan constant(double cap, int horizon) {
    if (cap < 0.0) throw std::invalid_argument("daily cap must be >= 0");
    return SpendingPlan{std::vector<double>(static_cast<std::size_t>(horizon), cap)};
  }

  double cap(int day) const {  // day is 1-based
    if (day < 1 || static_cast<std::size_t>(day) > daily_caps.size())
      throw std::out_of_range("spending plan has no cap for day " + std::to_string(day));
    return daily_caps[static_cast<std::size_t>(day - 1)];
  }

  void validate() const {
    for (double c : daily_caps)
      if (!(c >= 0.0)) throw std::invalid_argument("daily caps must be >= 0");
  }
};

/// One bid/daily-budget pair per campaign for a given day.
struct AllocationPlan {
  struct Arm {
    double bid = 0.0;
    double budget = 0.0;
  };
  int day = 1;
  std::vector<Arm> arms;  // indexed like the campaign list
};

/// One day of feedback for one campaign. The exhaustion hour is absent
/// when the budget survived the day; the value per click is absent on
/// zero-click days.
struct ObservationRecord {
  int day = 0;
  long long clicks = 0;
  double cost = 0.0;
  std::optional<double> exhaust_hours;     // in (0, 24] when present
  std::optional<double> value_per_click;
};

enum class ConstraintKind { budget_cap, bid_range, budget_range, off_grid };

inline const char* to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::budget_cap: return "budget_cap";
    case ConstraintKind::bid_range: return "bid_range";
    case ConstraintKind::budget_range: return "budget_range";
    case ConstraintKind::off_grid: return "off_grid";
  }
  return "?";
}

struct ConstraintViolation {
  std::string campaign_id;  // empty for the shared cap
  ConstraintKind kind;
  std::string detail;
};

/// Checks a plan against the shared cap, the per-campaign boxes and grid
/// membership. Violations are returned as data; an empty list means the
/// plan is feasible. A zero budget marks a campaign as inactive and is
/// always accepted regardless of its budget_min.
inline std::vector<ConstraintViolation> validate_allocation(
    const AllocationPlan& plan, const std::vector<CampaignConfig>& configs,
    const BidGrid& bid_grid, const BudgetGrid& budget_grid, double cap) {
  if (plan.arms.size() != configs.size())
    throw std::invalid_argument("plan/config campaign count mismatch");
  std::vector<ConstraintViolation> out;

  double total = 0.0;
  for (const auto& arm : plan.arms) total += arm.budget;
  if (total > cap && !currency_eq(total, cap))
    out.push_back({"", ConstraintKind::budget_cap,
                   "total budget " + std::to_string(total) + " exceeds cap " +
                       std::to_string(cap)});

  for (std::size_t j = 0; j < plan.arms.size(); ++j) {
    const auto& arm = plan.arms[j];
    const auto& cfg = configs[j];
    const bool inactive = currency_eq(arm.budget, 0.0);

    if (!bid_grid.index_of(arm.bid))
      out.push_back({cfg.id, ConstraintKind::off_grid, "bid not on grid"});
    if (!budget_grid.index_of(arm.budget))
      out.push_back({cfg.id, ConstraintKind::off_grid, "budget not on grid"});

    if ((arm.bid < cfg.bid_min && !currency_eq(arm.bid, cfg.bid_min)) ||
        (arm.bid > cfg.bid_max && !currency_eq(arm.bid, cfg.bid_max)))
      out.push_back({cfg.id, ConstraintKind::bid_range,
                     "bid " + std::to_string(arm.bid) + " outside [" +
                         std::to_string(cfg.bid_min) + ", " +
                         std::to_string(cfg.bid_max) + "]"});

    if (!inactive &&
        ((arm.budget < cfg.budget_min && !currency_eq(arm.budget, cfg.budget_min)) ||
         (arm.budget > cfg.budget_max && !currency_eq(arm.budget, cfg.budget_max))))
      out.push_back({cfg.id, ConstraintKind::budget_range,
                     "budget " + std::to_string(arm.budget) + " outside [" +
                         std::to_string(cfg.budget_min) + ", " +
                         std::to_string(cfg.budget_max) + "]"});
  }
  return out;
}

}  // namespace bidopt
