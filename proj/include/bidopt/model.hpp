#pragma once

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bidopt/core.hpp"
#include "bidopt/gp.hpp"

namespace bidopt {

enum class ModelMode { factorized, unfactorized };

/// Scales observed clicks up to the saturation level when the budget ran
/// out at hour g, assuming clicks arrive uniformly over the day. With no
/// exhaustion the observation already is the saturation sample.
inline double extrapolate_saturation(double clicks,
                                     std::optional<double> exhaust_hours) {
  if (!exhaust_hours) return clicks;
  const double g = *exhaust_hours;
  if (!(g > 0.0) || g > 24.0)
    throw std::invalid_argument("exhaustion hour must lie in (0, 24]");
  return (24.0 / g) * clicks;
}

/// Conjugate-normal posterior for the value per click, prior N(0, psi^2)
/// with observation noise xi. Zero-click days contribute nothing and do
/// not advance the observation count.
struct VpcPosterior {
  double prior_variance = 1.0;  // psi^2
  double noise = 1.0;           // xi
  double sum = 0.0;
  int count = 0;

  double mean() const {
    return prior_variance * sum / (noise + count * prior_variance);
  }
  double variance() const {
    return prior_variance * noise / (noise + count * prior_variance);
  }
  void add(double v) {
    sum += v;
    ++count;
  }
};

/// Per-campaign estimator state: either two 1-D GPs over the bid axis
/// (saturation clicks and clicks per unit budget) or one 2-D GP over
/// bid x budget, plus the value-per-click posterior.
class CampaignModel {
 public:
  struct Options {
    ModelMode mode = ModelMode::factorized;
    Gp::Options nsat_gp = Gp::Options::for_dims(1);
    Gp::Options esat_gp = Gp::Options::for_dims(1);
    Gp::Options joint_gp = Gp::Options::for_dims(2);
    double vpc_prior_variance = 1.0;
    double vpc_noise = 1.0;
    int window = 0;  // most recent observations fed to the GPs; 0 = all
  };

  struct HistoryEntry {
    double bid = 0.0;
    double budget = 0.0;
    ObservationRecord obs;
  };

  explicit CampaignModel(Options opts) : opts_(std::move(opts)) {
    if (opts_.window < 0) throw std::invalid_argument("window must be >= 0");
    vpc_ = {opts_.vpc_prior_variance, opts_.vpc_noise, 0.0, 0};
    if (!(vpc_.prior_variance > 0.0) || !(vpc_.noise > 0.0))
      throw std::invalid_argument("vpc prior variance and noise must be > 0");
    if (opts_.mode == ModelMode::factorized) {
      nsat_.emplace(opts_.nsat_gp);
      esat_.emplace(opts_.esat_gp);
    } else {
      joint_.emplace(opts_.joint_gp);
    }
  }

  ModelMode mode() const { return opts_.mode; }
  const Options& options() const { return opts_; }
  const std::vector<HistoryEntry>& history() const { return history_; }
  // throws bad_optional_access when asked for the other mode's estimator
  const Gp& nsat() const { return nsat_.value(); }
  const Gp& esat() const { return esat_.value(); }
  const Gp& joint() const { return joint_.value(); }
  double vpc_mean() const { return vpc_.mean(); }
  double vpc_variance() const { return vpc_.variance(); }
  int vpc_count() const { return vpc_.count; }

  /// Clicks reported at zero cost are normally a data error, but an
  /// auction without a reserve price can hand out genuinely free clicks;
  /// a caller that trusts its feed can accept them (saturation and value
  /// targets land, the clicks-per-cost target is skipped).
  enum class FreeClickPolicy { reject, accept };

  /// Ingests one day of feedback for the arm that was actually set.
  /// A zero-cost day without clicks skips the efficiency target.
  CampaignModel updated(double bid, double budget, const ObservationRecord& obs,
                        FreeClickPolicy policy = FreeClickPolicy::reject) const {
    if (obs.cost <= 0.0 && obs.clicks > 0 && policy == FreeClickPolicy::reject)
      throw std::invalid_argument("observation has clicks but zero cost");
    CampaignModel next = *this;
    next.history_.push_back({bid, budget, obs});
    if (obs.value_per_click) next.vpc_.add(*obs.value_per_click);

    const bool windowed =
        opts_.window > 0 &&
        next.history_.size() > static_cast<std::size_t>(opts_.window);
    if (windowed) {
      next.rebuild_gps();
    } else {
      next.feed_gps(next.history_.back());
    }
    return next;
  }

  /// Composed click prediction at one arm. Factorized means go through
  /// min{n_sat, y * e_sat}; a zero budget always predicts zero clicks and
  /// negative composed means clamp to zero.
  Gp::Posterior predict_clicks(double bid, double budget) const {
    if (budget <= 0.0) return {0.0, 0.0};
    if (opts_.mode == ModelMode::factorized) {
      const auto pn = nsat_->posterior(bid);
      const auto pe = esat_->posterior(bid);
      const double linear = budget * pe.mean;
      if (pn.mean <= linear)
        return {std::max(0.0, pn.mean), pn.variance};
      return {std::max(0.0, linear), budget * budget * pe.variance};
    }
    Eigen::Vector2d x(bid, budget);
    const auto p = joint_->posterior(x);
    return {std::max(0.0, p.mean), p.variance};
  }

 private:
  void feed_gps(const HistoryEntry& e) {
    if (opts_.mode == ModelMode::factorized) {
      const double n_sat =
          extrapolate_saturation(static_cast<double>(e.obs.clicks), e.obs.exhaust_hours);
      nsat_ = nsat_->with_observation(e.bid, n_sat);
      if (e.obs.cost > 0.0)
        esat_ = esat_->with_observation(e.bid, static_cast<double>(e.obs.clicks) / e.obs.cost);
    } else {
      Eigen::Vector2d x(e.bid, e.budget);
      joint_ = joint_->with_observation(x, static_cast<double>(e.obs.clicks));
    }
  }

  void rebuild_gps() {
    if (opts_.mode == ModelMode::factorized) {
      nsat_.emplace(opts_.nsat_gp);
      esat_.emplace(opts_.esat_gp);
    } else {
      joint_.emplace(opts_.joint_gp);
    }
    const std::size_t first =
        history_.size() - static_cast<std::size_t>(opts_.window);
    for (std::size_t i = first; i < history_.size(); ++i) feed_gps(history_[i]);
  }

  Options opts_;
  std::optional<Gp> nsat_, esat_, joint_;
  VpcPosterior vpc_;
  std::vector<HistoryEntry> history_;
};

}  // namespace bidopt
