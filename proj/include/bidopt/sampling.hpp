#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "bidopt/core.hpp"
#include "bidopt/model.hpp"
#include "bidopt/rng.hpp"

namespace bidopt {

enum class Algorithm { f_ts, f_ucb, u_ts, u_ucb, f_mean };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::f_ts: return "f-ts";
    case Algorithm::f_ucb: return "f-ucb";
    case Algorithm::u_ts: return "u-ts";
    case Algorithm::u_ucb: return "u-ucb";
    case Algorithm::f_mean: return "f-mean";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "f-ts") return Algorithm::f_ts;
  if (s == "f-ucb") return Algorithm::f_ucb;
  if (s == "u-ts") return Algorithm::u_ts;
  if (s == "u-ucb") return Algorithm::u_ucb;
  if (s == "f-mean") return Algorithm::f_mean;
  throw std::invalid_argument("unknown algorithm '" + s +
                              "' (expected f-ts, f-ucb, u-ts, u-ucb or f-mean)");
}

inline bool is_factorized(Algorithm a) {
  return a == Algorithm::f_ts || a == Algorithm::f_ucb || a == Algorithm::f_mean;
}

/// The f-ts guarantee is stated with one confidence schedule and proved
/// with another; the stated one is the default and the proof's variant
/// stays available.
enum class FtsSchedule { statement, proof };

/// Confidence-width pair (b_t, b'_t) for clicks and value per click.
struct ExplorationBonus {
  double b = 0.0;
  double b_prime = 0.0;
};

/// Exploration schedule for day t with N campaigns and M = |X||Y| arms.
/// Log arguments below 1 clamp the width at 0.
inline ExplorationBonus schedule_b(Algorithm algo, int n_campaigns, int n_arms,
                                   int day, double delta,
                                   FtsSchedule fts = FtsSchedule::statement) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("delta must lie in (0, 1)");
  if (n_campaigns < 1 || n_arms < 1 || day < 1)
    throw std::invalid_argument("schedule needs N, M, t >= 1");

  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double n = n_campaigns;
  const double m = n_arms;
  const double t2 = static_cast<double>(day) * day;
  const auto width = [](double factor, double arg) {
    return factor * std::max(0.0, std::log(arg));
  };

  switch (algo) {
    case Algorithm::u_ucb:
      return {width(2.0, pi2 * n * m * t2 / (3.0 * delta)),
              width(2.0, pi2 * n * t2 / (3.0 * delta))};
    case Algorithm::u_ts:
      return {width(8.0, 2.0 * n * m * t2 / (3.0 * delta)),
              width(8.0, 2.0 * n * t2 / (3.0 * delta))};
    case Algorithm::f_ucb:
      return {width(2.0, pi2 * n * m * t2 / (2.0 * delta)),
              width(2.0, pi2 * n * t2 / (2.0 * delta))};
    case Algorithm::f_ts:
      if (fts == FtsSchedule::statement)
        return {width(2.0, pi2 * n * m * t2 / (2.0 * delta)),
                width(2.0, pi2 * n * t2 / (2.0 * delta))};
      return {width(8.0, 2.0 * n * m * t2 / (2.0 * delta)),
              width(8.0, 2.0 * n * t2 / (2.0 * delta))};
    case Algorithm::f_mean:
      return {0.0, 0.0};
  }
  return {0.0, 0.0};
}

/// Point estimates handed to the optimizer: clicks(i, k) over bid index i
/// and budget index k, plus one value-per-click scalar.
struct ArmEstimates {
  Eigen::MatrixXd clicks;
  double value_per_click = 0.0;
};

namespace detail {

inline Eigen::MatrixXd compose_factorized(const Eigen::VectorXd& n_sat,
                                          const Eigen::VectorXd& e_sat,
                                          const BudgetGrid& budgets) {
  Eigen::MatrixXd out(n_sat.size(), static_cast<Eigen::Index>(budgets.size()));
  for (Eigen::Index i = 0; i < n_sat.size(); ++i)
    for (std::size_t k = 0; k < budgets.size(); ++k) {
      const double y = budgets[k];
      out(i, static_cast<Eigen::Index>(k)) =
          y <= 0.0 ? 0.0 : std::max(0.0, std::min(n_sat[i], y * e_sat[i]));
    }
  return out;
}

inline Eigen::MatrixXd bid_points(const BidGrid& bids) {
  Eigen::MatrixXd pts(1, static_cast<Eigen::Index>(bids.size()));
  for (std::size_t i = 0; i < bids.size(); ++i)
    pts(0, static_cast<Eigen::Index>(i)) = bids[i];
  return pts;
}

inline Eigen::MatrixXd arm_points(const BidGrid& bids, const BudgetGrid& budgets) {
  Eigen::MatrixXd pts(2, static_cast<Eigen::Index>(bids.size() * budgets.size()));
  Eigen::Index c = 0;
  for (std::size_t i = 0; i < bids.size(); ++i)
    for (std::size_t k = 0; k < budgets.size(); ++k) {
      pts(0, c) = bids[i];
      pts(1, c) = budgets[k];
      ++c;
    }
  return pts;
}

inline Eigen::MatrixXd clamp_unfactorized(const Eigen::VectorXd& values,
                                          const BidGrid& bids,
                                          const BudgetGrid& budgets) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(bids.size()),
                      static_cast<Eigen::Index>(budgets.size()));
  Eigen::Index c = 0;
  for (std::size_t i = 0; i < bids.size(); ++i)
    for (std::size_t k = 0; k < budgets.size(); ++k) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          budgets[k] <= 0.0 ? 0.0 : std::max(0.0, values[c]);
      ++c;
    }
  return out;
}

/// One joint draw from the posterior over the given points (used when the
/// Thompson sampler is configured for a consistent function sample).
inline Eigen::VectorXd joint_gaussian_draw(const Gp& gp,
                                           const Eigen::MatrixXd& points,
                                           const Eigen::VectorXd& means,
                                           Rng& rng) {
  Eigen::MatrixXd cov = gp.posterior_covariance(points);
  cov.diagonal().array() += 1e-12 * (1.0 + cov.diagonal().maxCoeff());
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  Eigen::VectorXd z(points.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return means + llt.matrixL() * z;
}

}  // namespace detail

/// Optimistic estimates: posterior means plus bonus-weighted widths. The
/// exploration_scale knob multiplies the widths and defaults to 1.
inline ArmEstimates sample_ucb(const CampaignModel& model, const BidGrid& bids,
                               const BudgetGrid& budgets,
                               const ExplorationBonus& bonus,
                               double exploration_scale = 1.0) {
  const double wb = exploration_scale * std::sqrt(bonus.b);
  const double wv = exploration_scale * std::sqrt(bonus.b_prime);
  ArmEstimates out;
  out.value_per_click =
      std::max(0.0, model.vpc_mean() + wv * std::sqrt(model.vpc_variance()));

  if (model.mode() == ModelMode::factorized) {
    const Eigen::MatrixXd pts = detail::bid_points(bids);
    Eigen::VectorXd mu, var, eta, svar;
    model.nsat().posterior_many(pts, mu, var);
    model.esat().posterior_many(pts, eta, svar);
    const Eigen::VectorXd un = mu + wb * var.cwiseSqrt();
    const Eigen::VectorXd ue = eta + wb * svar.cwiseSqrt();
    out.clicks = detail::compose_factorized(un, ue, budgets);
  } else {
    const Eigen::MatrixXd pts = detail::arm_points(bids, budgets);
    Eigen::VectorXd mu, var;
    model.joint().posterior_many(pts, mu, var);
    const Eigen::VectorXd u = mu + wb * var.cwiseSqrt();
    out.clicks = detail::clamp_unfactorized(u, bids, budgets);
  }
  return out;
}

/// Thompson estimates: one independent draw from each marginal posterior
/// (per bid for the factorized GPs, per arm for the joint GP), plus one
/// value-per-click draw. Setting joint_draw samples a consistent function
/// realization instead of independent marginals.
inline ArmEstimates sample_ts(const CampaignModel& model, const BidGrid& bids,
                              const BudgetGrid& budgets, Rng& rng,
                              bool joint_draw = false) {
  ArmEstimates out;
  if (model.mode() == ModelMode::factorized) {
    const Eigen::MatrixXd pts = detail::bid_points(bids);
    Eigen::VectorXd mu, var, eta, svar;
    model.nsat().posterior_many(pts, mu, var);
    model.esat().posterior_many(pts, eta, svar);
    Eigen::VectorXd tn(mu.size()), te(eta.size());
    if (joint_draw) {
      tn = detail::joint_gaussian_draw(model.nsat(), pts, mu, rng);
      te = detail::joint_gaussian_draw(model.esat(), pts, eta, rng);
    } else {
      for (Eigen::Index i = 0; i < tn.size(); ++i)
        tn[i] = rng.normal(mu[i], std::sqrt(var[i]));
      for (Eigen::Index i = 0; i < te.size(); ++i)
        te[i] = rng.normal(eta[i], std::sqrt(svar[i]));
    }
    out.clicks = detail::compose_factorized(tn, te, budgets);
  } else {
    const Eigen::MatrixXd pts = detail::arm_points(bids, budgets);
    Eigen::VectorXd mu, var;
    model.joint().posterior_many(pts, mu, var);
    Eigen::VectorXd theta(mu.size());
    if (joint_draw) {
      theta = detail::joint_gaussian_draw(model.joint(), pts, mu, rng);
    } else {
      for (Eigen::Index i = 0; i < theta.size(); ++i)
        theta[i] = rng.normal(mu[i], std::sqrt(var[i]));
    }
    out.clicks = detail::clamp_unfactorized(theta, bids, budgets);
  }
  out.value_per_click =
      std::max(0.0, rng.normal(model.vpc_mean(), std::sqrt(model.vpc_variance())));
  return out;
}

/// Plain posterior means; the pure-exploitation baseline.
inline ArmEstimates sample_mean(const CampaignModel& model, const BidGrid& bids,
                                const BudgetGrid& budgets) {
  return sample_ucb(model, bids, budgets, {0.0, 0.0});
}

}  // namespace bidopt
