#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bidopt/config.hpp"
#include "bidopt/core.hpp"
#include "bidopt/model.hpp"
#include "bidopt/optimizer.hpp"
#include "bidopt/rng.hpp"
#include "bidopt/sampling.hpp"
#include "bidopt/simulator.hpp"

namespace bidopt {

struct DayRecord {
  int day = 1;
  Allocation alloc;
  AllocationPlan plan;
  std::vector<DayOutcome> outcomes;
  std::vector<double> expected_by_campaign;
  double expected_reward = 0.0;  // r_mu of the chosen superarm
  double cum_regret = 0.0;
  bool infeasible = false;
};

struct ReplicateTrace {
  int replicate = 0;
  std::vector<DayRecord> days;
};

/// Cumulative pseudo-regret series R_t = sum_{h<=t} (r* - r_mu(S_h)).
inline std::vector<double> pseudo_regret(const ReplicateTrace& trace, double r_star) {
  std::vector<double> out;
  out.reserve(trace.days.size());
  double cum = 0.0;
  for (const auto& d : trace.days) {
    cum += r_star - d.expected_reward;
    out.push_back(cum);
  }
  return out;
}

/// Efficiency index V = P_T / (T r*); absent when r* is zero.
inline std::optional<double> efficiency_index(const ReplicateTrace& trace,
                                              double r_star) {
  if (r_star == 0.0 || trace.days.empty()) return std::nullopt;
  double total = 0.0;
  for (const auto& d : trace.days) total += d.expected_reward;
  return total / (static_cast<double>(trace.days.size()) * r_star);
}

inline double cumulative_expected_reward(const ReplicateTrace& trace, int upto_day) {
  double total = 0.0;
  for (const auto& d : trace.days)
    if (d.day <= upto_day) total += d.expected_reward;
  return total;
}

struct MeanCi {
  double mean = 0.0;
  double se = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

inline MeanCi mean_ci(const std::vector<double>& xs) {
  MeanCi out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  const double var = xs.size() > 1 ? ss / static_cast<double>(xs.size() - 1) : 0.0;
  out.se = std::sqrt(var / static_cast<double>(xs.size()));
  out.lo = out.mean - 1.96 * out.se;
  out.hi = out.mean + 1.96 * out.se;
  return out;
}

/// Fraction of paired runs each algorithm wins on cumulative reward;
/// exact ties go to the earlier algorithm, so the fractions always
/// partition the runs.
inline std::vector<double> best_run_fraction(
    const std::vector<std::vector<double>>& rewards_by_algo) {
  if (rewards_by_algo.empty()) return {};
  const std::size_t runs = rewards_by_algo.front().size();
  std::vector<double> wins(rewards_by_algo.size(), 0.0);
  for (std::size_t r = 0; r < runs; ++r) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < rewards_by_algo.size(); ++a)
      if (rewards_by_algo[a][r] > rewards_by_algo[best][r]) best = a;
    wins[best] += 1.0;
  }
  for (auto& w : wins) w /= static_cast<double>(runs);
  return wins;
}

namespace detail {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index must
/// write only to its own slot; the schedule order carries no information.
inline void parallel_for_index(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Binds a config to its derived objects (grids, world, ground truth) and
/// drives the day loop: estimate, sample, optimize, pull.
class Experiment {
 public:
  explicit Experiment(RunConfig cfg,
                      int threads = static_cast<int>(std::thread::hardware_concurrency()))
      : cfg_(std::move(cfg)),
        bids_(cfg_.bid_grid.bid_grid()),
        budgets_(cfg_.budget_grid.budget_grid()),
        world_(cfg_.world()),
        configs_(cfg_.campaign_configs()),
        plan_(cfg_.plan()),
        threads_(std::max(1, threads)) {
    cfg_.validate();
    feasible_.reserve(configs_.size());
    for (const auto& c : configs_) feasible_.push_back(feasible_arms(bids_, budgets_, c));

    truth_.resize(world_.campaigns.size());
    detail::parallel_for_index(
        static_cast<int>(world_.campaigns.size()), threads_, [&](int j) {
          truth_[static_cast<std::size_t>(j)] = true_click_table(
              world_.campaigns[static_cast<std::size_t>(j)], bids_, budgets_,
              cfg_.truth_replications,
              substream_seed(cfg_.seed, {stream::truth, static_cast<std::uint64_t>(j)}));
        });
    optimum_ = true_optimum(world_, truth_, configs_, bids_, budgets_,
                            plan_.daily_caps.front());
  }

  const RunConfig& config() const { return cfg_; }
  const BidGrid& bids() const { return bids_; }
  const BudgetGrid& budgets() const { return budgets_; }
  const AuctionWorld& world() const { return world_; }
  const std::vector<TrueClickTable>& truth() const { return truth_; }
  const ClairvoyantSolution& optimum() const { return optimum_; }
  double r_star() const { return optimum_.value; }

  /// Expected revenue of a joint choice under the ground-truth tables.
  double expected_reward(const Allocation& alloc) const {
    double total = 0.0;
    for (std::size_t j = 0; j < alloc.budget_index.size(); ++j)
      total += expected_campaign_reward(j, alloc);
    return total;
  }

  double expected_campaign_reward(std::size_t j, const Allocation& alloc) const {
    const int bi = alloc.bid_index[j];
    const int yi = alloc.budget_index[j];
    if (yi == 0 || bi < 0) return 0.0;
    return world_.campaigns[j].value_per_click() * truth_[j].mean(bi, yi);
  }

  /// Fresh prior models for one algorithm (factorized or joint per its
  /// model family), built from the config hyperparameters.
  std::vector<CampaignModel> initial_models(Algorithm algo) const {
    std::vector<CampaignModel> models;
    models.reserve(cfg_.campaigns.size());
    for (const auto& spec : cfg_.campaigns)
      models.emplace_back(model_options(spec, algo));
    return models;
  }

  CampaignModel::Options model_options(const CampaignSpec& spec, Algorithm algo) const {
    CampaignModel::Options opts;
    opts.mode = is_factorized(algo) ? ModelMode::factorized : ModelMode::unfactorized;
    opts.vpc_prior_variance = spec.limits.vpc_prior_variance;
    opts.vpc_noise = spec.limits.vpc_noise;
    opts.window = cfg_.sliding_window;

    const double bid_lo = bids_.values().front();
    const double bid_hi = bids_.values().back();
    const double budget_lo = budgets_.values().front();
    const double budget_hi = budgets_.values().back();

    auto gp1 = Gp::Options::for_dims(1);
    gp1.length_scales = Eigen::VectorXd::Constant(1, cfg_.gp.length_scale_fraction);
    gp1.amplitude = cfg_.gp.amplitude;
    gp1.noise = cfg_.gp.noise;
    gp1.input_lo = Eigen::VectorXd::Constant(1, bid_lo);
    gp1.input_hi = Eigen::VectorXd::Constant(1, bid_hi);

    opts.nsat_gp = gp1;
    opts.nsat_gp.target_scale = spec.nsat_scale_or_default();
    opts.esat_gp = gp1;
    opts.esat_gp.target_scale = spec.esat_scale_or_default();

    auto gp2 = Gp::Options::for_dims(2);
    gp2.length_scales = Eigen::VectorXd::Constant(2, cfg_.gp.length_scale_fraction);
    gp2.amplitude = cfg_.gp.amplitude;
    gp2.noise = cfg_.gp.noise;
    gp2.input_lo = (Eigen::VectorXd(2) << bid_lo, budget_lo).finished();
    gp2.input_hi = (Eigen::VectorXd(2) << bid_hi, budget_hi).finished();
    gp2.target_scale = spec.nsat_scale_or_default();
    opts.joint_gp = gp2;
    return opts;
  }

  ReplicateTrace run_replicate(Algorithm algo, int replicate) const {
    return run_replicate(algo, replicate, initial_models(algo));
  }

  /// One full episode: day 1 acts on the prior models, later days ingest
  /// the previous day's feedback first. An infeasible optimization day is
  /// recorded and pulled as the empty allocation. The end-of-horizon
  /// models can be captured for persistence and later resumption.
  ReplicateTrace run_replicate(Algorithm algo, int replicate,
                               std::vector<CampaignModel> models,
                               std::vector<CampaignModel>* final_models = nullptr) const {
    const int horizon = cfg_.horizon;
    const int n = static_cast<int>(cfg_.campaigns.size());
    const int arms = static_cast<int>(bids_.size() * budgets_.size());

    Rng world_rng(substream_seed(
        cfg_.seed, {stream::world, static_cast<std::uint64_t>(replicate)}));
    std::vector<Rng> sampler_rngs;
    sampler_rngs.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
      sampler_rngs.emplace_back(substream_seed(
          cfg_.seed, {stream::sampler, static_cast<std::uint64_t>(replicate),
                      static_cast<std::uint64_t>(j)}));

    ReplicateTrace trace;
    trace.replicate = replicate;
    trace.days.reserve(static_cast<std::size_t>(horizon));

    AllocationPlan prev_plan;
    std::vector<ObservationRecord> prev_records;
    double cum_regret = 0.0;

    for (int t = 1; t <= horizon; ++t) {
      if (t > 1)
        for (int j = 0; j < n; ++j)
          models[static_cast<std::size_t>(j)] =
              models[static_cast<std::size_t>(j)].updated(
                  prev_plan.arms[static_cast<std::size_t>(j)].bid,
                  prev_plan.arms[static_cast<std::size_t>(j)].budget,
                  prev_records[static_cast<std::size_t>(j)],
                  // the in-process auction has no reserve price, so a day
                  // of free clicks is a valid observation here
                  CampaignModel::FreeClickPolicy::accept);

      std::vector<CampaignValueTable> tables;
      tables.reserve(static_cast<std::size_t>(n));
      for (int j = 0; j < n; ++j) {
        const auto& model = models[static_cast<std::size_t>(j)];
        ArmEstimates est;
        switch (algo) {
          case Algorithm::f_mean:
            est = sample_mean(model, bids_, budgets_);
            break;
          case Algorithm::f_ucb:
          case Algorithm::u_ucb:
            est = sample_ucb(model, bids_, budgets_,
                             schedule_b(algo, n, arms, t, cfg_.delta, cfg_.fts_schedule),
                             cfg_.exploration_scale);
            break;
          case Algorithm::f_ts:
          case Algorithm::u_ts:
            est = sample_ts(model, bids_, budgets_,
                            sampler_rngs[static_cast<std::size_t>(j)],
                            cfg_.ts_joint_draw);
            break;
        }
        tables.push_back(
            build_value_table(est, feasible_[static_cast<std::size_t>(j)], budgets_.size()));
      }

      DayRecord rec;
      rec.day = t;
      try {
        rec.alloc = allocate(tables, budgets_, plan_.cap(t));
      } catch (const AllocationError&) {
        rec.infeasible = true;
        rec.alloc.budget_index.assign(static_cast<std::size_t>(n), 0);
        rec.alloc.bid_index.assign(static_cast<std::size_t>(n), 0);
        rec.alloc.value = 0.0;
        for (int j = 0; j < n; ++j)
          rec.alloc.bid_index[static_cast<std::size_t>(j)] =
              tables[static_cast<std::size_t>(j)].bid_index[0];
      }
      rec.plan = make_plan(rec.alloc, bids_, budgets_, t);

      auto [outcomes, records] = simulate_day(world_, rec.plan, world_rng);
      rec.outcomes = std::move(outcomes);
      rec.expected_by_campaign.resize(static_cast<std::size_t>(n));
      for (int j = 0; j < n; ++j)
        rec.expected_by_campaign[static_cast<std::size_t>(j)] =
            expected_campaign_reward(static_cast<std::size_t>(j), rec.alloc);
      rec.expected_reward = 0.0;
      for (double v : rec.expected_by_campaign) rec.expected_reward += v;
      cum_regret += optimum_.value - rec.expected_reward;
      rec.cum_regret = cum_regret;

      prev_plan = rec.plan;
      prev_records = std::move(records);
      trace.days.push_back(std::move(rec));
    }
    if (final_models) *final_models = std::move(models);
    return trace;
  }

  /// All replicates; execution order is a scheduling detail because every
  /// replicate derives its own random streams from (seed, replicate).
  std::vector<ReplicateTrace> run(Algorithm algo) const {
    std::vector<ReplicateTrace> traces(static_cast<std::size_t>(cfg_.replications));
    detail::parallel_for_index(cfg_.replications, threads_, [&](int r) {
      traces[static_cast<std::size_t>(r)] = run_replicate(algo, r);
    });
    return traces;
  }

 private:
  RunConfig cfg_;
  BidGrid bids_;
  BudgetGrid budgets_;
  AuctionWorld world_;
  std::vector<CampaignConfig> configs_;
  SpendingPlan plan_;
  int threads_;
  std::vector<FeasibleArms> feasible_;
  std::vector<TrueClickTable> truth_;
  ClairvoyantSolution optimum_;
};

// ---- CSV output ------------------------------------------------------------

namespace detail {
// %.17g keeps doubles round-trip exact, so regret series recomputed from
// a persisted CSV match the live ones bit for bit.
inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace detail

inline const char* csv_header() {
  return "run_id,replicate,t,algorithm,campaign,bid,budget,clicks,cost,revenue,"
         "r_mu,r_star,cum_regret";
}

/// One row per (replicate, day, campaign) plus an aggregate row with
/// campaign=ALL. r_star and cum_regret are only populated on the
/// aggregate rows; the aggregate bid column stays empty.
inline void write_csv(std::ostream& out, const std::string& run_id, Algorithm algo,
                      const std::vector<ReplicateTrace>& traces,
                      const std::vector<std::string>& campaign_ids, double r_star) {
  using detail::fmt_num;
  out << csv_header() << "\n";
  for (const auto& trace : traces) {
    for (const auto& day : trace.days) {
      double budget_total = 0.0, cost_total = 0.0, revenue_total = 0.0;
      long long clicks_total = 0;
      for (std::size_t j = 0; j < campaign_ids.size(); ++j) {
        const auto& arm = day.plan.arms[j];
        const auto& o = day.outcomes[j];
        budget_total += arm.budget;
        cost_total += o.cost;
        revenue_total += o.revenue;
        clicks_total += o.clicks;
        out << run_id << ',' << trace.replicate << ',' << day.day << ','
            << to_string(algo) << ',' << campaign_ids[j] << ',' << fmt_num(arm.bid)
            << ',' << fmt_num(arm.budget) << ',' << o.clicks << ','
            << fmt_num(o.cost) << ',' << fmt_num(o.revenue) << ','
            << fmt_num(day.expected_by_campaign[j]) << ",,\n";
      }
      out << run_id << ',' << trace.replicate << ',' << day.day << ','
          << to_string(algo) << ",ALL," << ',' << fmt_num(budget_total) << ','
          << clicks_total << ',' << fmt_num(cost_total) << ','
          << fmt_num(revenue_total) << ',' << fmt_num(day.expected_reward) << ','
          << fmt_num(r_star) << ',' << fmt_num(day.cum_regret) << "\n";
    }
  }
}

inline nlohmann::json make_manifest(const RunConfig& cfg,
                                    const std::vector<Algorithm>& algorithms,
                                    double r_star, double r_star_se) {
  nlohmann::json j;
  char hash[19];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  j["name"] = cfg.name;
  j["config_hash"] = hash;
  j["seed"] = cfg.seed;
  j["horizon"] = cfg.horizon;
  j["replications"] = cfg.replications;
  nlohmann::json algos = nlohmann::json::array();
  for (auto a : algorithms) algos.push_back(to_string(a));
  j["algorithms"] = algos;
  j["r_star"] = r_star;
  j["r_star_se"] = r_star_se;
  return j;
}

// ---- model persistence -----------------------------------------------------

/// Day snapshot of a campaign model: hyperparameters plus the raw
/// observation log. The Gram factor is rebuilt on load by replaying the
/// log, so a loaded model matches the live one bit for bit. Models with a
/// custom prior-mean function are not persistable (config-driven models
/// always use the zero mean).
inline nlohmann::json model_to_json(const CampaignModel& model) {
  using nlohmann::json;
  const auto& opts = model.options();
  if (opts.nsat_gp.prior_mean || opts.esat_gp.prior_mean || opts.joint_gp.prior_mean)
    throw std::invalid_argument("cannot persist a model with a custom prior mean");
  json j;
  j["mode"] = opts.mode == ModelMode::factorized ? "factorized" : "unfactorized";
  j["window"] = opts.window;
  j["vpc_prior_variance"] = opts.vpc_prior_variance;
  j["vpc_noise"] = opts.vpc_noise;
  auto gp = [](const Gp::Options& o) {
    json g;
    g["dims"] = o.dims;
    g["length_scales"] = std::vector<double>(o.length_scales.begin(), o.length_scales.end());
    g["amplitude"] = o.amplitude;
    g["noise"] = o.noise;
    g["target_scale"] = o.target_scale;
    g["input_lo"] = std::vector<double>(o.input_lo.begin(), o.input_lo.end());
    g["input_hi"] = std::vector<double>(o.input_hi.begin(), o.input_hi.end());
    return g;
  };
  j["nsat_gp"] = gp(opts.nsat_gp);
  j["esat_gp"] = gp(opts.esat_gp);
  j["joint_gp"] = gp(opts.joint_gp);
  json hist = json::array();
  for (const auto& e : model.history()) {
    json h;
    h["bid"] = e.bid;
    h["budget"] = e.budget;
    h["day"] = e.obs.day;
    h["clicks"] = e.obs.clicks;
    h["cost"] = e.obs.cost;
    if (e.obs.exhaust_hours) h["exhaust_hours"] = *e.obs.exhaust_hours;
    if (e.obs.value_per_click) h["value_per_click"] = *e.obs.value_per_click;
    hist.push_back(h);
  }
  j["history"] = hist;
  return j;
}

inline CampaignModel model_from_json(const nlohmann::json& j) {
  CampaignModel::Options opts;
  opts.mode = j.at("mode").get<std::string>() == "factorized"
                  ? ModelMode::factorized
                  : ModelMode::unfactorized;
  opts.window = j.value("window", 0);
  opts.vpc_prior_variance = j.at("vpc_prior_variance").get<double>();
  opts.vpc_noise = j.at("vpc_noise").get<double>();
  auto gp = [](const nlohmann::json& g) {
    Gp::Options o = Gp::Options::for_dims(g.at("dims").get<int>());
    const auto ls = g.at("length_scales").get<std::vector<double>>();
    o.length_scales = Eigen::Map<const Eigen::VectorXd>(ls.data(),
                                                        static_cast<Eigen::Index>(ls.size()));
    o.amplitude = g.at("amplitude").get<double>();
    o.noise = g.at("noise").get<double>();
    o.target_scale = g.at("target_scale").get<double>();
    const auto lo = g.at("input_lo").get<std::vector<double>>();
    const auto hi = g.at("input_hi").get<std::vector<double>>();
    o.input_lo = Eigen::Map<const Eigen::VectorXd>(lo.data(),
                                                   static_cast<Eigen::Index>(lo.size()));
    o.input_hi = Eigen::Map<const Eigen::VectorXd>(hi.data(),
                                                   static_cast<Eigen::Index>(hi.size()));
    return o;
  };
  opts.nsat_gp = gp(j.at("nsat_gp"));
  opts.esat_gp = gp(j.at("esat_gp"));
  opts.joint_gp = gp(j.at("joint_gp"));

  CampaignModel model(opts);
  for (const auto& h : j.at("history")) {
    ObservationRecord obs;
    obs.day = h.at("day").get<int>();
    obs.clicks = h.at("clicks").get<long long>();
    obs.cost = h.at("cost").get<double>();
    if (h.contains("exhaust_hours")) obs.exhaust_hours = h.at("exhaust_hours").get<double>();
    if (h.contains("value_per_click"))
      obs.value_per_click = h.at("value_per_click").get<double>();
    // the log was accepted when it was recorded; replay must not re-judge it
    model = model.updated(h.at("bid").get<double>(), h.at("budget").get<double>(), obs,
                          CampaignModel::FreeClickPolicy::accept);
  }
  return model;
}

}  // namespace bidopt
