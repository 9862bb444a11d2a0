#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bidopt/core.hpp"
#include "bidopt/model.hpp"
#include "bidopt/sampling.hpp"
#include "bidopt/simulator.hpp"

namespace bidopt {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  double lo = 0.0;
  double hi = 1.0;
  int count = 10;
  std::vector<double> values;  // explicit levels win over lo/hi/count

  BidGrid bid_grid() const {
    return values.empty() ? BidGrid::linspace(lo, hi, count) : BidGrid(values);
  }
  BudgetGrid budget_grid() const {
    return values.empty() ? BudgetGrid::linspace(hi, count) : BudgetGrid(values);
  }
};

/// GP hyperparameters, shared by all campaigns of a run. The length scale
/// is a fraction of the grid span and the noise lives in normalized
/// target units; the stock values are heuristics, not fitted quantities.
struct GpConfig {
  double length_scale_fraction = 0.2;
  double amplitude = 1.0;
  double noise = 0.25;
};

struct CampaignSpec {
  CampaignConfig limits;
  CampaignWorld world;
  double nsat_scale = 0.0;  // 0 = derive from the world (volume * top CTR)
  double esat_scale = 0.0;  // 0 = derive (our CTR / typical competitor price)

  double nsat_scale_or_default() const {
    if (nsat_scale > 0.0) return nsat_scale;
    return std::max(1.0, world.auctions_mean *
                             (world.obs_prob.empty() ? 1.0 : world.obs_prob.front()) *
                             world.click_prob);
  }
  double esat_scale_or_default() const {
    if (esat_scale > 0.0) return esat_scale;
    const double price = std::max(1e-6, 0.5 * world.comp_bid_mean);
    return std::max(1e-3, world.click_prob / price);
  }
};

struct RunConfig {
  std::string name = "run";
  std::uint64_t seed = 1;
  int horizon = 100;
  int replications = 1;
  std::vector<Algorithm> algorithms{Algorithm::f_ts};
  double delta = 0.05;
  int sliding_window = 0;
  double exploration_scale = 1.0;
  FtsSchedule fts_schedule = FtsSchedule::statement;
  bool ts_joint_draw = false;
  int truth_replications = 2000;
  GridSpec bid_grid;
  GridSpec budget_grid;
  std::vector<double> spending_caps;  // one per day, or a single constant
  GpConfig gp;
  std::vector<CampaignSpec> campaigns;
  std::string output_dir = "out";
  std::string model_snapshot_dir;  // when set, final model state is persisted

  SpendingPlan plan() const {
    if (spending_caps.size() == 1)
      return SpendingPlan::constant(spending_caps.front(), horizon);
    SpendingPlan p{spending_caps};
    p.validate();
    if (static_cast<int>(p.daily_caps.size()) < horizon)
      throw ConfigError("spending plan shorter than the horizon");
    return p;
  }

  AuctionWorld world() const {
    AuctionWorld w;
    for (const auto& c : campaigns) w.campaigns.push_back(c.world);
    return w;
  }

  std::vector<CampaignConfig> campaign_configs() const {
    std::vector<CampaignConfig> out;
    for (const auto& c : campaigns) out.push_back(c.limits);
    return out;
  }

  void validate() const {
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (replications < 1) throw ConfigError("replications must be >= 1");
    if (truth_replications < 1) throw ConfigError("truth_replications must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
    if (campaigns.empty()) throw ConfigError("at least one campaign is required");
    if (spending_caps.empty()) throw ConfigError("spending plan is required");
    for (const auto& c : campaigns) {
      c.limits.validate();
      c.world.validate();
    }
    plan();
    bid_grid.bid_grid();
    budget_grid.budget_grid();
  }
};

// ---- presets -------------------------------------------------------------

/// The four-campaign synthetic benchmark: 10x10 grid over bid [0,2] and
/// budget [0,500], shared daily cap 500, horizon 200.
inline RunConfig experiment1_preset() {
  RunConfig cfg;
  cfg.name = "experiment1";
  cfg.seed = 20240811;
  cfg.horizon = 200;
  cfg.replications = 50;
  cfg.algorithms = {Algorithm::f_ts, Algorithm::f_ucb, Algorithm::u_ts,
                    Algorithm::u_ucb, Algorithm::f_mean};
  cfg.bid_grid = {0.0, 2.0, 10, {}};
  cfg.budget_grid = {0.0, 500.0, 10, {}};
  cfg.spending_caps = {500.0};
  cfg.gp = {0.2, 1.0, 0.01};

  const double mu[4] = {1000, 1500, 1500, 1250};
  const double mu_b[4] = {0.5, 0.33, 0.4, 0.39};
  const double sd_b[4] = {0.1, 0.07, 0.1, 0.51};
  const std::vector<double> obs[4] = {{0.9, 0.7, 0.6, 0.4, 0.2},
                                      {0.9, 0.8, 0.7, 0.6, 0.5},
                                      {0.9, 0.7, 0.6, 0.4, 0.3},
                                      {0.9, 0.8, 0.6, 0.5, 0.3}};
  const double p_cl[4] = {0.5, 0.3, 0.4, 0.4};
  const double p_co[4] = {0.05, 0.05, 0.04, 0.05};

  for (int j = 0; j < 4; ++j) {
    CampaignSpec c;
    c.limits = {"C" + std::to_string(j + 1), 0.0, 2.0, 0.0, 500.0, 0.25, 1e-3};
    c.world.auctions_mean = mu[j];
    c.world.auctions_std = 50.0;
    c.world.slots = 5;
    c.world.advertisers = 7;
    c.world.comp_bid_mean = mu_b[j];
    c.world.comp_bid_std = sd_b[j];
    c.world.obs_prob = obs[j];
    c.world.click_prob = p_cl[j];
    c.world.conv_prob = p_co[j];
    c.world.conversion_value = 1.0;
    cfg.campaigns.push_back(c);
  }
  return cfg;
}

/// Same campaign slate scaled to the random-settings benchmark: bid
/// [0,1], budget [0,100], daily cap 100, horizon 100. The competitive
/// parameters are the defaults that generate_random_setting redraws.
inline RunConfig experiment3_base() {
  RunConfig cfg = experiment1_preset();
  cfg.name = "experiment3";
  cfg.horizon = 100;
  cfg.replications = 100;
  cfg.bid_grid = {0.0, 1.0, 10, {}};
  cfg.budget_grid = {0.0, 100.0, 10, {}};
  cfg.spending_caps = {100.0};
  for (auto& c : cfg.campaigns) {
    c.limits.bid_min = 0.0;
    c.limits.bid_max = 1.0;
    c.limits.budget_min = 0.0;
    c.limits.budget_max = 100.0;
    c.nsat_scale = 0.0;
    c.esat_scale = 0.0;
  }
  return cfg;
}

inline RunConfig preset_by_name(const std::string& name) {
  if (name == "experiment1") return experiment1_preset();
  if (name == "experiment3") return experiment3_base();
  throw ConfigError("unknown preset '" + name +
                    "' (available: experiment1, experiment3)");
}

// ---- json ----------------------------------------------------------------

inline nlohmann::json to_json(const RunConfig& cfg) {
  using nlohmann::json;
  json j;
  j["name"] = cfg.name;
  j["seed"] = cfg.seed;
  j["horizon"] = cfg.horizon;
  j["replications"] = cfg.replications;
  json algos = json::array();
  for (auto a : cfg.algorithms) algos.push_back(to_string(a));
  j["algorithms"] = algos;
  j["delta"] = cfg.delta;
  j["sliding_window"] = cfg.sliding_window;
  j["exploration_scale"] = cfg.exploration_scale;
  j["fts_schedule"] = cfg.fts_schedule == FtsSchedule::statement ? "statement" : "proof";
  j["ts_joint_draw"] = cfg.ts_joint_draw;
  j["truth_replications"] = cfg.truth_replications;
  auto grid = [](const GridSpec& g) {
    json out;
    if (!g.values.empty()) {
      out["values"] = g.values;
    } else {
      out["min"] = g.lo;
      out["max"] = g.hi;
      out["count"] = g.count;
    }
    return out;
  };
  j["bid_grid"] = grid(cfg.bid_grid);
  j["budget_grid"] = grid(cfg.budget_grid);
  if (cfg.spending_caps.size() == 1)
    j["spending_plan"] = cfg.spending_caps.front();
  else
    j["spending_plan"] = cfg.spending_caps;
  j["gp"] = {{"length_scale_fraction", cfg.gp.length_scale_fraction},
             {"amplitude", cfg.gp.amplitude},
             {"noise", cfg.gp.noise}};
  json campaigns = json::array();
  for (const auto& c : cfg.campaigns) {
    json cj;
    cj["id"] = c.limits.id;
    cj["bid_min"] = c.limits.bid_min;
    cj["bid_max"] = c.limits.bid_max;
    cj["budget_min"] = c.limits.budget_min;
    cj["budget_max"] = c.limits.budget_max;
    cj["vpc_prior_variance"] = c.limits.vpc_prior_variance;
    cj["vpc_noise"] = c.limits.vpc_noise;
    if (c.nsat_scale > 0.0) cj["nsat_scale"] = c.nsat_scale;
    if (c.esat_scale > 0.0) cj["esat_scale"] = c.esat_scale;
    cj["world"] = {{"auctions_mean", c.world.auctions_mean},
                   {"auctions_std", c.world.auctions_std},
                   {"slots", c.world.slots},
                   {"advertisers", c.world.advertisers},
                   {"competitor_bid_mean", c.world.comp_bid_mean},
                   {"competitor_bid_std", c.world.comp_bid_std},
                   {"obs_prob", c.world.obs_prob},
                   {"click_prob", c.world.click_prob},
                   {"conversion_prob", c.world.conv_prob},
                   {"conversion_value", c.world.conversion_value}};
    campaigns.push_back(cj);
  }
  j["campaigns"] = campaigns;
  j["output_dir"] = cfg.output_dir;
  if (!cfg.model_snapshot_dir.empty()) j["model_snapshot_dir"] = cfg.model_snapshot_dir;
  return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  cfg.name = j.value("name", cfg.name);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.horizon = j.value("horizon", cfg.horizon);
  cfg.replications = j.value("replications", cfg.replications);
  if (j.contains("algorithms")) {
    cfg.algorithms.clear();
    for (const auto& a : j.at("algorithms"))
      cfg.algorithms.push_back(parse_algorithm(a.get<std::string>()));
  } else if (j.contains("algorithm")) {
    cfg.algorithms = {parse_algorithm(j.at("algorithm").get<std::string>())};
  }
  cfg.delta = j.value("delta", cfg.delta);
  cfg.sliding_window = j.value("sliding_window", cfg.sliding_window);
  cfg.exploration_scale = j.value("exploration_scale", cfg.exploration_scale);
  if (j.contains("fts_schedule")) {
    const std::string s = j.at("fts_schedule").get<std::string>();
    if (s == "statement")
      cfg.fts_schedule = FtsSchedule::statement;
    else if (s == "proof")
      cfg.fts_schedule = FtsSchedule::proof;
    else
      throw ConfigError("fts_schedule must be 'statement' or 'proof'");
  }
  cfg.ts_joint_draw = j.value("ts_joint_draw", cfg.ts_joint_draw);
  cfg.truth_replications = j.value("truth_replications", cfg.truth_replications);

  auto grid = [](const nlohmann::json& g) {
    GridSpec out;
    if (g.contains("values")) {
      out.values = g.at("values").get<std::vector<double>>();
    } else {
      out.lo = g.value("min", 0.0);
      out.hi = g.at("max").get<double>();
      out.count = g.at("count").get<int>();
    }
    return out;
  };
  cfg.bid_grid = grid(j.at("bid_grid"));
  cfg.budget_grid = grid(j.at("budget_grid"));

  const auto& plan = j.at("spending_plan");
  if (plan.is_number())
    cfg.spending_caps = {plan.get<double>()};
  else
    cfg.spending_caps = plan.get<std::vector<double>>();

  if (j.contains("gp")) {
    const auto& g = j.at("gp");
    cfg.gp.length_scale_fraction =
        g.value("length_scale_fraction", cfg.gp.length_scale_fraction);
    cfg.gp.amplitude = g.value("amplitude", cfg.gp.amplitude);
    cfg.gp.noise = g.value("noise", cfg.gp.noise);
  }

  cfg.campaigns.clear();
  for (const auto& cj : j.at("campaigns")) {
    CampaignSpec c;
    c.limits.id = cj.at("id").get<std::string>();
    c.limits.bid_min = cj.at("bid_min").get<double>();
    c.limits.bid_max = cj.at("bid_max").get<double>();
    c.limits.budget_min = cj.at("budget_min").get<double>();
    c.limits.budget_max = cj.at("budget_max").get<double>();
    c.limits.vpc_prior_variance = cj.value("vpc_prior_variance", 0.25);
    c.limits.vpc_noise = cj.value("vpc_noise", 1e-3);
    c.nsat_scale = cj.value("nsat_scale", 0.0);
    c.esat_scale = cj.value("esat_scale", 0.0);
    const auto& wj = cj.at("world");
    c.world.auctions_mean = wj.at("auctions_mean").get<double>();
    c.world.auctions_std = wj.at("auctions_std").get<double>();
    c.world.slots = wj.at("slots").get<int>();
    c.world.advertisers = wj.at("advertisers").get<int>();
    c.world.comp_bid_mean = wj.at("competitor_bid_mean").get<double>();
    c.world.comp_bid_std = wj.at("competitor_bid_std").get<double>();
    c.world.obs_prob = wj.at("obs_prob").get<std::vector<double>>();
    c.world.click_prob = wj.at("click_prob").get<double>();
    c.world.conv_prob = wj.at("conversion_prob").get<double>();
    c.world.conversion_value = wj.value("conversion_value", 1.0);
    cfg.campaigns.push_back(c);
  }
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.model_snapshot_dir = j.value("model_snapshot_dir", cfg.model_snapshot_dir);
  cfg.validate();
  return cfg;
}

/// Loads a config file; parse and schema errors come back line-anchored.
inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return config_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min(e.byte, text.size()); ++i)
      if (text[i] == '\n') ++line;
    throw ConfigError(path + ":" + std::to_string(line) + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// FNV-1a over the canonical JSON dump; good enough to fingerprint a run.
inline std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string dump = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace bidopt
