// Command-line front end: run experiments from a config file or preset,
// sweep grid sizes, batch random settings, and summarize result CSVs.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bidopt/bidopt.hpp"

namespace fs = std::filesystem;
using namespace bidopt;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> algo;
  std::optional<int> reps;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Path to a JSON run config");
  cmd->add_option("--preset", flags.preset,
                  "Built-in config preset (experiment1, experiment3)");
  cmd->add_option("--seed", flags.seed, "Override the run seed");
  cmd->add_option("--algo", flags.algo,
                  "Restrict to one algorithm: f-ts, f-ucb, u-ts, u-ucb, f-mean");
  cmd->add_option("--reps", flags.reps, "Override the replication count");
  cmd->add_option("--out", flags.out_dir, "Output directory");
}

RunConfig resolve_config(const CommonFlags& flags) {
  if (!flags.config_path.empty() && !flags.preset.empty())
    throw ConfigError("pass either --config or --preset, not both");
  RunConfig cfg;
  if (!flags.config_path.empty())
    cfg = load_config(flags.config_path);
  else if (!flags.preset.empty())
    cfg = preset_by_name(flags.preset);
  else
    throw ConfigError("one of --config or --preset is required");
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.reps) cfg.replications = *flags.reps;
  if (flags.algo) cfg.algorithms = {parse_algorithm(*flags.algo)};
  if (!flags.out_dir.empty()) cfg.output_dir = flags.out_dir;
  return cfg;
}

std::vector<std::string> campaign_ids(const RunConfig& cfg) {
  std::vector<std::string> ids;
  for (const auto& c : cfg.campaigns) ids.push_back(c.limits.id);
  return ids;
}

int cmd_run(const CommonFlags& flags) {
  RunConfig cfg = resolve_config(flags);
  fs::create_directories(cfg.output_dir);

  std::cout << "estimating ground truth (" << cfg.truth_replications
            << " replications)...\n";
  Experiment exp(cfg);
  std::cout << "clairvoyant optimum r* = " << exp.r_star() << " (se "
            << exp.optimum().se << ")\n";

  const auto ids = campaign_ids(cfg);
  for (Algorithm algo : cfg.algorithms) {
    const std::string run_id = cfg.name + ":" + to_string(algo);
    const auto traces = exp.run(algo);

    const fs::path csv_path = fs::path(cfg.output_dir) / (cfg.name + "-" +
                                                          to_string(algo) + ".csv");
    std::ofstream csv(csv_path);
    write_csv(csv, run_id, algo, traces, ids, exp.r_star());

    if (!cfg.model_snapshot_dir.empty()) {
      // persist the end-of-horizon models of the first replicate so a
      // later run can resume from them
      fs::create_directories(cfg.model_snapshot_dir);
      std::vector<CampaignModel> finals;
      exp.run_replicate(algo, 0, exp.initial_models(algo), &finals);
      for (std::size_t j = 0; j < finals.size(); ++j) {
        const fs::path snap = fs::path(cfg.model_snapshot_dir) /
                              (cfg.name + "-" + to_string(algo) + "-" + ids[j] +
                               "-day" + std::to_string(cfg.horizon) + ".json");
        std::ofstream out(snap);
        out << model_to_json(finals[j]).dump(2) << "\n";
      }
    }

    std::vector<double> final_regret, v_index;
    for (const auto& t : traces) {
      final_regret.push_back(t.days.back().cum_regret);
      if (auto v = efficiency_index(t, exp.r_star())) v_index.push_back(*v);
    }
    const auto reg = mean_ci(final_regret);
    const auto v = mean_ci(v_index);
    std::cout << to_string(algo) << ": R_T = " << reg.mean << " +- " << reg.se
              << ", V = " << v.mean << "  -> " << csv_path.string() << "\n";
  }

  const fs::path manifest_path = fs::path(cfg.output_dir) / (cfg.name + "-manifest.json");
  std::ofstream manifest(manifest_path);
  manifest << make_manifest(cfg, cfg.algorithms, exp.r_star(), exp.optimum().se).dump(2)
           << "\n";
  std::cout << "manifest -> " << manifest_path.string() << "\n";
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& axis,
              std::vector<int> sizes) {
  RunConfig base = resolve_config(flags);
  fs::create_directories(base.output_dir);
  if (sizes.empty()) sizes = {5, 10, 20, 40, 80};

  const fs::path csv_path = fs::path(base.output_dir) / (base.name + "-sweep-" +
                                                         axis + ".csv");
  std::ofstream csv(csv_path);
  csv << "axis,size,algorithm,v_mean,v_se,reward_mean,r_star\n";

  for (int size : sizes) {
    RunConfig cfg = base;
    cfg.name = base.name + "-" + axis + std::to_string(size);
    if (axis == "bid")
      cfg.bid_grid.count = size;
    else
      cfg.budget_grid.count = size;
    Experiment exp(cfg);
    for (Algorithm algo : cfg.algorithms) {
      const auto traces = exp.run(algo);
      std::vector<double> vs, rewards;
      for (const auto& t : traces) {
        if (auto v = efficiency_index(t, exp.r_star())) vs.push_back(*v);
        rewards.push_back(cumulative_expected_reward(t, cfg.horizon));
      }
      const auto v = mean_ci(vs);
      const auto p = mean_ci(rewards);
      csv << axis << ',' << size << ',' << to_string(algo) << ',' << v.mean << ','
          << v.se << ',' << p.mean << ',' << exp.r_star() << "\n";
      std::cout << "|" << (axis == "bid" ? "X" : "Y") << "| = " << size << "  "
                << to_string(algo) << "  V = " << v.mean << " +- " << v.se << "\n";
    }
  }
  std::cout << "sweep -> " << csv_path.string() << "\n";
  return 0;
}

int cmd_random_settings(const CommonFlags& flags, int n_settings, int n_runs) {
  RunConfig base = flags.config_path.empty() && flags.preset.empty()
                       ? experiment3_base()
                       : resolve_config(flags);
  if (flags.seed) base.seed = *flags.seed;
  if (!flags.out_dir.empty()) base.output_dir = flags.out_dir;
  fs::create_directories(base.output_dir);

  const std::vector<Algorithm> algos = {Algorithm::f_ts, Algorithm::f_ucb,
                                        Algorithm::u_ts, Algorithm::u_ucb};
  const std::vector<int> checkpoints = {25, 50, 100};

  const fs::path csv_path = fs::path(base.output_dir) / (base.name + "-settings.csv");
  std::ofstream csv(csv_path);
  csv << "setting,t,algorithm,regret_mean,regret_sd,beta\n";

  for (int s = 0; s < n_settings; ++s) {
    RunConfig cfg = base;
    cfg.name = base.name + "-s" + std::to_string(s + 1);
    cfg.replications = n_runs;
    Rng setting_rng(substream_seed(base.seed,
                                   {stream::setting, static_cast<std::uint64_t>(s)}));
    const AuctionWorld sampled = generate_random_setting(base.world(), setting_rng);
    for (std::size_t j = 0; j < cfg.campaigns.size(); ++j)
      cfg.campaigns[j].world = sampled.campaigns[j];
    cfg.seed = substream_seed(base.seed, {stream::setting, static_cast<std::uint64_t>(s), 1});

    Experiment exp(cfg);
    std::vector<std::vector<ReplicateTrace>> traces;
    for (Algorithm a : algos) traces.push_back(exp.run(a));

    for (int t : checkpoints) {
      if (t > cfg.horizon) continue;
      std::vector<std::vector<double>> rewards(algos.size());
      for (std::size_t a = 0; a < algos.size(); ++a)
        for (const auto& tr : traces[a])
          rewards[a].push_back(cumulative_expected_reward(tr, t));
      const auto beta = best_run_fraction(rewards);
      for (std::size_t a = 0; a < algos.size(); ++a) {
        std::vector<double> regret;
        for (std::size_t r = 0; r < rewards[a].size(); ++r)
          regret.push_back(t * exp.r_star() - rewards[a][r]);
        const auto m = mean_ci(regret);
        const double sd = m.se * std::sqrt(static_cast<double>(regret.size()));
        csv << (s + 1) << ',' << t << ',' << to_string(algos[a]) << ',' << m.mean
            << ',' << sd << ',' << 100.0 * beta[a] << "\n";
        if (t == checkpoints.back())
          std::cout << "setting " << (s + 1) << " t=" << t << " "
                    << to_string(algos[a]) << ": R_t = " << m.mean << " +- " << sd
                    << ", beta = " << 100.0 * beta[a] << "%\n";
      }
    }
  }
  std::cout << "settings -> " << csv_path.string() << "\n";
  return 0;
}

struct CsvSummaryRow {
  int replicate = 0;
  int day = 0;
  double r_mu = 0.0;
  double r_star = 0.0;
  double cum_regret = 0.0;
};

int cmd_report(const std::string& csv_in) {
  std::ifstream in(csv_in);
  if (!in) {
    std::cerr << csv_in << ": cannot open file\n";
    return 1;
  }
  std::string line;
  std::getline(in, line);  // header
  std::map<std::string, std::vector<CsvSummaryRow>> by_algo;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::vector<std::string> cells;
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 13 || cells[4] != "ALL") continue;
    CsvSummaryRow row;
    row.replicate = std::stoi(cells[1]);
    row.day = std::stoi(cells[2]);
    row.r_mu = std::stod(cells[10]);
    row.r_star = std::stod(cells[11]);
    row.cum_regret = std::stod(cells[12]);
    by_algo[cells[3]].push_back(row);
  }

  std::cout << "algorithm   R_T(mean)   R_T(sd)     V\n";
  for (const auto& [algo, rows] : by_algo) {
    std::map<int, std::pair<double, double>> final_by_rep;  // regret, reward sum
    std::map<int, int> days_by_rep;
    double r_star = 0.0;
    for (const auto& r : rows) {
      auto& slot = final_by_rep[r.replicate];
      if (r.day >= days_by_rep[r.replicate]) {
        days_by_rep[r.replicate] = r.day;
        slot.first = r.cum_regret;
      }
      slot.second += r.r_mu;
      r_star = r.r_star;
    }
    std::vector<double> regret, v;
    for (const auto& [rep, slot] : final_by_rep) {
      regret.push_back(slot.first);
      if (r_star > 0.0) v.push_back(slot.second / (days_by_rep[rep] * r_star));
    }
    const auto m = mean_ci(regret);
    const double sd = m.se * std::sqrt(static_cast<double>(regret.size()));
    const auto vm = mean_ci(v);
    std::printf("%-10s  %-10.4g  %-10.4g  %.4f\n", algo.c_str(), m.mean, sd, vm.mean);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online joint bid/daily-budget optimization toolkit"};
  app.require_subcommand(1);

  CommonFlags run_flags, sweep_flags, settings_flags;
  std::string sweep_axis = "bid";
  std::vector<int> sweep_sizes;
  int n_settings = 10, n_runs = 100;
  std::string report_csv;

  auto* run = app.add_subcommand("run", "Run the configured algorithms once");
  add_common(run, run_flags);

  auto* sweep = app.add_subcommand("sweep", "Grid-size sweep of the efficiency index");
  add_common(sweep, sweep_flags);
  sweep->add_option("--axis", sweep_axis, "Which grid to sweep: bid or budget")
      ->check(CLI::IsMember({"bid", "budget"}));
  sweep->add_option("--sizes", sweep_sizes, "Grid sizes (default 5 10 20 40 80)");

  auto* settings =
      app.add_subcommand("random-settings", "Batch of randomly drawn settings");
  add_common(settings, settings_flags);
  settings->add_option("--settings", n_settings, "Number of random settings");
  settings->add_option("--runs", n_runs, "Runs per setting");

  auto* report = app.add_subcommand("report", "Summarize a result CSV");
  report->add_option("csv", report_csv, "CSV produced by the run command")->required();

  std::string dump_preset = "experiment1", dump_path = "-";
  auto* dump = app.add_subcommand("dump-config",
                                  "Write a preset as an editable JSON config");
  dump->add_option("--preset", dump_preset, "Preset name");
  dump->add_option("--out", dump_path, "Target path ('-' for stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_flags);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, sweep_axis, sweep_sizes);
    if (settings->parsed())
      return cmd_random_settings(settings_flags, n_settings, n_runs);
    if (report->parsed()) return cmd_report(report_csv);
    if (dump->parsed()) {
      const auto j = to_json(preset_by_name(dump_preset));
      if (dump_path == "-") {
        std::cout << j.dump(2) << "\n";
      } else {
        std::ofstream out(dump_path);
        out << j.dump(2) << "\n";
        std::cout << "config -> " << dump_path << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
