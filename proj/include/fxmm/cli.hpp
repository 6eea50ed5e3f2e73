#pragma once

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <string>
#include <vector>

#include "fxmm/config.hpp"
#include "fxmm/errors.hpp"
#include "fxmm/flow_io.hpp"
#include "fxmm/frontier.hpp"
#include "fxmm/hjb_solver.hpp"
#include "fxmm/simulator.hpp"
#include "fxmm/strategy_io.hpp"
#include "fxmm/tiering.hpp"

namespace fxmm {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_validation = 2, exit_io = 3, exit_numeric = 4 };

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation:
    case ErrorKind::data: return exit_validation;
    case ErrorKind::io: return exit_io;
    case ErrorKind::numeric: return exit_numeric;
  }
  return exit_numeric;
}

namespace detail {

struct CliContext {
  RunConfig config;
  std::filesystem::path out_dir;
  bool quiet = false;
  std::ostream& out;
};

inline std::filesystem::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory '" + dir + "'");
  return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_output(path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

inline void echo_config(const CliContext& ctx, const std::string& command) {
  std::ostringstream os;
  write_config(os, ctx.config);
  write_text(ctx.out_dir / (command + "_config.ini"), os.str());
}

inline std::string gamma_tag(double g) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", g);
  return buf;
}

inline FlowData load_flow(const CliContext& ctx) {
  const auto& cal = ctx.config.calibration;
  if (cal.trades_file.empty() || cal.quotes_file.empty())
    throw ValidationError("calibration.trades and calibration.quotes must be set");
  FlowData data;
  data.ladder = ctx.config.model.ladder;
  auto load = read_trades_file(cal.trades_file, cal.hours);
  data.trades = std::move(load.trades);
  data.quotes = read_quotes_file(cal.quotes_file, data.ladder);
  if (data.trades.empty()) throw NoDataError(cal.trades_file + ": no trades inside the liquid-hours window");
  if (data.quotes.empty()) throw NoDataError(cal.quotes_file + ": no quote observations");
  if (!ctx.quiet)
    ctx.out << "loaded " << load.rows << " trades (" << load.outside_hours << " outside liquid hours), "
            << data.quotes.size() << " quote records\n";
  return data;
}

inline CalibrationOptions calibration_options(const RunConfig& c) {
  CalibrationOptions o;
  o.sides = c.calibration.sides;
  o.kmeans = c.calibration.kmeans;
  return o;
}

inline void report_tiers(const CliContext& ctx, const ClientFitBatch& batch, const TierAssignment& tiers) {
  if (ctx.quiet) return;
  char line[160];
  ctx.out << "tier  clients     alpha      beta   lambda_total\n";
  for (std::size_t n = 0; n < tiers.tiers.size(); ++n) {
    double total = 0.0;
    for (double l : tiers.tiers[n].lambda_by_size) total += l;
    std::snprintf(line, sizeof line, "%4zu %8zu %9.4f %9.4f %14.2f\n", n + 1, tiers.members[n].size(),
                  tiers.tiers[n].shape.alpha, tiers.tiers[n].shape.beta, total);
    ctx.out << line;
  }
  for (const auto& f : batch.failures) ctx.out << "client " << f.client_id << " not fitted: " << f.reason << "\n";
}

inline int cmd_calibrate(CliContext& ctx) {
  const auto data = load_flow(ctx);
  const auto opts = calibration_options(ctx.config);
  const auto batch = fit_clients(data, opts);
  if (batch.fits.empty()) throw NoDataError("no client could be fitted");
  const auto tiers = kmeans_tiers(batch.fits, ctx.config.calibration.tiers, data, opts);
  echo_config(ctx, "calibrate");
  write_json(ctx.out_dir / "tiers.json", to_json(batch, tiers, data.ladder));
  report_tiers(ctx, batch, tiers);
  return exit_ok;
}

inline int cmd_tier(CliContext& ctx) {
  const auto data = load_flow(ctx);
  const std::string fits_path =
      ctx.config.calibration.fits_file.empty() ? (ctx.out_dir / "tiers.json").string() : ctx.config.calibration.fits_file;
  auto in = open_input(fits_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fits_path + ": " + e.what());
  }
  ClientFitBatch batch;
  try {
    for (const auto& c : j.at("clients"))
      batch.fits.push_back(ClientFit{c.at("client_id").get<std::string>(),
                                     TierIntensity{IntensityShape{c.at("alpha").get<double>(), c.at("beta").get<double>()},
                                                   c.at("lambda_by_size").get<std::vector<double>>()},
                                     c.value("log_likelihood", 0.0)});
    if (j.contains("failures"))
      for (const auto& f : j["failures"])
        batch.failures.push_back({f.at("client_id").get<std::string>(), f.at("error").get<std::string>()});
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fits_path + ": malformed client fits: " + e.what());
  }
  if (batch.fits.empty()) throw NoDataError(fits_path + ": no client fits");
  const auto opts = calibration_options(ctx.config);
  const auto tiers = kmeans_tiers(batch.fits, ctx.config.calibration.tiers, data, opts);
  echo_config(ctx, "tier");
  write_json(ctx.out_dir / "tiers.json", to_json(batch, tiers, data.ladder));
  report_tiers(ctx, batch, tiers);
  return exit_ok;
}

inline HjbSolution solve_for(const RunConfig& c, double gamma, ModelParams& params) {
  params = c.model;
  params.gamma = gamma;
  return solve_stationary(params, c.solver, std::max(c.max_solve_horizon, params.horizon));
}

inline int cmd_solve(CliContext& ctx) {
  const auto& c = ctx.config;
  c.model.validate();
  const auto gammas = c.gamma_list();
  echo_config(ctx, "solve");
  nlohmann::json reports = nlohmann::json::array();
  for (double g : gammas) {
    ModelParams params;
    const auto sol = solve_for(c, g, params);
    const auto table = extract_strategy(sol.value, params, 0);
    const auto name = gammas.size() == 1 ? std::string("strategy.csv") : "strategy_gamma_" + gamma_tag(g) + ".csv";
    write_strategy_file((ctx.out_dir / name).string(), table);
    auto r = to_json(sol.report, table, g, params.horizon);
    r["strategy_file"] = name;
    reports.push_back(r);
    if (!ctx.quiet) {
      char line[200];
      std::snprintf(line, sizeof line, "gamma %-8g T %-6g band [%g, %g] residual %.3g%s  (%.1f s)\n", g, params.horizon,
                    table.band_lower, table.band_upper, sol.report.stationarity_residual,
                    sol.report.stationary ? "" : " NOT STATIONARY", sol.report.wall_seconds);
      ctx.out << line;
    }
  }
  write_json(ctx.out_dir / "solver_report.json", reports);
  return exit_ok;
}

inline int cmd_simulate(CliContext& ctx) {
  const auto& c = ctx.config;
  const auto gammas = c.gamma_list();
  if (!c.simulation.strategy_file.empty() && gammas.size() != 1)
    throw ValidationError("a strategy file can only be simulated for a single gamma");
  SimConfig base;
  base.horizon = c.simulation.horizon;
  base.step = c.simulation.step;
  base.n_paths = c.simulation.paths;
  base.seed = c.seed;
  base.initial_inventory = c.simulation.initial_inventory;
  base.burn_in_fraction = c.simulation.burn_in_fraction;
  base.acf_stride = c.simulation.acf_stride;
  base.acf_max_lag = c.simulation.acf_max_lag;
  base.record_events = c.simulation.record_events;
  base.event_paths = c.simulation.event_paths;
  base.threads = c.simulation.threads;
  if (base.n_paths < 1) throw ValidationError("simulation paths must be >= 1");
  c.model.validate();
  echo_config(ctx, "simulate");

  nlohmann::json records = nlohmann::json::array();
  for (double g : gammas) {
    SimConfig cfg = base;
    if (!c.simulation.strategy_file.empty()) {
      cfg.params = c.model;
      cfg.params.gamma = g;
      cfg.strategy = read_strategy_file(c.simulation.strategy_file);
    } else {
      const auto sol = solve_for(c, g, cfg.params);
      cfg.strategy = extract_strategy(sol.value, cfg.params, 0);
    }
    const auto result = simulate(cfg);
    records.push_back(to_json(result.metrics, g));
    if (cfg.record_events) {
      const auto name = gammas.size() == 1 ? std::string("events.csv") : "events_gamma_" + gamma_tag(g) + ".csv";
      std::ostringstream os;
      write_events(os, result.events);
      write_text(ctx.out_dir / name, os.str());
    }
    if (!ctx.quiet) {
      const auto& m = result.metrics;
      char line[240];
      std::snprintf(line, sizeof line,
                    "gamma %-8g turnover %9.1f M€/day  external share %6.3f  client share %6.3f  tau_R %7.3f min  "
                    "P&L %.1f ± %.1f\n",
                    g, m.client_turnover, m.external_share, m.client_share, m.tau_r_minutes, m.mean_pnl, m.std_pnl);
      ctx.out << line;
    }
  }
  write_json(ctx.out_dir / "metrics.json", records);
  return exit_ok;
}

inline int cmd_frontier(CliContext& ctx) {
  const auto& c = ctx.config;
  c.model.validate();
  auto opt = c.frontier;
  opt.seed = c.seed;
  opt.solver = c.solver;
  opt.max_solve_horizon = c.max_solve_horizon;
  opt.threads = c.simulation.threads;
  if (!c.gammas.empty()) opt.gammas = c.gammas;
  if (opt.n_paths < 1) throw ValidationError("frontier paths must be >= 1");
  // Fail on an unwritable destination before spending time on the solves.
  const auto csv_path = ctx.out_dir / "frontier.csv";
  { auto probe = open_output(csv_path.string()); }
  echo_config(ctx, "frontier");
  const auto result = efficient_frontier(c.model, opt);
  std::ostringstream os;
  write_frontier(os, result);
  write_text(csv_path, os.str());
  const auto curve = optimal_curve(result);
  std::size_t below = 0, perturbed = 0;
  for (const auto& p : result.points)
    if (!p.optimal) {
      ++perturbed;
      if (p.mean_pnl <= curve(p.std_pnl)) ++below;
    }
  write_json(ctx.out_dir / "frontier_summary.json",
             {{"ceiling_mean_pnl", result.ceiling},
              {"horizon_days", opt.horizon},
              {"perturbed_points", perturbed},
              {"perturbed_below_curve", below},
              {"curve_std", curve.knots_x()},
              {"curve_mean", curve.knots_y()}});
  if (!ctx.quiet)
    ctx.out << "frontier: " << result.points.size() << " points, " << below << "/" << perturbed
            << " perturbed below the optimal curve, ceiling " << result.ceiling << " bps·M€\n";
  return exit_ok;
}

}  // namespace detail

/// Command-line entry point; returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-tier FX market making: calibration, optimal quotes and hedging, simulation"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::vector<double> gammas;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  bool quiet = false;
  app.add_option("--config", config_path, "INI configuration file");
  app.add_option("--out-dir", out_dir, "Directory for outputs (overrides output.dir)");
  app.add_option("--gamma", gammas, "Risk aversion; repeat for a sweep (overrides the config)")->take_all();
  app.add_option("--seed", seed, "Simulation seed");
  app.add_option("--paths", paths, "Number of Monte Carlo paths");
  app.add_flag("--quiet", quiet, "Only write output files");
  app.fallthrough();
  const std::vector<std::pair<const char*, const char*>> commands{
      {"calibrate", "Fit client intensities, cluster them into tiers and refit each tier"},
      {"tier", "Re-cluster previously fitted clients and refit each tier"},
      {"solve", "Solve the dealer problem and write the strategy table"},
      {"simulate", "Simulate the optimal strategy and write metrics"},
      {"frontier", "Build the efficient frontier with perturbed strategies"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_validation;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : read_config_file(config_path);
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (!gammas.empty()) config.gammas = gammas;
    if (seed) config.seed = *seed;
    if (paths) config.simulation.paths = config.frontier.n_paths = *paths;
    if (!config.tiers_file.empty()) config.model.tiers = read_tiers_file(config.tiers_file, config.model.ladder.size());
    for (double g : config.gamma_list())
      if (!(g >= 0.0)) throw ValidationError("gamma must be >= 0");

    detail::CliContext ctx{config, detail::prepare_out_dir(config.out_dir), quiet, out};
    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "calibrate") return detail::cmd_calibrate(ctx);
    if (command == "tier") return detail::cmd_tier(ctx);
    if (command == "solve") return detail::cmd_solve(ctx);
    if (command == "simulate") return detail::cmd_simulate(ctx);
    return detail::cmd_frontier(ctx);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_numeric;
  }
}

}  // namespace fxmm
