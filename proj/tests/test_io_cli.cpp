#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fxmm/cli.hpp"
#include "fxmm/config.hpp"
#include "fxmm/flow_io.hpp"
#include "fxmm/strategy_io.hpp"
#include "oracles.hpp"

namespace {

using namespace fxmm;
namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fxmm_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "fxmm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    rows.push_back(f);
  }
  return rows;
}

// ---------------------------------------------------------------- strategy files

TEST(StrategyIo, RoundTripIsBitExact) {
  const ModelParams p;
  const auto t = extract_strategy(solve_hjb(p).value, p, 0);
  std::stringstream ss;
  write_strategy(ss, t);
  const auto back = read_strategy(ss, "mem");
  EXPECT_TRUE(back == t);
  EXPECT_EQ(back.band_lower, t.band_lower);
  EXPECT_EQ(back.band_upper, t.band_upper);
}

TEST(StrategyIo, MalformedRowsNameTheLine) {
  std::stringstream ss("q_meur,v_meur_per_day,bid_t1_z1,ask_t1_z1\n-1,1,0.1,nan\n0,0,0.1,0.1\n1,-1,x,0.1\n");
  try {
    read_strategy(ss, "s.csv");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_NE(std::string(e.what()).find("s.csv:4"), std::string::npos);
  }
  std::stringstream bad("q,v\n");
  EXPECT_THROW(read_strategy(bad, "s.csv"), ParseError);
}

// ---------------------------------------------------------------- flow files

TEST(FlowIo, TimestampHours) {
  EXPECT_DOUBLE_EQ(utc_hour_of_day("2024-03-01T06:30:00Z"), 6.5);
  EXPECT_DOUBLE_EQ(utc_hour_of_day("2024-03-01 19:59"), 19.0 + 59.0 / 60.0);
  EXPECT_LT(utc_hour_of_day("2024-03-01"), 0.0);
  EXPECT_LT(utc_hour_of_day("yesterday at noon"), 0.0);
  EXPECT_LT(utc_hour_of_day("2024-03-01T25:00:00Z"), 0.0);
}

TEST(FlowIo, LiquidHoursFilter) {
  std::stringstream ss(
      "client_id,timestamp_utc,side,size_meur,quote_bps\n"
      "a,2024-03-01T05:59:59Z,bid,1,0.1\n"
      "a,2024-03-01T06:00:00Z,ask,2,0.2\n"
      "b,2024-03-01T19:59:59Z,bid,5,-0.1\n"
      "b,2024-03-01T20:00:00Z,bid,5,-0.1\n");
  const auto load = read_trades(ss, "t.csv");
  EXPECT_EQ(load.rows, 4u);
  EXPECT_EQ(load.outside_hours, 2u);
  ASSERT_EQ(load.trades.size(), 2u);
  EXPECT_EQ(load.trades[0].side, Side::ask);
  EXPECT_EQ(load.trades[1].quote_bps, -0.1);
}

TEST(FlowIo, ParseErrorsCarryLineNumbers) {
  std::stringstream trades(
      "client_id,timestamp_utc,side,size_meur,quote_bps\n"
      "a,2024-03-01T10:00:00Z,bid,1,0.1\n"
      "a,2024-03-01T10:00:00Z,sideways,1,0.1\n");
  try {
    read_trades(trades, "t.csv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::stringstream quotes("client_id,side,size_bucket,quote_bps,duration_days\na,bid,0,0.1,1\na,ask,6,0.1,1\n");
  try {
    read_quotes(quotes, "q.csv", SizeLadder::standard());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::stringstream empty("");
  EXPECT_THROW(read_trades(empty, "t.csv"), NoDataError);
  std::stringstream header("wrong,header\n");
  EXPECT_THROW(read_trades(header, "t.csv"), ParseError);
}

// ---------------------------------------------------------------- configuration

TEST(Config, DefaultsAndOverrides) {
  std::stringstream ss(
      "[model]\ngamma = 0.01\ngrid_points = 101\nq_bound = 50\n"
      "[tier1]\nalpha = -0.5\nbeta = 4\nlambda = 900\n"
      "[simulation]\npaths = 7\nseed = 42\n");
  const auto c = read_config(ss, "c.ini");
  EXPECT_EQ(c.model.gamma, 0.01);
  EXPECT_EQ(c.model.grid_points, 101u);
  ASSERT_EQ(c.model.tiers.size(), 1u);
  EXPECT_NEAR(c.model.tiers[0].lambda_by_size[0], 900.0 * 0.4, 1e-12);
  EXPECT_EQ(c.simulation.paths, 7u);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.model.sigma, ModelParams{}.sigma);
}

TEST(Config, UnknownKeysAreRejected) {
  std::stringstream ss("[model]\nsigmaa = 1\n");
  EXPECT_THROW(read_config(ss, "c.ini"), ValidationError);
  std::stringstream broken("[model\ngamma = 1\n");
  EXPECT_THROW(read_config(broken, "c.ini"), ParseError);
}

TEST(Config, EchoReadsBackToTheSameConfig) {
  RunConfig c;
  c.model.gamma = 3e-3;
  c.gammas = {1e-3, 1e-2};
  c.simulation.paths = 17;
  c.frontier.perturbations = 4;
  c.calibration.sides = SideSelection::ask;
  std::stringstream ss;
  write_config(ss, c);
  const auto back = read_config(ss, "echo.ini");
  std::stringstream again;
  write_config(again, back);
  EXPECT_EQ(ss.str(), again.str());
  EXPECT_EQ(back.gammas, c.gammas);
  EXPECT_EQ(back.model.tiers[1].lambda_by_size, c.model.tiers[1].lambda_by_size);
}

// ---------------------------------------------------------------- command line

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, exit_validation);
  EXPECT_EQ(run({"bogus"}).code, exit_validation);
  EXPECT_EQ(run({"--help"}).code, exit_ok);
  EXPECT_EQ(run({"solve", "--config", "/nonexistent/config.ini"}).code, exit_io);
}

TEST(Cli, EmptyTradesFileIsANoDataError) {
  const auto dir = scratch_dir("empty");
  write_file(dir / "trades.csv", "");
  write_file(dir / "quotes.csv", "client_id,side,size_bucket,quote_bps,duration_days\na,bid,0,0.1,1\n");
  write_file(dir / "c.ini", "[calibration]\ntrades = " + (dir / "trades.csv").string() +
                                "\nquotes = " + (dir / "quotes.csv").string() + "\n");
  const auto r = run({"calibrate", "--config", (dir / "c.ini").string(), "--out-dir", (dir / "out").string()});
  EXPECT_EQ(r.code, exit_validation);
  EXPECT_NE(r.err.find("empty"), std::string::npos);
}

TEST(Cli, MalformedRowNamesTheRow) {
  const auto dir = scratch_dir("malformed");
  write_file(dir / "trades.csv",
             "client_id,timestamp_utc,side,size_meur,quote_bps\na,2024-03-01T10:00:00Z,bid,1,0.1\na,2024-03-01T10:00:00Z,bid,1\n");
  write_file(dir / "quotes.csv", "client_id,side,size_bucket,quote_bps,duration_days\na,bid,0,0.1,1\n");
  write_file(dir / "c.ini", "[calibration]\ntrades = " + (dir / "trades.csv").string() +
                                "\nquotes = " + (dir / "quotes.csv").string() + "\n");
  const auto r = run({"calibrate", "--config", (dir / "c.ini").string(), "--out-dir", (dir / "out").string()});
  EXPECT_EQ(r.code, exit_validation);
  EXPECT_NE(r.err.find("trades.csv:3"), std::string::npos) << r.err;
}

TEST(Cli, ValidationFailuresBeforeWork) {
  const auto dir = scratch_dir("validation");
  write_file(dir / "grid.ini", "[model]\ngrid_points = 500\n");
  EXPECT_EQ(run({"solve", "--config", (dir / "grid.ini").string(), "--out-dir", dir.string(), "--quiet"}).code,
            exit_validation);
  EXPECT_EQ(run({"simulate", "--paths", "0", "--out-dir", dir.string(), "--quiet"}).code, exit_validation);
  EXPECT_EQ(run({"solve", "--gamma", "-1", "--out-dir", dir.string(), "--quiet"}).code, exit_validation);
  EXPECT_FALSE(fs::exists(dir / "strategy.csv"));
}

TEST(Cli, UnwritableOutputIsAnIoError) {
  const auto dir = scratch_dir("unwritable");
  write_file(dir / "file", "not a directory");
  EXPECT_EQ(run({"frontier", "--out-dir", (dir / "file" / "out").string(), "--quiet"}).code, exit_io);
}

TEST(Cli, SolveWritesTheDefaultStrategyTable) {
  const auto dir = scratch_dir("solve");
  const auto r = run({"solve", "--out-dir", dir.string(), "--quiet"});
  ASSERT_EQ(r.code, exit_ok) << r.err;
  const auto rows = read_csv(dir / "strategy.csv");
  ASSERT_EQ(rows.size(), 502u);  // header + 501 inventory nodes
  EXPECT_EQ(rows[0].size(), 2u * 6u * 2u + 2u);
  for (const auto& row : rows) EXPECT_EQ(row.size(), rows[0].size());
  EXPECT_TRUE(fs::exists(dir / "solve_config.ini"));
  const auto report = nlohmann::json::parse(read_file(dir / "solver_report.json"));
  ASSERT_TRUE(report.is_array());
  EXPECT_TRUE(report[0]["stationary"].get<bool>());
  // The echoed configuration reproduces the run.
  const auto echo = read_config_file((dir / "solve_config.ini").string());
  EXPECT_EQ(echo.model.gamma, ModelParams{}.gamma);
}

TEST(Cli, RiskNeutralNoImpactQuotesAreConstant) {
  // A single small size keeps the inventory excursions far from the bounds, so interior rows are exact.
  const auto dir = scratch_dir("degenerate");
  write_file(dir / "c.ini",
             "[model]\ngamma = 0\nimpact_k = 0\nq_bound = 50\ngrid_points = 101\nsizes = 1\n[solver]\nmax_horizon = 0.05\n"
             "[tier1]\nalpha = -0.3\nbeta = 5\nlambda_by_size = 100\n"
             "[tier2]\nalpha = -1.9\nbeta = 15\nlambda_by_size = 100\n");
  const auto r = run({"solve", "--config", (dir / "c.ini").string(), "--out-dir", dir.string(), "--quiet"});
  ASSERT_EQ(r.code, exit_ok) << r.err;
  const auto t = read_strategy_file((dir / "strategy.csv").string());
  for (std::size_t n = 0; n < t.n_tiers; ++n) {
    const double ref = t.bid(n, 0, t.center_node());
    for (std::size_t i = 0; i < t.nodes(); ++i) {
      if (std::abs(t.q_grid[i]) > 25.0) continue;
      EXPECT_NEAR(t.bid(n, 0, i), ref, 1e-9);
      EXPECT_NEAR(t.ask(n, 0, i), ref, 1e-9);
      EXPECT_EQ(t.hedge_rate[i], 0.0);
    }
  }
}

TEST(Cli, SimulateIsByteIdenticalOnRerun) {
  const auto a = scratch_dir("sim_a"), b = scratch_dir("sim_b");
  for (const auto& dir : {a, b}) {
    write_file(dir / "c.ini", "[simulation]\npaths = 4\nhorizon = 0.2\nthreads = 2\nseed = 11\nacf_max_lag = 500\n");
    const auto r = run({"simulate", "--config", (dir / "c.ini").string(), "--out-dir", dir.string(), "--quiet"});
    ASSERT_EQ(r.code, exit_ok) << r.err;
  }
  const auto ma = read_file(a / "metrics.json");
  EXPECT_FALSE(ma.empty());
  EXPECT_EQ(ma, read_file(b / "metrics.json"));
  const auto j = nlohmann::json::parse(ma);
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0]["n_paths"], 4);
  EXPECT_EQ(j[0]["seed"], 11);
}

TEST(Cli, SimulateGammaSweepGivesOneRecordPerGamma) {
  const auto dir = scratch_dir("sweep");
  const auto r = run({"simulate", "--gamma", "0.01", "0.1", "--paths", "2", "--out-dir", dir.string(), "--quiet"});
  ASSERT_EQ(r.code, exit_ok) << r.err;
  const auto j = nlohmann::json::parse(read_file(dir / "metrics.json"));
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[0]["gamma"], 0.01);
  EXPECT_EQ(j[1]["gamma"], 0.1);
}

TEST(Cli, FrontierWithOneGammaAndNoPerturbations) {
  const auto dir = scratch_dir("frontier");
  write_file(dir / "c.ini", "[frontier]\ngammas = 0.01\nperturbations = 0\npaths = 10\n");
  const auto r = run({"frontier", "--config", (dir / "c.ini").string(), "--out-dir", dir.string(), "--quiet"});
  ASSERT_EQ(r.code, exit_ok) << r.err;
  const auto rows = read_csv(dir / "frontier.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"gamma", "kind", "std_pnl", "mean_pnl"}));
  EXPECT_EQ(rows[1][1], "optimal");
}

TEST(Cli, CalibrateRecoversTwoSyntheticTiers) {
  const auto dir = scratch_dir("calibrate");
  const auto ladder = SizeLadder::standard();
  std::vector<TradeObservation> trades;
  std::vector<QuoteObservation> quotes;
  for (std::size_t c = 0; c < 8; ++c) {
    const bool t1 = c % 2 == 0;
    std::vector<double> lambdas;
    for (double w : standard_size_weights()) lambdas.push_back(40.0 * w);
    const auto f = oracle::synthetic_flow("c" + std::to_string(c), t1 ? -0.3 : -1.9, t1 ? 5.0 : 15.0, lambdas,
                                          ladder.sizes, t1 ? oracle::levels(-1.0, 1.0, 21) : oracle::levels(-0.4, 0.6, 21),
                                          25.0, 500 + c);
    trades.insert(trades.end(), f.trades.begin(), f.trades.end());
    quotes.insert(quotes.end(), f.quotes.begin(), f.quotes.end());
  }
  {
    std::ofstream t(dir / "trades.csv"), q(dir / "quotes.csv");
    write_trades(t, trades, "2024-03-01T12:00:00Z");
    write_quotes(q, quotes);
  }
  write_file(dir / "c.ini", "[calibration]\ntrades = " + (dir / "trades.csv").string() +
                                "\nquotes = " + (dir / "quotes.csv").string() + "\n");
  const auto r = run({"calibrate", "--config", (dir / "c.ini").string(), "--out-dir", dir.string(), "--quiet"});
  ASSERT_EQ(r.code, exit_ok) << r.err;
  const auto j = nlohmann::json::parse(read_file(dir / "tiers.json"));
  ASSERT_EQ(j["tiers"].size(), 2u);
  // Tiers are ordered by increasing β: the less price-sensitive cluster comes first.
  EXPECT_NEAR(j["tiers"][0]["alpha"].get<double>(), -0.3, 0.05 * 0.3 + 0.02);
  EXPECT_NEAR(j["tiers"][0]["beta"].get<double>(), 5.0, 0.05 * 5.0);
  EXPECT_NEAR(j["tiers"][1]["alpha"].get<double>(), -1.9, 0.05 * 1.9);
  EXPECT_NEAR(j["tiers"][1]["beta"].get<double>(), 15.0, 0.05 * 15.0);
  EXPECT_EQ(j["failures"].size(), 0u);

  // The calibrated tiers feed straight back into a solve.
  write_file(dir / "s.ini", "[model]\ntiers_file = " + (dir / "tiers.json").string() + "\n");
  const auto s = run({"solve", "--config", (dir / "s.ini").string(), "--out-dir", dir.string(), "--quiet"});
  EXPECT_EQ(s.code, exit_ok) << s.err;

  // Re-tiering the stored client fits into one tier.
  write_file(dir / "t.ini", "[calibration]\ntrades = " + (dir / "trades.csv").string() +
                                "\nquotes = " + (dir / "quotes.csv").string() + "\ntiers = 1\n");
  const auto t = run({"tier", "--config", (dir / "t.ini").string(), "--out-dir", dir.string(), "--quiet"});
  ASSERT_EQ(t.code, exit_ok) << t.err;
  EXPECT_EQ(nlohmann::json::parse(read_file(dir / "tiers.json"))["tiers"].size(), 1u);
}

}  // namespace
