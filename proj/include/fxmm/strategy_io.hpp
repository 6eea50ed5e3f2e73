#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <nlohmann/json.hpp>
#include <ostream>
#include <string>
#include <vector>

#include "fxmm/errors.hpp"
#include "fxmm/flow_io.hpp"
#include "fxmm/hjb_solver.hpp"
#include "fxmm/simulator.hpp"
#include "fxmm/strategy_table.hpp"

namespace fxmm {

/// Decimal text that parses back to the same double (17 significant digits); "nan" for unavailable quotes.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline std::string size_label(double z) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", z);
  return buf;
}

inline std::vector<std::string> strategy_header(std::size_t n_tiers, const std::vector<double>& sizes) {
  std::vector<std::string> h{"q_meur", "v_meur_per_day"};
  for (std::size_t n = 0; n < n_tiers; ++n)
    for (const char* side : {"bid", "ask"})
      for (double z : sizes) h.push_back(std::string(side) + "_t" + std::to_string(n + 1) + "_z" + size_label(z));
  return h;
}

}  // namespace detail

/// One row per inventory node: q, hedge rate, then bid and ask quotes per tier and size.
inline void write_strategy(std::ostream& out, const StrategyTable& s) {
  s.validate();
  const auto header = detail::strategy_header(s.n_tiers, s.sizes);
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (std::size_t i = 0; i < s.nodes(); ++i) {
    out << format_number(s.q_grid[i]) << ',' << format_number(s.hedge_rate[i]);
    for (std::size_t n = 0; n < s.n_tiers; ++n) {
      for (std::size_t k = 0; k < s.n_sizes(); ++k) out << ',' << format_number(s.bid(n, k, i));
      for (std::size_t k = 0; k < s.n_sizes(); ++k) out << ',' << format_number(s.ask(n, k, i));
    }
    out << '\n';
  }
}

/// Loads a strategy CSV; the band is re-derived as the zero run of the hedge rate around q = 0.
inline StrategyTable read_strategy(std::istream& in, const std::string& source) {
  detail::CsvReader csv(in, source);
  std::vector<std::string_view> f;
  if (!csv.next(f)) throw NoDataError(source + ": file is empty");
  if (f.size() < 4 || f[0] != "q_meur" || f[1] != "v_meur_per_day") csv.fail("not a strategy table header");

  // Recover tiers and sizes from the column names "bid_t{n}_z{size}".
  std::vector<double> sizes;
  std::size_t n_tiers = 0;
  for (std::size_t c = 2; c < f.size(); ++c) {
    const auto name = f[c];
    const auto zpos = name.find("_z");
    if (name.size() < 8 || (name.substr(0, 5) != "bid_t" && name.substr(0, 5) != "ask_t") || zpos == std::string_view::npos)
      csv.fail("unexpected column '" + std::string(name) + "'");
    const std::size_t tier = csv.index(name.substr(5, zpos - 5), "tier index");
    const double z = csv.number(name.substr(zpos + 2), "size");
    n_tiers = std::max(n_tiers, tier);
    if (tier == 1 && name.substr(0, 3) == "bid") sizes.push_back(z);
  }
  if (n_tiers == 0 || sizes.empty()) csv.fail("strategy header has no quote columns");
  const auto expected = detail::strategy_header(n_tiers, sizes);
  if (f.size() != expected.size()) csv.fail("strategy header has an inconsistent column count");
  for (std::size_t c = 0; c < f.size(); ++c)
    if (f[c] != expected[c]) csv.fail("unexpected column '" + std::string(f[c]) + "', expected '" + expected[c] + "'");

  auto value = [&](std::string_view field) {
    if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
    return csv.number(field, "value");
  };
  std::vector<double> q, v;
  std::vector<std::vector<double>> rows;
  while (csv.next(f)) {
    if (f.size() != expected.size())
      csv.fail("expected " + std::to_string(expected.size()) + " fields, got " + std::to_string(f.size()));
    q.push_back(csv.number(f[0], "q_meur"));
    v.push_back(csv.number(f[1], "v_meur_per_day"));
    std::vector<double> r;
    for (std::size_t c = 2; c < f.size(); ++c) r.push_back(value(f[c]));
    rows.push_back(std::move(r));
  }
  StrategyTable s(q, sizes, n_tiers);
  s.hedge_rate = v;
  const std::size_t K = sizes.size();
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t n = 0; n < n_tiers; ++n)
      for (std::size_t k = 0; k < K; ++k) {
        s.bid(n, k, i) = rows[i][n * 2 * K + k];
        s.ask(n, k, i) = rows[i][n * 2 * K + K + k];
      }
  s.validate();
  s.update_band_from_hedge();
  return s;
}

inline void write_strategy_file(const std::string& path, const StrategyTable& s) {
  auto out = detail::open_output(path);
  write_strategy(out, s);
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline StrategyTable read_strategy_file(const std::string& path) {
  auto in = detail::open_input(path);
  return read_strategy(in, path);
}

inline nlohmann::json to_json(const SolveReport& r, const StrategyTable& s, double gamma, double horizon) {
  return {{"gamma", gamma},
          {"horizon_days", horizon},
          {"stationarity_residual", r.stationarity_residual},
          {"quote_change_bps", r.quote_change},
          {"hedge_change_meur_per_day", r.hedge_change},
          {"stationary", r.stationary},
          {"band_lower_meur", s.band_lower},
          {"band_upper_meur", s.band_upper},
          {"time_steps", r.time_steps},
          {"policy_iterations", r.policy_iterations},
          {"max_policy_iterations", r.max_policy_iterations},
          {"wall_seconds", r.wall_seconds}};
}

/// Metrics record; wall-clock fields are deliberately absent so reruns are byte-identical.
inline nlohmann::json to_json(const SimMetrics& m, double gamma) {
  return {{"gamma", gamma},
          {"mean_pnl", m.mean_pnl},
          {"std_pnl", m.std_pnl},
          {"turnover_by_tier", m.turnover_by_tier},
          {"client_turnover", m.client_turnover},
          {"external_turnover", m.external_turnover},
          {"volume_share_by_tier", m.volume_share_by_tier},
          {"external_share", m.external_share},
          {"client_share", m.client_share},
          {"externalization_ratio", m.externalization_ratio},
          {"tau_R_minutes", m.tau_r_minutes},
          {"n_paths", m.n_paths},
          {"seed", m.seed}};
}

/// Per-step event log of the recorded paths, for offline P&L reconstruction.
inline void write_events(std::ostream& out, std::span<const StepEvent> events) {
  out << "path,step,price_before,price_after,inventory_after,fill_margin,hedge_rate,execution_cost,fills\n";
  for (const auto& e : events)
    out << e.path << ',' << e.step << ',' << format_number(e.price_before) << ',' << format_number(e.price_after) << ','
        << format_number(e.inventory_after) << ',' << format_number(e.fill_margin) << ',' << format_number(e.hedge_rate)
        << ',' << format_number(e.execution_cost) << ',' << e.fills << '\n';
}

}  // namespace fxmm
