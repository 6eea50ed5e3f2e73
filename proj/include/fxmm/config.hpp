#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fxmm/errors.hpp"
#include "fxmm/flow_io.hpp"
#include "fxmm/frontier.hpp"
#include "fxmm/hjb_solver.hpp"
#include "fxmm/model_params.hpp"
#include "fxmm/strategy_io.hpp"
#include "fxmm/tiering.hpp"

namespace fxmm {

struct SimulationSettings {
  std::size_t paths = 1000;
  double horizon = 10.0;  // days
  double step = 1e-5;     // days
  double initial_inventory = 0.0;
  double burn_in_fraction = 0.1;
  std::size_t acf_stride = 10;
  std::size_t acf_max_lag = 5000;
  bool record_events = false;
  std::size_t event_paths = 1;
  unsigned threads = 1;
  std::string strategy_file;  // optional: simulate this table instead of solving
};

struct CalibrationSettings {
  std::string trades_file;
  std::string quotes_file;
  std::string fits_file;  // per-client fits to re-tier (tier command); defaults to <out>/tiers.json
  std::size_t tiers = 2;
  SideSelection sides = SideSelection::pooled;
  LiquidHours hours;
  KMeansOptions kmeans;
};

/// Everything a command needs, with defaults equal to the reference parameter set.
struct RunConfig {
  ModelParams model;
  std::vector<double> gammas;  // empty: use model.gamma
  std::string tiers_file;      // optional: calibrated tiers JSON replacing [tierN] sections
  SolverOptions solver;
  double max_solve_horizon = 1.0;
  SimulationSettings simulation;
  FrontierOptions frontier;
  CalibrationSettings calibration;
  std::uint64_t seed = 1;
  std::string out_dir = ".";

  [[nodiscard]] std::vector<double> gamma_list() const { return gammas.empty() ? std::vector<double>{model.gamma} : gammas; }
};

namespace detail {

inline std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = trim(item);
    if (t.empty()) continue;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) throw ValidationError("invalid number '" + std::string(t) + "' in " + key);
    out.push_back(v);
  }
  return out;
}

// Shortest text that reads back to the same double, so the echo stays legible and exact.
inline std::string format_value(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline std::string format_list(const std::vector<double>& xs) {
  std::string s;
  for (double x : xs) s += (s.empty() ? "" : ", ") + format_value(x);
  return s;
}

inline const char* side_name(SideSelection s) {
  return s == SideSelection::pooled ? "pooled" : s == SideSelection::bid ? "bid" : "ask";
}

inline SideSelection parse_side(const std::string& s) {
  if (s == "pooled") return SideSelection::pooled;
  if (s == "bid") return SideSelection::bid;
  if (s == "ask") return SideSelection::ask;
  throw ValidationError("calibration.sides must be pooled, bid or ask");
}

// Typed lookup that reports the offending key.
template <class T>
T get(const boost::property_tree::ptree& pt, const std::string& key, const T& fallback) {
  try {
    return pt.get<T>(key, fallback);
  } catch (const boost::property_tree::ptree_bad_data&) {
    throw ValidationError("invalid value for '" + key + "': '" + pt.get<std::string>(key) + "'");
  }
}

}  // namespace detail

inline const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys{
      "model.sigma", "model.impact_k", "model.gamma", "model.gammas", "model.horizon", "model.q_bound",
      "model.grid_points", "model.sizes", "model.eta", "model.phi", "model.tiers_file",
      "solver.dt", "solver.policy_tolerance", "solver.max_policy_iterations", "solver.stationarity_tolerance",
      "solver.max_horizon",
      "simulation.paths", "simulation.horizon", "simulation.step", "simulation.seed", "simulation.initial_inventory",
      "simulation.burn_in_fraction", "simulation.acf_stride", "simulation.acf_max_lag", "simulation.record_events",
      "simulation.event_paths", "simulation.threads", "simulation.strategy_file",
      "frontier.gammas", "frontier.perturbations", "frontier.paths", "frontier.horizon", "frontier.step",
      "frontier.quote_shift", "frontier.band_scale_spread", "frontier.slope_scale_spread",
      "calibration.trades", "calibration.quotes", "calibration.fits", "calibration.tiers", "calibration.sides",
      "calibration.liquid_open_hour", "calibration.liquid_close_hour", "calibration.kmeans_restarts",
      "calibration.kmeans_seed",
      "output.dir"};
  return keys;
}

/// Builds a run configuration from an INI property tree; absent keys keep their defaults.
///
/// Tier sections are named [tier1], [tier2], ...; each has alpha, beta and
/// either lambda_by_size (one value per ladder size) or a total lambda split
/// by the standard size weights.
inline RunConfig config_from_ptree(const boost::property_tree::ptree& pt) {
  using detail::get;
  for (const auto& [section, body] : pt) {
    const bool tier = section.rfind("tier", 0) == 0 && section.size() > 4;
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const bool known = tier ? (key == "alpha" || key == "beta" || key == "lambda" || key == "lambda_by_size")
                              : std::find(known_config_keys().begin(), known_config_keys().end(), full) !=
                                    known_config_keys().end();
      if (!known) throw ValidationError("unknown configuration key '" + full + "'");
    }
  }

  RunConfig c;
  auto& m = c.model;
  m.sigma = get(pt, "model.sigma", m.sigma);
  m.impact_k = get(pt, "model.impact_k", m.impact_k);
  m.gamma = get(pt, "model.gamma", m.gamma);
  m.horizon = get(pt, "model.horizon", m.horizon);
  m.q_bound = get(pt, "model.q_bound", m.q_bound);
  m.grid_points = get(pt, "model.grid_points", m.grid_points);
  m.cost.eta = get(pt, "model.eta", m.cost.eta);
  m.cost.phi = get(pt, "model.phi", m.cost.phi);
  if (auto s = pt.get_optional<std::string>("model.sizes")) m.ladder.sizes = detail::parse_list(*s, "model.sizes");
  if (auto g = pt.get_optional<std::string>("model.gammas")) c.gammas = detail::parse_list(*g, "model.gammas");
  c.tiers_file = get(pt, "model.tiers_file", std::string());

  std::vector<TierIntensity> tiers;
  for (std::size_t n = 1;; ++n) {
    const auto section = pt.get_child_optional("tier" + std::to_string(n));
    if (!section) break;
    const std::string name = "tier" + std::to_string(n);
    TierIntensity t;
    t.shape.alpha = get(pt, name + ".alpha", 0.0);
    t.shape.beta = get(pt, name + ".beta", 1.0);
    if (auto l = section->get_optional<std::string>("lambda_by_size"))
      t.lambda_by_size = detail::parse_list(*l, name + ".lambda_by_size");
    else if (m.ladder.size() == standard_size_weights().size())
      t.lambda_by_size = scaled_weights(get(pt, name + ".lambda", 1800.0), standard_size_weights());
    else
      throw ValidationError(name + " needs lambda_by_size when the ladder is not the standard one");
    tiers.push_back(std::move(t));
  }
  if (!tiers.empty()) m.tiers = std::move(tiers);

  auto& s = c.solver;
  s.dt = get(pt, "solver.dt", s.dt);
  s.policy_tolerance = get(pt, "solver.policy_tolerance", s.policy_tolerance);
  s.max_policy_iterations = get(pt, "solver.max_policy_iterations", s.max_policy_iterations);
  s.stationarity_tolerance = get(pt, "solver.stationarity_tolerance", s.stationarity_tolerance);
  c.max_solve_horizon = get(pt, "solver.max_horizon", c.max_solve_horizon);

  auto& sim = c.simulation;
  sim.paths = get(pt, "simulation.paths", sim.paths);
  sim.horizon = get(pt, "simulation.horizon", sim.horizon);
  sim.step = get(pt, "simulation.step", sim.step);
  c.seed = get(pt, "simulation.seed", c.seed);
  sim.initial_inventory = get(pt, "simulation.initial_inventory", sim.initial_inventory);
  sim.burn_in_fraction = get(pt, "simulation.burn_in_fraction", sim.burn_in_fraction);
  sim.acf_stride = get(pt, "simulation.acf_stride", sim.acf_stride);
  sim.acf_max_lag = get(pt, "simulation.acf_max_lag", sim.acf_max_lag);
  sim.record_events = get(pt, "simulation.record_events", sim.record_events);
  sim.event_paths = get(pt, "simulation.event_paths", sim.event_paths);
  sim.threads = get(pt, "simulation.threads", sim.threads);
  sim.strategy_file = get(pt, "simulation.strategy_file", sim.strategy_file);

  auto& f = c.frontier;
  if (auto g = pt.get_optional<std::string>("frontier.gammas")) f.gammas = detail::parse_list(*g, "frontier.gammas");
  f.perturbations = get(pt, "frontier.perturbations", f.perturbations);
  f.n_paths = get(pt, "frontier.paths", f.n_paths);
  f.horizon = get(pt, "frontier.horizon", f.horizon);
  f.step = get(pt, "frontier.step", f.step);
  f.magnitudes.quote_shift = get(pt, "frontier.quote_shift", f.magnitudes.quote_shift);
  f.magnitudes.band_scale_spread = get(pt, "frontier.band_scale_spread", f.magnitudes.band_scale_spread);
  f.magnitudes.slope_scale_spread = get(pt, "frontier.slope_scale_spread", f.magnitudes.slope_scale_spread);

  auto& cal = c.calibration;
  cal.trades_file = get(pt, "calibration.trades", cal.trades_file);
  cal.quotes_file = get(pt, "calibration.quotes", cal.quotes_file);
  cal.fits_file = get(pt, "calibration.fits", cal.fits_file);
  cal.tiers = get(pt, "calibration.tiers", cal.tiers);
  cal.sides = detail::parse_side(get(pt, "calibration.sides", std::string("pooled")));
  cal.hours.open_hour = get(pt, "calibration.liquid_open_hour", cal.hours.open_hour);
  cal.hours.close_hour = get(pt, "calibration.liquid_close_hour", cal.hours.close_hour);
  cal.kmeans.restarts = get(pt, "calibration.kmeans_restarts", cal.kmeans.restarts);
  cal.kmeans.seed = get(pt, "calibration.kmeans_seed", cal.kmeans.seed);

  c.out_dir = get(pt, "output.dir", c.out_dir);
  return c;
}

inline RunConfig read_config(std::istream& in, const std::string& source) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(source, e.line(), e.message());
  }
  return config_from_ptree(pt);
}

inline RunConfig read_config_file(const std::string& path) {
  auto in = detail::open_input(path);
  return read_config(in, path);
}

/// Fully resolved configuration in the same INI format it is read from.
inline void write_config(std::ostream& out, const RunConfig& c) {
  using detail::format_list;
  using detail::format_value;
  const auto& m = c.model;
  out << "[model]\n"
      << "sigma = " << format_value(m.sigma) << "\nimpact_k = " << format_value(m.impact_k)
      << "\ngamma = " << format_value(m.gamma) << "\ngammas = " << format_list(c.gamma_list())
      << "\nhorizon = " << format_value(m.horizon) << "\nq_bound = " << format_value(m.q_bound)
      << "\ngrid_points = " << m.grid_points << "\nsizes = " << format_list(m.ladder.sizes)
      << "\neta = " << format_value(m.cost.eta) << "\nphi = " << format_value(m.cost.phi) << "\n\n";
  for (std::size_t n = 0; n < m.tiers.size(); ++n)
    out << "[tier" << n + 1 << "]\nalpha = " << format_value(m.tiers[n].shape.alpha)
        << "\nbeta = " << format_value(m.tiers[n].shape.beta)
        << "\nlambda_by_size = " << format_list(m.tiers[n].lambda_by_size) << "\n\n";
  const auto& s = c.solver;
  out << "[solver]\ndt = " << format_value(s.dt) << "\npolicy_tolerance = " << format_value(s.policy_tolerance)
      << "\nmax_policy_iterations = " << s.max_policy_iterations
      << "\nstationarity_tolerance = " << format_value(s.stationarity_tolerance)
      << "\nmax_horizon = " << format_value(c.max_solve_horizon) << "\n\n";
  const auto& sim = c.simulation;
  out << "[simulation]\npaths = " << sim.paths << "\nhorizon = " << format_value(sim.horizon)
      << "\nstep = " << format_value(sim.step) << "\nseed = " << c.seed
      << "\ninitial_inventory = " << format_value(sim.initial_inventory)
      << "\nburn_in_fraction = " << format_value(sim.burn_in_fraction) << "\nacf_stride = " << sim.acf_stride
      << "\nacf_max_lag = " << sim.acf_max_lag << "\nrecord_events = " << (sim.record_events ? "true" : "false")
      << "\nevent_paths = " << sim.event_paths << "\nthreads = " << sim.threads << "\n";
  if (!sim.strategy_file.empty()) out << "strategy_file = " << sim.strategy_file << "\n";
  const auto& f = c.frontier;
  out << "\n[frontier]\ngammas = " << format_list(f.gammas) << "\nperturbations = " << f.perturbations
      << "\npaths = " << f.n_paths << "\nhorizon = " << format_value(f.horizon) << "\nstep = " << format_value(f.step)
      << "\nquote_shift = " << format_value(f.magnitudes.quote_shift)
      << "\nband_scale_spread = " << format_value(f.magnitudes.band_scale_spread)
      << "\nslope_scale_spread = " << format_value(f.magnitudes.slope_scale_spread) << "\n\n";
  const auto& cal = c.calibration;
  out << "[calibration]\n";
  if (!cal.trades_file.empty()) out << "trades = " << cal.trades_file << "\n";
  if (!cal.quotes_file.empty()) out << "quotes = " << cal.quotes_file << "\n";
  if (!cal.fits_file.empty()) out << "fits = " << cal.fits_file << "\n";
  out << "tiers = " << cal.tiers << "\nsides = " << detail::side_name(cal.sides)
      << "\nliquid_open_hour = " << format_value(cal.hours.open_hour)
      << "\nliquid_close_hour = " << format_value(cal.hours.close_hour)
      << "\nkmeans_restarts = " << cal.kmeans.restarts << "\nkmeans_seed = " << cal.kmeans.seed << "\n\n";
  out << "[output]\ndir = " << c.out_dir << "\n";
}

}  // namespace fxmm
