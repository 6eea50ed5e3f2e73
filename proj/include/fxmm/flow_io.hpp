#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "fxmm/errors.hpp"
#include "fxmm/flow_model.hpp"
#include "fxmm/tiering.hpp"

namespace fxmm {

/// UTC time-of-day window [open, close) in hours; trades outside it are dropped at ingestion.
struct LiquidHours {
  double open_hour = 6.0;
  double close_hour = 20.0;

  [[nodiscard]] bool contains(double hour) const { return hour >= open_hour && hour < close_hour; }
  void validate() const {
    if (!(open_hour >= 0.0 && open_hour < close_hour && close_hour <= 24.0))
      throw ValidationError("liquid-hours window must satisfy 0 <= open < close <= 24");
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Line-oriented CSV reader that skips blank lines and tracks 1-based line numbers.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  bool next(std::vector<std::string_view>& fields) {
    while (std::getline(in_, line_)) {
      ++line_no_;
      if (trim(line_).empty()) continue;
      fields = split_csv(line_);
      return true;
    }
    return false;
  }

  void expect_header(const std::vector<std::string_view>& expected) {
    std::vector<std::string_view> fields;
    if (!next(fields)) throw NoDataError(source_ + ": file is empty");
    if (fields != expected) {
      std::string want;
      for (auto f : expected) want += (want.empty() ? "" : ",") + std::string(f);
      fail("expected header '" + want + "'");
    }
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_no_, what); }

  double number(std::string_view field, const char* name) const {
    double v = 0.0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
      fail(std::string("invalid ") + name + " '" + std::string(field) + "'");
    return v;
  }

  std::size_t index(std::string_view field, const char* name) const {
    std::size_t v = 0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (field.empty() || ec != std::errc() || ptr != end) fail(std::string("invalid ") + name + " '" + std::string(field) + "'");
    return v;
  }

  Side side(std::string_view field) const {
    if (field == "bid") return Side::bid;
    if (field == "ask") return Side::ask;
    fail("side must be 'bid' or 'ask', got '" + std::string(field) + "'");
  }

  [[nodiscard]] std::size_t line() const noexcept { return line_no_; }
  [[nodiscard]] const std::string& source() const noexcept { return source_; }

 private:
  std::istream& in_;
  std::string source_;
  std::string line_;
  std::size_t line_no_ = 0;
};

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace detail

/// Hour of day (UTC, fractional) from an ISO-8601 timestamp "YYYY-MM-DDTHH:MM[:SS[.fff]][Z]".
/// Returns a negative value when the text is not a timestamp of that form.
inline double utc_hour_of_day(std::string_view ts) {
  const auto t = ts.find_first_of("T ");
  if (t == std::string_view::npos || t != 10 || ts.size() < t + 6) return -1.0;
  auto digits = [&](std::size_t pos, std::size_t len, int& out) {
    if (pos + len > ts.size()) return false;
    const auto [ptr, ec] = std::from_chars(ts.data() + pos, ts.data() + pos + len, out);
    return ec == std::errc() && ptr == ts.data() + pos + len;
  };
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!digits(0, 4, y) || ts[4] != '-' || !digits(5, 2, mo) || ts[7] != '-' || !digits(8, 2, d)) return -1.0;
  if (!digits(t + 1, 2, h) || ts[t + 3] != ':' || !digits(t + 4, 2, mi)) return -1.0;
  if (ts.size() > t + 6 && ts[t + 6] == ':' && !digits(t + 7, 2, s)) return -1.0;
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60) return -1.0;
  return double(h) + double(mi) / 60.0 + double(s) / 3600.0;
}

struct TradeLoad {
  std::vector<TradeObservation> trades;
  std::size_t rows = 0;
  std::size_t outside_hours = 0;
};

/// Reads `client_id,timestamp_utc,side,size_meur,quote_bps`, keeping trades inside the liquid-hours window.
inline TradeLoad read_trades(std::istream& in, const std::string& source, const LiquidHours& hours = {}) {
  hours.validate();
  detail::CsvReader csv(in, source);
  csv.expect_header({"client_id", "timestamp_utc", "side", "size_meur", "quote_bps"});
  TradeLoad out;
  std::vector<std::string_view> f;
  while (csv.next(f)) {
    if (f.size() != 5) csv.fail("expected 5 fields, got " + std::to_string(f.size()));
    if (f[0].empty()) csv.fail("empty client_id");
    const double hour = utc_hour_of_day(f[1]);
    if (hour < 0.0) csv.fail("invalid timestamp '" + std::string(f[1]) + "'");
    TradeObservation t{std::string(f[0]), csv.side(f[2]), csv.number(f[3], "size_meur"), csv.number(f[4], "quote_bps")};
    if (!(t.size_meur > 0.0)) csv.fail("size_meur must be positive");
    ++out.rows;
    if (!hours.contains(hour)) {
      ++out.outside_hours;
      continue;
    }
    out.trades.push_back(std::move(t));
  }
  return out;
}

/// Reads `client_id,side,size_bucket,quote_bps,duration_days`; size_bucket is a 0-based ladder index.
inline std::vector<QuoteObservation> read_quotes(std::istream& in, const std::string& source, const SizeLadder& ladder) {
  detail::CsvReader csv(in, source);
  csv.expect_header({"client_id", "side", "size_bucket", "quote_bps", "duration_days"});
  std::vector<QuoteObservation> out;
  std::vector<std::string_view> f;
  while (csv.next(f)) {
    if (f.size() != 5) csv.fail("expected 5 fields, got " + std::to_string(f.size()));
    if (f[0].empty()) csv.fail("empty client_id");
    QuoteObservation q{std::string(f[0]), csv.side(f[1]), csv.index(f[2], "size_bucket"), csv.number(f[3], "quote_bps"),
                       csv.number(f[4], "duration_days")};
    if (q.size_bucket >= ladder.size()) csv.fail("size_bucket " + std::to_string(q.size_bucket) + " outside the ladder");
    if (!(q.duration_days > 0.0)) csv.fail("duration_days must be positive");
    out.push_back(std::move(q));
  }
  return out;
}

inline TradeLoad read_trades_file(const std::string& path, const LiquidHours& hours = {}) {
  auto in = detail::open_input(path);
  return read_trades(in, path, hours);
}

inline std::vector<QuoteObservation> read_quotes_file(const std::string& path, const SizeLadder& ladder) {
  auto in = detail::open_input(path);
  return read_quotes(in, path, ladder);
}

inline void write_trades(std::ostream& out, std::span<const TradeObservation> trades, std::string_view timestamp) {
  out << "client_id,timestamp_utc,side,size_meur,quote_bps\n";
  out.precision(17);
  for (const auto& t : trades)
    out << t.client_id << ',' << timestamp << ',' << to_string(t.side) << ',' << t.size_meur << ',' << t.quote_bps << '\n';
}

inline void write_quotes(std::ostream& out, std::span<const QuoteObservation> quotes) {
  out << "client_id,side,size_bucket,quote_bps,duration_days\n";
  out.precision(17);
  for (const auto& q : quotes)
    out << q.client_id << ',' << to_string(q.side) << ',' << q.size_bucket << ',' << q.quote_bps << ',' << q.duration_days
        << '\n';
}

/// Calibration output: per-client fits, failures and the pooled tiers.
inline nlohmann::json to_json(const ClientFitBatch& batch, const TierAssignment& tiers, const SizeLadder& ladder) {
  nlohmann::json j;
  j["sizes_meur"] = ladder.sizes;
  auto& jt = j["tiers"] = nlohmann::json::array();
  for (std::size_t n = 0; n < tiers.tiers.size(); ++n) {
    jt.push_back({{"tier", n + 1},
                  {"alpha", tiers.tiers[n].shape.alpha},
                  {"beta", tiers.tiers[n].shape.beta},
                  {"lambda_by_size", tiers.tiers[n].lambda_by_size},
                  {"log_likelihood", tiers.log_likelihood[n]},
                  {"member_client_ids", tiers.members[n]}});
  }
  auto& jc = j["clients"] = nlohmann::json::array();
  for (const auto& c : batch.fits)
    jc.push_back({{"client_id", c.client_id},
                  {"tier", tiers.tier_of_client.at(c.client_id) + 1},
                  {"alpha", c.intensity.shape.alpha},
                  {"beta", c.intensity.shape.beta},
                  {"lambda_by_size", c.intensity.lambda_by_size},
                  {"log_likelihood", c.log_likelihood}});
  auto& jf = j["failures"] = nlohmann::json::array();
  for (const auto& f : batch.failures) jf.push_back({{"client_id", f.client_id}, {"error", f.reason}});
  return j;
}

/// Reads the `tiers` array of a calibration JSON into tier intensities (ordered by tier index).
inline std::vector<TierIntensity> tiers_from_json(const nlohmann::json& j, std::size_t n_sizes) {
  if (!j.contains("tiers") || !j["tiers"].is_array() || j["tiers"].empty())
    throw DataError("tiers JSON has no 'tiers' array");
  std::vector<TierIntensity> out;
  for (const auto& t : j["tiers"]) {
    try {
      TierIntensity ti{IntensityShape{t.at("alpha").get<double>(), t.at("beta").get<double>()},
                       t.at("lambda_by_size").get<std::vector<double>>()};
      ti.validate(n_sizes);
      out.push_back(std::move(ti));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed tier entry: ") + e.what());
    }
  }
  return out;
}

inline std::vector<TierIntensity> read_tiers_file(const std::string& path, std::size_t n_sizes) {
  auto in = detail::open_input(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return tiers_from_json(j, n_sizes);
}

}  // namespace fxmm
