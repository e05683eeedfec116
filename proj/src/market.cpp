#include "hedgelab/market.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "hedgelab/analytics.hpp"
#include "hedgelab/errors.hpp"
#include "hedgelab/io.hpp"
#include "hedgelab/rng.hpp"

namespace hedgelab::market {

void MarketConfig::validate() const {
  if (!(s0 > 0.0)) throw config_error("market: s0 must be positive");
  if (!(strike > 0.0)) throw config_error("market: strike must be positive");
  if (vol < 0.0) throw config_error("market: vol must be non-negative");
  if (horizon_days < 1) throw config_error("market: horizon_days must be >= 1");
  if (n_paths < 1) throw config_error("market: n_paths must be >= 1");
}

namespace {

// One path, one private RNG stream: this is what makes the parallel and
// serial kernels agree bit for bit.
void fill_path(const MarketConfig& c, uint64_t path_index, double* row) {
  rng::SplitMix64 g(rng::path_seed(c.seed, path_index));
  double drift = (c.rate - 0.5 * c.vol * c.vol) * MarketConfig::dt;
  double diff = c.vol * std::sqrt(MarketConfig::dt);
  row[0] = c.s0;
  double s = c.s0;
  for (int d = 1; d <= c.horizon_days; ++d) {
    s *= std::exp(drift + diff * g.normal());
    row[d] = s;
  }
}

}  // namespace

PathSet simulate_paths(const MarketConfig& config) {
  config.validate();
  PathSet out{config, std::vector<double>(size_t(config.n_paths) * (config.horizon_days + 1))};
  int cols = out.n_cols();
#pragma omp parallel for schedule(static)
  for (int p = 0; p < config.n_paths; ++p)
    fill_path(config, uint64_t(p), out.prices.data() + size_t(p) * cols);
  return out;
}

PathSet simulate_paths_serial(const MarketConfig& config) {
  config.validate();
  PathSet out{config, std::vector<double>(size_t(config.n_paths) * (config.horizon_days + 1))};
  int cols = out.n_cols();
  for (int p = 0; p < config.n_paths; ++p)
    fill_path(config, uint64_t(p), out.prices.data() + size_t(p) * cols);
  return out;
}

std::vector<TerminalSample> build_terminal_dataset(const PathSet& paths) {
  if (paths.prices.empty()) throw contract_error("build_terminal_dataset: empty PathSet");
  const MarketConfig& c = paths.config;
  double tau = c.horizon_days * MarketConfig::dt;
  double premium = analytics::bs_price(c.s0, c.strike, c.rate, c.vol, tau);
  std::vector<TerminalSample> out;
  out.reserve(size_t(c.n_paths));
  for (int p = 0; p < c.n_paths; ++p)
    out.push_back({c.s0, paths.at(p, c.horizon_days), premium, c.strike});
  return out;
}

std::vector<SpanSample> build_span_dataset(const PathSet& paths, int span_length) {
  const MarketConfig& c = paths.config;
  if (span_length < 1) throw config_error("build_span_dataset: span_length must be >= 1");
  if (span_length > c.horizon_days)
    throw config_error("build_span_dataset: span_length " + std::to_string(span_length) +
                       " exceeds horizon_days " + std::to_string(c.horizon_days));
  int t_end = c.horizon_days;  // terminal day index
  std::vector<SpanSample> out;
  out.reserve(size_t(c.n_paths));
  for (int p = 0; p < c.n_paths; ++p) {
    SpanSample s;
    s.span.assign(paths.path(p).begin() + (t_end - span_length), paths.path(p).begin() + t_end);
    s.s_next = paths.at(p, t_end);
    s.premium = analytics::bs_price(s.span.back(), c.strike, c.rate, c.vol, MarketConfig::dt);
    s.strike = c.strike;
    out.push_back(std::move(s));
  }
  return out;
}

void save_csv(const PathSet& paths, std::ostream& out) {
  const MarketConfig& c = paths.config;
  out << "# hedgelab paths v1, generator=splitmix64+boxmuller"
      << ", s0=" << io::format_double(c.s0) << ", strike=" << io::format_double(c.strike)
      << ", rate=" << io::format_double(c.rate) << ", vol=" << io::format_double(c.vol)
      << ", horizon_days=" << c.horizon_days << ", n_paths=" << c.n_paths
      << ", seed=" << c.seed << "\n";
  for (int d = 0; d <= c.horizon_days; ++d) out << (d ? "," : "") << "day" << d;
  out << "\n";
  for (int p = 0; p < c.n_paths; ++p) {
    auto row = paths.path(p);
    for (int d = 0; d <= c.horizon_days; ++d)
      out << (d ? "," : "") << io::format_double(row[d]);
    out << "\n";
  }
}

namespace {

// pulls "key=value" out of the metadata comment line
std::string_view meta_field(std::string_view meta, std::string_view key) {
  std::string pat = std::string(key) + "=";
  size_t pos = meta.find(pat);
  if (pos == std::string_view::npos)
    throw integrity_error("paths csv: metadata missing field '" + std::string(key) + "'");
  size_t start = pos + pat.size();
  size_t end = meta.find_first_of(",\n", start);
  return meta.substr(start, end == std::string_view::npos ? end : end - start);
}

}  // namespace

PathSet load_csv(std::istream& in) {
  std::string meta;
  if (!std::getline(in, meta) || !meta.starts_with("#"))
    throw integrity_error("paths csv: missing metadata line");
  MarketConfig c;
  c.s0 = io::parse_double(meta_field(meta, "s0"));
  c.strike = io::parse_double(meta_field(meta, "strike"));
  c.rate = io::parse_double(meta_field(meta, "rate"));
  c.vol = io::parse_double(meta_field(meta, "vol"));
  c.horizon_days = int(io::parse_int(meta_field(meta, "horizon_days")));
  c.n_paths = int(io::parse_int(meta_field(meta, "n_paths")));
  c.seed = io::parse_uint(meta_field(meta, "seed"));
  c.validate();
  std::string header;
  if (!std::getline(in, header) || !header.starts_with("day0"))
    throw integrity_error("paths csv: missing header row");
  PathSet out{c, {}};
  out.prices.reserve(size_t(c.n_paths) * (c.horizon_days + 1));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = io::split(line, ',');
    if (int(cells.size()) != c.horizon_days + 1)
      throw integrity_error("paths csv: row with " + std::to_string(cells.size()) +
                            " cells, expected " + std::to_string(c.horizon_days + 1));
    for (auto cell : cells) out.prices.push_back(io::parse_double(cell));
  }
  if (int(out.prices.size()) != c.n_paths * (c.horizon_days + 1))
    throw integrity_error("paths csv: row count does not match n_paths");
  return out;
}

}  // namespace hedgelab::market
