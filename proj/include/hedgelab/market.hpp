#pragma once
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace hedgelab::market {

struct MarketConfig {
  double s0 = 100.0;       // initial spot
  double strike = 100.0;   // option strike K
  double rate = 0.02;      // annualized risk-free rate
  double vol = 0.2;        // annualized volatility
  int horizon_days = 22;   // trading days to expiry
  int n_paths = 10000;
  uint64_t seed = 42;

  static constexpr double dt = 1.0 / 252.0;  // one trading day in years

  void validate() const;  // throws config_error
};

// Immutable bundle of simulated paths; row-major [n_paths][horizon_days+1],
// column 0 holding s0.
struct PathSet {
  MarketConfig config;
  std::vector<double> prices;

  int n_paths() const { return config.n_paths; }
  int n_cols() const { return config.horizon_days + 1; }
  double at(int path, int day) const { return prices[size_t(path) * n_cols() + day]; }
  std::span<const double> path(int p) const {
    return {prices.data() + size_t(p) * n_cols(), size_t(n_cols())};
  }
};

// GBM simulation with a deterministic per-path RNG stream, so the result is
// identical for any thread count. The serial variant is the reference the
// parallel kernel is tested against.
PathSet simulate_paths(const MarketConfig& config);
PathSet simulate_paths_serial(const MarketConfig& config);

// One sample per path for the single-spot experiments: initial spot, terminal
// price, premium = analytic call value at (s0, full horizon), and the strike.
struct TerminalSample {
  double s0;
  double s_t;
  double premium;
  double strike;
};
std::vector<TerminalSample> build_terminal_dataset(const PathSet& paths);

// One sample per path for the sequence-model experiments: the last
// span_length prices before the terminal day, the terminal price, and the
// premium = analytic call value at (span.back(), one trading day).
// span.back() is the price at which the delta decision is made.
struct SpanSample {
  std::vector<double> span;
  double s_next;
  double premium;
  double strike;
};
std::vector<SpanSample> build_span_dataset(const PathSet& paths, int span_length);

// CSV round-trip: a '#' metadata line embedding the full config, a header row
// of day indices, then one shortest-representation row per path (exact).
void save_csv(const PathSet& paths, std::ostream& out);
PathSet load_csv(std::istream& in);

}  // namespace hedgelab::market
