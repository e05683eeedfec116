#pragma once
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hedgelab/models.hpp"
#include "hedgelab/training.hpp"

namespace hedgelab::risk {

struct PnlDistribution {
  std::vector<double> values;
};

// Entropic risk measure (logsumexp(-lambda x) - log n)/lambda, max-shifted so
// heavy left tails cannot overflow. Lower is better for the hedger.
double erm(std::span<const double> x, double lambda);

// Empirical lower-tail quantile at confidence `level` (e.g. 0.99 probes the
// worst 1%): the smallest sample value whose empirical CDF strictly exceeds
// u = 1 - level. No interpolation; reported signed.
double value_at_risk(std::span<const double> x, double level);

struct RiskReport {
  std::string model;  // family name or "bs_delta"
  int span = 0;
  std::string seed;   // seed number, or "avg" for seed-averaged rows
  double erm = 0, mean = 0;
  double var99 = 0, var95 = 0, var90 = 0, var80 = 0, var50 = 0;
  double lambda = 0;

  static std::string csv_header();
  std::string csv_row() const;
};

using DeltaFn = std::function<double(std::span<const double> span)>;

// Realized pnl of the strategy on every sample; elementwise and parallel,
// with one output slot per sample so the result is thread-count independent.
PnlDistribution hedge_pnl(const DeltaFn& strategy, std::span<const training::HedgeSample> data,
                          double cost);
PnlDistribution hedge_pnl(const models::ModelParams& model,
                          std::span<const training::HedgeSample> data, double cost);

RiskReport summarize(const PnlDistribution& dist, double lambda, std::string model, int span,
                     std::string seed);

// Full evaluation: model deltas -> pnl -> all seven statistics.
RiskReport evaluate(const models::ModelParams& model, std::span<const training::HedgeSample> data,
                    double lambda, double cost, std::string seed_label);

}  // namespace hedgelab::risk
