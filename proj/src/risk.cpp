#include "hedgelab/risk.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "hedgelab/autodiff.hpp"
#include "hedgelab/errors.hpp"
#include "hedgelab/io.hpp"

namespace hedgelab::risk {

double erm(std::span<const double> x, double lambda) {
  if (x.empty()) throw domain_error("erm: empty sample");
  if (!(lambda > 0.0)) throw domain_error("erm: lambda must be positive");
  // logsumexp of -lambda*x, shifted by the max exponent for stability.
  double m = -lambda * x[0];
  for (double v : x) m = std::max(m, -lambda * v);
  double acc = 0.0;
  for (double v : x) acc += std::exp(-lambda * v - m);
  // folding the 1/n into the log keeps the constant-sample case exact:
  // acc == n there, so the log term vanishes instead of cancelling inexactly
  double out = (m + std::log(acc / static_cast<double>(x.size()))) / lambda;
  if (!std::isfinite(out)) throw domain_error("erm: result not finite");
  return out;
}

double value_at_risk(std::span<const double> x, double level) {
  if (x.empty()) throw domain_error("value_at_risk: empty sample");
  if (!(level > 0.0) || !(level < 1.0))
    throw domain_error("value_at_risk: level must lie in (0,1), got " + io::format_double(level));
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double u = 1.0 - level;
  const auto n = sorted.size();
  // First order statistic whose empirical CDF k/n strictly exceeds u.
  for (std::size_t k = 1; k <= n; ++k) {
    if (static_cast<double>(k) / static_cast<double>(n) > u) return sorted[k - 1];
  }
  return sorted[n - 1];  // unreachable: k = n gives CDF 1 > u
}

std::string RiskReport::csv_header() {
  return "model,span,seed,erm,mean,var99,var95,var90,var80,var50,lambda";
}

std::string RiskReport::csv_row() const {
  std::ostringstream os;
  os << model << ',' << span << ',' << seed << ',' << io::format_double(erm) << ','
     << io::format_double(mean) << ',' << io::format_double(var99) << ','
     << io::format_double(var95) << ',' << io::format_double(var90) << ','
     << io::format_double(var80) << ',' << io::format_double(var50) << ','
     << io::format_double(lambda);
  return os.str();
}

PnlDistribution hedge_pnl(const DeltaFn& strategy, std::span<const training::HedgeSample> data,
                          double cost) {
  if (data.empty()) throw contract_error("hedge_pnl: empty dataset");
  PnlDistribution dist;
  dist.values.assign(data.size(), 0.0);
  const std::int64_t n = static_cast<std::int64_t>(data.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& s = data[i];
    double delta = strategy(s.span);
    dist.values[i] = training::hedge_pnl(delta, s, cost);
  }
  return dist;
}

PnlDistribution hedge_pnl(const models::ModelParams& model,
                          std::span<const training::HedgeSample> data, double cost) {
  if (data.empty()) throw contract_error("hedge_pnl: empty dataset");
  PnlDistribution dist;
  dist.values.assign(data.size(), 0.0);
  const std::int64_t n = static_cast<std::int64_t>(data.size());
#pragma omp parallel
  {
    autodiff::Tape tape;
    models::DeltaGraph g = models::build_forward(tape, model);
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      const auto& s = data[i];
      if (s.span.size() != static_cast<std::size_t>(model.spec.input_size()))
        throw shape_error("hedge_pnl: span length mismatch");
      tape.set_values(g.input, s.span);
      tape.forward();
      dist.values[i] = training::hedge_pnl(g.output->data[0], s, cost);
    }
  }
  return dist;
}

RiskReport summarize(const PnlDistribution& dist, double lambda, std::string model, int span,
                     std::string seed) {
  RiskReport r;
  r.model = std::move(model);
  r.span = span;
  r.seed = std::move(seed);
  r.lambda = lambda;
  r.erm = erm(dist.values, lambda);
  double acc = 0.0;
  for (double v : dist.values) acc += v;
  r.mean = acc / static_cast<double>(dist.values.size());
  r.var99 = value_at_risk(dist.values, 0.99);
  r.var95 = value_at_risk(dist.values, 0.95);
  r.var90 = value_at_risk(dist.values, 0.90);
  r.var80 = value_at_risk(dist.values, 0.80);
  r.var50 = value_at_risk(dist.values, 0.50);
  return r;
}

RiskReport evaluate(const models::ModelParams& model, std::span<const training::HedgeSample> data,
                    double lambda, double cost, std::string seed_label) {
  PnlDistribution dist = hedge_pnl(model, data, cost);
  return summarize(dist, lambda, std::string(models::family_name(model.spec.family)),
                   model.spec.span_length, std::move(seed_label));
}

}  // namespace hedgelab::risk
