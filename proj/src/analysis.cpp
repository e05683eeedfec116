#include "hedgelab/analysis.hpp"

#include <cmath>

#include "hedgelab/autodiff.hpp"
#include "hedgelab/errors.hpp"

namespace hedgelab::analysis {

CriticalityRow criticality(const models::ModelParams& model,
                           std::span<const std::vector<double>> probe_spans) {
  if (model.spec.family != models::Family::attention)
    throw contract_error("criticality: requires an attention model, got " +
                         std::string(models::family_name(model.spec.family)));
  if (probe_spans.empty()) throw contract_error("criticality: empty probe set");

  const int sl = model.spec.span_length;
  const auto& wv = model.tensor("value.W");  // shape {dim, sl}, row-major
  const int dim = static_cast<int>(wv.shape[0]);

  autodiff::Tape tape;
  models::DeltaGraph g = models::build_forward(tape, model);

  CriticalityRow row;
  row.span_length = sl;
  row.weights.assign(static_cast<std::size_t>(sl), 0.0);
  for (const auto& span : probe_spans) {
    if (span.size() != static_cast<std::size_t>(sl))
      throw shape_error("criticality: probe span length mismatch");
    tape.set_values(g.input, span);
    tape.forward();
    const std::vector<double>& q = g.query->data;  // softmax weights, length dim
    for (int j = 0; j < sl; ++j) {
      double c = 0.0;
      for (int n = 0; n < dim; ++n) c += q[static_cast<std::size_t>(n)] * wv.data[static_cast<std::size_t>(n * sl + j)];
      row.weights[static_cast<std::size_t>(j)] += c;
    }
  }
  const double inv = 1.0 / static_cast<double>(probe_spans.size());
  double total = 0.0;
  for (double& w : row.weights) {
    w *= inv;
    total += w;
  }
  if (!(std::fabs(total) > 1e-12))
    throw domain_error("criticality: contributions sum to zero, cannot normalize");
  for (double& w : row.weights) w /= total;
  return row;
}

std::size_t max_position(const CriticalityRow& row) {
  if (row.weights.empty()) throw contract_error("max_position: empty row");
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.weights.size(); ++j)
    if (row.weights[j] > row.weights[best]) best = j;
  return best;
}

}  // namespace hedgelab::analysis
