#pragma once
#include <cstddef>
#include <span>
#include <vector>

#include "hedgelab/models.hpp"

namespace hedgelab::analysis {

struct CriticalityRow {
  int span_length = 0;
  // One weight per span position, normalized to sum to 1. weights[j] measures
  // how much position j contributes to the model's output over the probe set.
  std::vector<double> weights;
};

// For an attention model, decompose the output head's input into per-position
// contributions c_j = sum_n q_n * WV[n][j] (attention weights times the value
// projection), average over the probe spans, then normalize to sum 1.
CriticalityRow criticality(const models::ModelParams& model,
                           std::span<const std::vector<double>> probe_spans);

// Index of the largest weight; first index wins ties.
std::size_t max_position(const CriticalityRow& row);

}  // namespace hedgelab::analysis
