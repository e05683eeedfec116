#pragma once
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hedgelab/autodiff.hpp"

namespace hedgelab::models {

enum class Family { snn, snn_pnl, rnn, tcn, attention, span_mlp };

std::string_view family_name(Family f);
Family family_from_name(std::string_view name);

// Architecture descriptor. layer_sizes means: hidden widths for the MLP
// families, hidden size per recurrent layer for rnn, channels per conv layer
// for tcn, and the query/value dimension for attention.
struct ArchSpec {
  Family family = Family::snn;
  int span_length = 1;  // 1 for the single-spot families
  std::vector<int> layer_sizes;

  int input_size() const;
  int param_count() const;
  void validate() const;  // asserts the published parameter counts

  // canonical dimensions: snn 1-4-1, snn_pnl 1-32-1, rnn 3x5 hidden, tcn 3x4
  // channels (kernel 3, dilations 1/2/4), attention dim 10, span_mlp 14-13
  static ArchSpec make(Family family, int span_length = 1);
};

struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> data;
  int size() const { return int(data.size()); }
};

// A model: spec, seeded initialization metadata, input normalization, and the
// ordered named parameter tensors.
struct ModelParams {
  ArchSpec spec;
  uint64_t init_seed = 0;
  double input_scale = 0.01;  // spans are multiplied by this (1/strike)
  std::vector<NamedTensor> tensors;

  int param_count() const;
  const NamedTensor& tensor(std::string_view name) const;
};

// Deterministic initialization: every tensor uniform(-sqrt(1/fan_in),
// +sqrt(1/fan_in)) from one SplitMix64 stream in tensor order.
ModelParams build(const ArchSpec& spec, uint64_t init_seed, double input_scale = 0.01);

// Differentiable forward pass built once on a tape and replayed per sample.
// input takes the RAW span; the graph applies input_scale itself so training
// and inference normalize identically. params holds one leaf per NamedTensor
// in the same order. query is non-null for attention models only.
struct DeltaGraph {
  autodiff::Tensor* input = nullptr;
  autodiff::Tensor* output = nullptr;
  autodiff::Tensor* query = nullptr;
  std::vector<autodiff::Tensor*> params;
};
DeltaGraph build_forward(autodiff::Tape& tape, const ModelParams& p);

// Copy current parameter values onto the graph leaves (used after optimizer
// steps and before replaying the tape).
void sync_params(autodiff::Tape& tape, const DeltaGraph& g, const ModelParams& p);

// Single inference on a throwaway tape.
double predict(const ModelParams& p, std::span<const double> span);

// Versioned text checkpoint; round-trips every tensor bit-exactly.
void save(const ModelParams& p, const std::filesystem::path& path);
ModelParams load(const std::filesystem::path& path);

}  // namespace hedgelab::models
