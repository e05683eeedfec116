#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hedgelab/analysis.hpp"
#include "hedgelab/market.hpp"
#include "hedgelab/models.hpp"
#include "hedgelab/risk.hpp"
#include "hedgelab/training.hpp"

namespace hedgelab::experiment {

inline constexpr const char* kVersion = "hedgelab v1";

// The packaged studies, one per figure/table the tool reproduces:
//   approx_delta     13-parameter net fits the analytic delta from labels
//   approx_pnl       97-parameter net recovers the delta from the pnl objective
//   pretrain_compare label-pretraining vs pnl-only on the same budget
//   data_poor        100-sample regime: pretrained vs pnl-only convergence
//   span_models      sequence families trained on trailing spans (configurable)
//   table3           full frictional comparison: 4 families x 3 spans x seeds
//   criticality      attention-weight decomposition over span positions
enum class Kind {
  approx_delta,
  approx_pnl,
  pretrain_compare,
  data_poor,
  span_models,
  table3,
  criticality,
};

std::string_view kind_name(Kind k);
Kind kind_from_name(std::string_view name);

struct ExperimentConfig {
  Kind kind = Kind::table3;
  market::MarketConfig market;
  training::TrainConfig train;
  std::vector<models::Family> families;
  std::vector<int> span_lengths;
  std::vector<std::uint64_t> seeds;
  std::string out_dir = "out";
  double lambda = 1.0;  // risk aversion for every reported ERM
  int pre_epochs = 0;   // pretraining schedule (pretrain_compare, data_poor)
  int fine_epochs = 0;
};

// Fully-resolved defaults for each study; `seed` offsets every per-run seed
// list so independent replications are one flag away.
ExperimentConfig make_default(Kind kind);

struct ValidationReport {
  std::vector<std::string> errors;    // invariant violations; run() refuses
  std::vector<std::string> warnings;  // legal but off-default settings
  bool ok() const { return errors.empty(); }
};

ValidationReport validate(const ExperimentConfig& cfg);

struct DataPoorOutcome {
  std::uint64_t seed = 0;
  double pnl_only_final = 0;   // pnl objective after the 20 plain epochs
  double pretrained_final = 0; // pnl objective after the 10+10 schedule
  int reach_epoch = -1;        // first pretrained epoch at or under pnl_only_final; -1 = never
  bool win = false;            // reached it strictly before the plain budget
};

struct RunResult {
  std::vector<std::string> files;              // artifact names, index order
  std::vector<risk::RiskReport> reports;       // one per (family, span, seed)
  std::vector<risk::RiskReport> averages;      // seed-averaged rows
  std::vector<analysis::CriticalityRow> criticality;  // seed-averaged, per span
  std::vector<DataPoorOutcome> data_poor;
  std::map<std::string, double> metrics;       // named scalars (grid MSE etc)
};

// Executes the study and writes every artifact (config snapshot, traces,
// risk tables, histograms, criticality, delta curves, index) under out_dir.
// Reruns with an identical config produce byte-identical files.
RunResult run(const ExperimentConfig& cfg);

}  // namespace hedgelab::experiment
