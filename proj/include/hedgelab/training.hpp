#pragma once
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hedgelab/market.hpp"
#include "hedgelab/models.hpp"

namespace hedgelab::training {

// pnl is the hedging objective with no friction; pnl_with_cost charges
// transaction_cost currency units per unit of delta
enum class Loss { delta_mse, pnl, pnl_with_cost };

std::string_view loss_name(Loss l);
Loss loss_from_name(std::string_view name);

struct TrainConfig {
  int batch_size = 256;
  int epochs = 15;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  uint64_t seed = 0;  // init shuffling; model init is seeded separately
  Loss loss = Loss::delta_mse;
  double transaction_cost = 5.0;  // only read by pnl_with_cost

  void validate() const;
  double effective_cost() const { return loss == Loss::pnl_with_cost ? transaction_cost : 0.0; }
};

// One training record: the model input window plus every term of the hedging
// pnl and the analytic delta label. The single-spot experiments store the
// terminal price as a length-1 span.
struct HedgeSample {
  std::vector<double> span;
  double s0;        // hedge-open price
  double s1;        // hedge-close price
  double premium;   // option premium received
  double strike;
  double delta_label;
};

// Adapters from the market datasets. Terminal samples hedge over the full
// horizon and are labelled with the delta at (s_t, full horizon) — the
// delta-curve view; span samples hedge the final day and are labelled with
// the delta at (span.back(), one day).
std::vector<HedgeSample> from_terminal(const std::vector<market::TerminalSample>& ds,
                                       const market::MarketConfig& mc);
std::vector<HedgeSample> from_spans(const std::vector<market::SpanSample>& ds,
                                    const market::MarketConfig& mc);

// pnl of one hedged position (the training loss squares this)
double hedge_pnl(double delta, const HedgeSample& s, double cost);

struct EpochRecord {
  int epoch;          // 1-based, continuous across phases
  std::string phase;  // "delta" or "pnl"
  double running_loss;
  double seconds;
};

struct TrainTrace {
  std::vector<EpochRecord> records;
  double final_loss() const;
  // seconds are wall-clock and excluded when a byte-reproducible artifact is
  // wanted
  std::string to_csv(bool with_seconds) const;
};

// AdamW with decoupled weight decay over a flat parameter vector.
class AdamW {
 public:
  AdamW(size_t n_params, const TrainConfig& cfg);
  void step(std::span<double> params, std::span<const double> grads);
  long steps_taken() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_, wd_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

// Mean gradient of the batch loss over the flattened parameters, plus the
// mean per-sample loss. Per-sample gradients are computed independently (in
// parallel in the non-_serial variant) and reduced in index order, so the
// result is bit-identical for any thread count. The serial variant is the
// reference implementation the parallel kernel is benchmarked and tested
// against.
std::vector<double> batch_gradient(const models::ModelParams& params,
                                   std::span<const HedgeSample> data,
                                   std::span<const int> batch, Loss loss, double cost,
                                   double* mean_loss = nullptr);
std::vector<double> batch_gradient_serial(const models::ModelParams& params,
                                          std::span<const HedgeSample> data,
                                          std::span<const int> batch, Loss loss, double cost,
                                          double* mean_loss = nullptr);

// Observer invoked after each completed epoch with the updated parameters;
// lets callers track metrics the running loss cannot express (e.g. the pnl
// objective during a delta-label pretraining phase).
using EpochCallback = std::function<void(int epoch, const models::ModelParams& params)>;

// Mini-batch training with seeded reshuffling each epoch; updates params in
// place and reports the per-epoch running loss (mean pre-update batch loss).
TrainTrace train(models::ModelParams& params, std::span<const HedgeSample> data,
                 const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// Phase 1 trains on the analytic-delta labels, phase 2 on the pnl objective;
// optimizer moments and the shuffle stream carry across the switch.
TrainTrace pretrain_finetune(models::ModelParams& params, std::span<const HedgeSample> data,
                             int pre_epochs, int fine_epochs, const TrainConfig& cfg,
                             const EpochCallback& on_epoch = {});

std::vector<double> flatten(const models::ModelParams& p);
void unflatten(std::span<const double> flat, models::ModelParams& p);

}  // namespace hedgelab::training
