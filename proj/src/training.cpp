#include "hedgelab/training.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hedgelab/analytics.hpp"
#include "hedgelab/errors.hpp"
#include "hedgelab/io.hpp"
#include "hedgelab/rng.hpp"

namespace hedgelab::training {

std::string_view loss_name(Loss l) {
  switch (l) {
    case Loss::delta_mse: return "delta_mse";
    case Loss::pnl: return "pnl";
    case Loss::pnl_with_cost: return "pnl_with_cost";
  }
  throw contract_error("loss_name: bad enum value");
}

Loss loss_from_name(std::string_view name) {
  for (Loss l : {Loss::delta_mse, Loss::pnl, Loss::pnl_with_cost})
    if (loss_name(l) == name) return l;
  throw config_error("unknown loss '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw config_error("train: batch_size must be >= 1");
  if (epochs < 0) throw config_error("train: epochs must be >= 0");
  if (!(lr > 0.0)) throw config_error("train: lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw config_error("train: betas must lie in [0,1)");
  if (!(eps > 0.0)) throw config_error("train: eps must be positive");
  if (weight_decay < 0.0) throw config_error("train: weight_decay must be >= 0");
  if (transaction_cost < 0.0) throw config_error("train: transaction_cost must be >= 0");
}

std::vector<HedgeSample> from_terminal(const std::vector<market::TerminalSample>& ds,
                                       const market::MarketConfig& mc) {
  double tau = mc.horizon_days * market::MarketConfig::dt;
  std::vector<HedgeSample> out;
  out.reserve(ds.size());
  for (const auto& t : ds) {
    HedgeSample h;
    h.span = {t.s_t};
    h.s0 = t.s0;
    h.s1 = t.s_t;
    h.premium = t.premium;
    h.strike = t.strike;
    h.delta_label = analytics::bs_delta(t.s_t, t.strike, mc.rate, mc.vol, tau);
    out.push_back(std::move(h));
  }
  return out;
}

std::vector<HedgeSample> from_spans(const std::vector<market::SpanSample>& ds,
                                    const market::MarketConfig& mc) {
  std::vector<HedgeSample> out;
  out.reserve(ds.size());
  for (const auto& s : ds) {
    HedgeSample h;
    h.span = s.span;
    h.s0 = s.span.back();
    h.s1 = s.s_next;
    h.premium = s.premium;
    h.strike = s.strike;
    h.delta_label =
        analytics::bs_delta(s.span.back(), s.strike, mc.rate, mc.vol, market::MarketConfig::dt);
    out.push_back(std::move(h));
  }
  return out;
}

double hedge_pnl(double delta, const HedgeSample& s, double cost) {
  return delta * (s.s1 - s.s0 - cost) + s.premium - std::max(s.s1 - s.strike, 0.0);
}

double TrainTrace::final_loss() const {
  if (records.empty()) throw contract_error("trace: no epochs recorded");
  return records.back().running_loss;
}

std::string TrainTrace::to_csv(bool with_seconds) const {
  std::ostringstream out;
  out << "epoch,phase,running_loss" << (with_seconds ? ",seconds" : "") << "\n";
  for (const EpochRecord& r : records) {
    out << r.epoch << "," << r.phase << "," << io::format_double(r.running_loss);
    if (with_seconds) out << "," << io::format_double(r.seconds);
    out << "\n";
  }
  return out.str();
}

AdamW::AdamW(size_t n_params, const TrainConfig& cfg)
    : lr_(cfg.lr), beta1_(cfg.beta1), beta2_(cfg.beta2), eps_(cfg.eps), wd_(cfg.weight_decay),
      m_(n_params, 0.0), v_(n_params, 0.0) {}

void AdamW::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw contract_error("adamw: parameter/gradient size mismatch");
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, double(t_));
  double bc2 = 1.0 - std::pow(beta2_, double(t_));
  for (size_t i = 0; i < m_.size(); ++i) {
    double g = grads[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    double mhat = m_[i] / bc1;
    double vhat = v_[i] / bc2;
    // decoupled decay: applied to the weight directly, not through the moments
    params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_) + lr_ * wd_ * params[i];
  }
}

std::vector<double> flatten(const models::ModelParams& p) {
  std::vector<double> flat;
  flat.reserve(size_t(p.param_count()));
  for (const auto& t : p.tensors) flat.insert(flat.end(), t.data.begin(), t.data.end());
  return flat;
}

void unflatten(std::span<const double> flat, models::ModelParams& p) {
  if (int(flat.size()) != p.param_count())
    throw contract_error("unflatten: size mismatch");
  size_t pos = 0;
  for (auto& t : p.tensors) {
    std::copy(flat.begin() + pos, flat.begin() + pos + t.data.size(), t.data.begin());
    pos += t.data.size();
  }
}

namespace {

// forward graph plus the per-sample loss head, replayed once per sample
struct LossGraph {
  autodiff::Tape tape;
  models::DeltaGraph fwd;
  autodiff::Tensor* label = nullptr;   // delta_mse
  autodiff::Tensor* move = nullptr;    // pnl: s1 - s0 - cost
  autodiff::Tensor* payout = nullptr;  // pnl: premium - (s1 - strike)^+
  autodiff::Tensor* loss = nullptr;
  Loss kind;

  LossGraph(const models::ModelParams& p, Loss kind_) : kind(kind_) {
    fwd = models::build_forward(tape, p);
    if (kind == Loss::delta_mse) {
      label = tape.constant(0.0);
      autodiff::Tensor* diff = tape.add(fwd.output, tape.scale_shift(label, -1.0, 0.0));
      loss = tape.square(diff);
    } else {
      move = tape.constant(0.0);
      payout = tape.constant(0.0);
      autodiff::Tensor* pnl = tape.add(tape.mul(fwd.output, move), payout);
      loss = tape.square(pnl);
    }
  }

  void set_params(std::span<const double> flat) {
    size_t pos = 0;
    for (autodiff::Tensor* t : fwd.params) {
      tape.set_values(t, flat.subspan(pos, size_t(t->size())));
      pos += size_t(t->size());
    }
  }

  // returns the per-sample loss; leaf grads are freshly accumulated
  double eval(const HedgeSample& s, double cost) {
    tape.set_values(fwd.input, s.span);
    if (kind == Loss::delta_mse) {
      tape.set_value(label, s.delta_label);
    } else {
      tape.set_value(move, s.s1 - s.s0 - cost);
      tape.set_value(payout, s.premium - std::max(s.s1 - s.strike, 0.0));
    }
    tape.forward();
    tape.zero_grad();
    tape.backward(loss);
    return loss->data[0];
  }

  void copy_grads(double* out) const {
    for (autodiff::Tensor* t : fwd.params)
      out = std::copy(t->grad.begin(), t->grad.end(), out);
  }
};

// shared worker: per-sample gradients into slots, then an index-ordered
// reduction; `parallel` only toggles the OpenMP pragma so both variants are
// bitwise identical
std::vector<double> batch_gradient_impl(const models::ModelParams& params,
                                        std::span<const double> flat,
                                        std::span<const HedgeSample> data,
                                        std::span<const int> batch, Loss loss, double cost,
                                        double* mean_loss, bool parallel) {
  if (batch.empty()) throw contract_error("batch_gradient: empty batch");
  size_t n_params = flat.size();
  size_t b = batch.size();
  std::vector<double> per_sample(b * n_params);
  std::vector<double> losses(b);

  if (parallel) {
#pragma omp parallel
    {
      LossGraph g(params, loss);
      g.set_params(flat);
#pragma omp for schedule(static)
      for (int i = 0; i < int(b); ++i) {
        losses[size_t(i)] = g.eval(data[size_t(batch[size_t(i)])], cost);
        g.copy_grads(per_sample.data() + size_t(i) * n_params);
      }
    }
  } else {
    LossGraph g(params, loss);
    g.set_params(flat);
    for (size_t i = 0; i < b; ++i) {
      losses[i] = g.eval(data[size_t(batch[i])], cost);
      g.copy_grads(per_sample.data() + i * n_params);
    }
  }

  std::vector<double> grad(n_params, 0.0);
  double loss_sum = 0.0;
  for (size_t i = 0; i < b; ++i) {
    const double* row = per_sample.data() + i * n_params;
    for (size_t j = 0; j < n_params; ++j) grad[j] += row[j];
    loss_sum += losses[i];
  }
  double inv = 1.0 / double(b);
  for (double& g : grad) g *= inv;
  if (mean_loss) *mean_loss = loss_sum * inv;
  return grad;
}

void check_finite(const models::ModelParams& p, std::span<const double> grad) {
  size_t pos = 0;
  for (const auto& t : p.tensors) {
    for (size_t i = 0; i < t.data.size(); ++i)
      if (!std::isfinite(grad[pos + i]))
        throw training_error("non-finite gradient in tensor '" + t.name + "'");
    pos += t.data.size();
  }
}

}  // namespace

std::vector<double> batch_gradient(const models::ModelParams& params,
                                   std::span<const HedgeSample> data, std::span<const int> batch,
                                   Loss loss, double cost, double* mean_loss) {
  return batch_gradient_impl(params, flatten(params), data, batch, loss, cost, mean_loss, true);
}

std::vector<double> batch_gradient_serial(const models::ModelParams& params,
                                          std::span<const HedgeSample> data,
                                          std::span<const int> batch, Loss loss, double cost,
                                          double* mean_loss) {
  return batch_gradient_impl(params, flatten(params), data, batch, loss, cost, mean_loss, false);
}

namespace {

void run_phase(models::ModelParams& params, std::vector<double>& flat,
               std::span<const HedgeSample> data, const TrainConfig& cfg, Loss loss, int epochs,
               const char* phase, int& epoch_no, AdamW& opt, rng::SplitMix64& shuffler,
               TrainTrace& trace, const EpochCallback& on_epoch) {
  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  double cost = (loss == Loss::pnl_with_cost) ? cfg.transaction_cost : 0.0;

  for (int e = 0; e < epochs; ++e) {
    auto t0 = std::chrono::steady_clock::now();
    rng::shuffle(std::span<int>(order), shuffler);
    double loss_sum = 0.0;
    for (size_t start = 0; start < order.size(); start += size_t(cfg.batch_size)) {
      size_t len = std::min(size_t(cfg.batch_size), order.size() - start);
      std::span<const int> batch(order.data() + start, len);
      double batch_loss = 0.0;
      std::vector<double> grad =
          batch_gradient_impl(params, flat, data, batch, loss, cost, &batch_loss, true);
      check_finite(params, grad);
      opt.step(flat, grad);
      unflatten(flat, params);
      loss_sum += batch_loss * double(len);
    }
    double running = loss_sum / double(order.size());
    ++epoch_no;
    if (!std::isfinite(running))
      throw training_error("training diverged at epoch " + std::to_string(epoch_no));
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    trace.records.push_back({epoch_no, phase, running, secs});
    if (on_epoch) on_epoch(epoch_no, params);
  }
}

}  // namespace

TrainTrace train(models::ModelParams& params, std::span<const HedgeSample> data,
                 const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (data.empty()) throw contract_error("train: empty dataset");
  TrainTrace trace;
  std::vector<double> flat = flatten(params);
  AdamW opt(flat.size(), cfg);
  rng::SplitMix64 shuffler(cfg.seed);
  int epoch_no = 0;
  const char* phase = cfg.loss == Loss::delta_mse ? "delta" : "pnl";
  run_phase(params, flat, data, cfg, cfg.loss, cfg.epochs, phase, epoch_no, opt, shuffler, trace,
            on_epoch);
  return trace;
}

TrainTrace pretrain_finetune(models::ModelParams& params, std::span<const HedgeSample> data,
                             int pre_epochs, int fine_epochs, const TrainConfig& cfg,
                             const EpochCallback& on_epoch) {
  cfg.validate();
  if (pre_epochs < 0 || fine_epochs < 0)
    throw config_error("pretrain_finetune: epoch counts must be >= 0");
  if (data.empty()) throw contract_error("pretrain_finetune: empty dataset");
  TrainTrace trace;
  std::vector<double> flat = flatten(params);
  AdamW opt(flat.size(), cfg);
  rng::SplitMix64 shuffler(cfg.seed);
  int epoch_no = 0;
  Loss fine_loss = cfg.loss == Loss::delta_mse ? Loss::pnl : cfg.loss;
  run_phase(params, flat, data, cfg, Loss::delta_mse, pre_epochs, "delta", epoch_no, opt, shuffler,
            trace, on_epoch);
  run_phase(params, flat, data, cfg, fine_loss, fine_epochs, "pnl", epoch_no, opt, shuffler, trace,
            on_epoch);
  return trace;
}

}  // namespace hedgelab::training
