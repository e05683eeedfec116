#include "hedgelab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "hedgelab/analytics.hpp"
#include "hedgelab/errors.hpp"
#include "hedgelab/io.hpp"

namespace fs = std::filesystem;

namespace hedgelab::experiment {

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::approx_delta: return "approx_delta";
    case Kind::approx_pnl: return "approx_pnl";
    case Kind::pretrain_compare: return "pretrain_compare";
    case Kind::data_poor: return "data_poor";
    case Kind::span_models: return "span_models";
    case Kind::table3: return "table3";
    case Kind::criticality: return "criticality";
  }
  throw contract_error("kind_name: bad kind");
}

Kind kind_from_name(std::string_view name) {
  for (Kind k : {Kind::approx_delta, Kind::approx_pnl, Kind::pretrain_compare, Kind::data_poor,
                 Kind::span_models, Kind::table3, Kind::criticality})
    if (kind_name(k) == name) return k;
  throw config_error("unknown experiment kind: " + std::string(name));
}

ExperimentConfig make_default(Kind kind) {
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case Kind::approx_delta:
      c.market.n_paths = 100000;
      c.families = {models::Family::snn};
      c.span_lengths = {1};
      c.seeds = {1};
      c.train.loss = training::Loss::delta_mse;
      break;
    case Kind::approx_pnl:
      c.market.n_paths = 100000;
      c.families = {models::Family::snn_pnl};
      c.span_lengths = {1};
      c.seeds = {1};
      c.train.loss = training::Loss::pnl;
      break;
    case Kind::pretrain_compare:
      c.market.n_paths = 100000;
      c.families = {models::Family::snn_pnl};
      c.span_lengths = {1};
      c.seeds = {1};
      c.train.loss = training::Loss::pnl;
      c.pre_epochs = 5;
      c.fine_epochs = 8;
      break;
    case Kind::data_poor:
      c.market.n_paths = 100;
      c.families = {models::Family::snn_pnl};
      c.span_lengths = {1};
      c.seeds = {1, 2, 3, 4, 5};
      c.train.loss = training::Loss::pnl;
      c.train.epochs = 20;
      c.train.batch_size = 10;
      c.pre_epochs = 10;
      c.fine_epochs = 10;
      break;
    case Kind::span_models:
    case Kind::table3:
      c.market.n_paths = 10000;
      c.families = {models::Family::rnn, models::Family::tcn, models::Family::attention,
                    models::Family::span_mlp};
      c.span_lengths = {3, 5, 7};
      c.seeds = {1, 2, 3};
      c.train.loss = training::Loss::pnl_with_cost;
      break;
    case Kind::criticality:
      c.market.n_paths = 10000;
      c.families = {models::Family::attention};
      c.span_lengths = {3, 5, 7};
      c.seeds = {1, 2, 3};
      c.train.loss = training::Loss::pnl_with_cost;
      break;
  }
  return c;
}

ValidationReport validate(const ExperimentConfig& cfg) {
  ValidationReport rep;
  auto err = [&rep](std::string m) { rep.errors.push_back(std::move(m)); };
  auto warn = [&rep](std::string m) { rep.warnings.push_back(std::move(m)); };

  try {
    cfg.market.validate();
  } catch (const error& e) {
    err(e.what());
  }
  try {
    cfg.train.validate();
  } catch (const error& e) {
    err(e.what());
  }
  if (cfg.seeds.empty()) err("seeds list is empty");
  if (cfg.families.empty()) err("families list is empty");
  if (cfg.span_lengths.empty()) err("span_lengths list is empty");
  if (cfg.out_dir.empty()) err("out_dir is empty");
  if (!(cfg.lambda > 0.0)) err("lambda must be positive");
  if (cfg.pre_epochs < 0 || cfg.fine_epochs < 0) err("phase epoch counts must be >= 0");
  for (int sl : cfg.span_lengths) {
    if (sl < 1 || sl > cfg.market.horizon_days)
      err("span_length " + std::to_string(sl) + " outside [1, horizon_days]");
  }

  const bool span_kind = cfg.kind == Kind::span_models || cfg.kind == Kind::table3 ||
                         cfg.kind == Kind::criticality;
  if (span_kind) {
    for (int sl : cfg.span_lengths)
      if (sl != 3 && sl != 5 && sl != 7)
        warn("span_length " + std::to_string(sl) + " is outside the studied set {3,5,7}");
  }
  const training::TrainConfig table1;
  if (cfg.train.epochs != table1.epochs)
    warn("epochs " + std::to_string(cfg.train.epochs) + " differs from the default 15");
  if (cfg.train.batch_size != table1.batch_size)
    warn("batch_size " + std::to_string(cfg.train.batch_size) + " differs from the default 256");
  if (cfg.train.lr != table1.lr)
    warn("lr " + io::format_double(cfg.train.lr) + " differs from the default 0.001");
  if (cfg.train.weight_decay != table1.weight_decay)
    warn("weight_decay " + io::format_double(cfg.train.weight_decay) +
         " differs from the default 0.01");
  return rep;
}

namespace {

// ---- serialization helpers ----

std::string join_u64(const std::vector<std::uint64_t>& v) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  return os.str();
}

std::string join_int(const std::vector<int>& v) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  return os.str();
}

std::string join_families(const std::vector<models::Family>& v) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << models::family_name(v[i]);
  return os.str();
}

// Flat key = value snapshot; keys match the CLI flags so the file can be fed
// back through --config. out_dir is deliberately omitted: the snapshot
// describes the run, not where it landed.
std::string config_snapshot(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "# " << kVersion << " experiment configuration\n";
  os << "experiment = " << kind_name(c.kind) << "\n";
  os << "families = " << join_families(c.families) << "\n";
  os << "span_lengths = " << join_int(c.span_lengths) << "\n";
  os << "seeds = " << join_u64(c.seeds) << "\n";
  os << "lambda = " << io::format_double(c.lambda) << "\n";
  os << "pre_epochs = " << c.pre_epochs << "\n";
  os << "fine_epochs = " << c.fine_epochs << "\n";
  os << "s0 = " << io::format_double(c.market.s0) << "\n";
  os << "strike = " << io::format_double(c.market.strike) << "\n";
  os << "rate = " << io::format_double(c.market.rate) << "\n";
  os << "vol = " << io::format_double(c.market.vol) << "\n";
  os << "horizon_days = " << c.market.horizon_days << "\n";
  os << "n_paths = " << c.market.n_paths << "\n";
  os << "market_seed = " << c.market.seed << "\n";
  os << "batch_size = " << c.train.batch_size << "\n";
  os << "epochs = " << c.train.epochs << "\n";
  os << "lr = " << io::format_double(c.train.lr) << "\n";
  os << "beta1 = " << io::format_double(c.train.beta1) << "\n";
  os << "beta2 = " << io::format_double(c.train.beta2) << "\n";
  os << "eps = " << io::format_double(c.train.eps) << "\n";
  os << "weight_decay = " << io::format_double(c.train.weight_decay) << "\n";
  os << "loss = " << training::loss_name(c.train.loss) << "\n";
  os << "transaction_cost = " << io::format_double(c.train.transaction_cost) << "\n";
  return os.str();
}

struct Writer {
  fs::path root;
  std::vector<std::string> names;

  void write(const std::string& name, const std::string& content) {
    io::write_file((root / name).string(), content);
    names.push_back(name);
  }
};

std::string meta_line(const ExperimentConfig& cfg, const std::string& seed_desc,
                      const std::string& params_desc) {
  std::ostringstream os;
  os << "# version=" << kVersion << ", experiment=" << kind_name(cfg.kind)
     << ", seed=" << seed_desc << ", params=" << params_desc << "\n";
  return os.str();
}

std::string params_tag(const models::ModelParams& p) {
  std::ostringstream os;
  os << models::family_name(p.spec.family) << ":" << p.param_count();
  return os.str();
}

// ---- dataset builders ----

std::vector<training::HedgeSample> terminal_data(const market::MarketConfig& mc) {
  market::PathSet paths = market::simulate_paths(mc);
  return training::from_terminal(market::build_terminal_dataset(paths), mc);
}

std::vector<training::HedgeSample> span_data(const market::MarketConfig& mc, int sl) {
  market::PathSet paths = market::simulate_paths(mc);
  return training::from_spans(market::build_span_dataset(paths, sl), mc);
}

market::MarketConfig eval_market(const market::MarketConfig& mc) {
  market::MarketConfig e = mc;
  e.seed = mc.seed + 1;  // held-out paths: same dynamics, fresh draws
  return e;
}

// ---- artifact writers ----

void write_trace(Writer& w, const ExperimentConfig& cfg, const std::string& name,
                 const training::TrainTrace& trace, const models::ModelParams& p,
                 std::uint64_t seed) {
  w.write(name, meta_line(cfg, std::to_string(seed), params_tag(p)) + trace.to_csv(false));
}

void write_histogram(Writer& w, const ExperimentConfig& cfg, const std::string& name,
                     const std::vector<double>& values, const std::string& seed_desc,
                     const std::string& params_desc) {
  if (values.empty()) throw contract_error("histogram: empty sample");
  constexpr int kBins = 50;
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double width = hi - lo;
  std::vector<long> counts(kBins, 0);
  for (double v : values) {
    int b = width > 0.0 ? std::min(kBins - 1, int((v - lo) / width * kBins)) : 0;
    ++counts[size_t(b)];
  }
  std::ostringstream os;
  os << meta_line(cfg, seed_desc, params_desc);
  os << "bin_lo,bin_hi,count\n";
  for (int b = 0; b < kBins; ++b) {
    double blo = lo + width * b / kBins;
    double bhi = (b == kBins - 1) ? hi : lo + width * (b + 1) / kBins;
    os << io::format_double(blo) << "," << io::format_double(bhi) << "," << counts[size_t(b)]
       << "\n";
  }
  w.write(name, os.str());
}

// Model delta vs the analytic delta over a spot grid (full remaining
// horizon), for the single-spot families. The grid MSE lands in the metadata
// line and in RunResult::metrics.
void write_delta_curve(Writer& w, const ExperimentConfig& cfg, const std::string& name,
                       const models::ModelParams& p, std::uint64_t seed, RunResult& res,
                       const std::string& metric_key) {
  const auto& mc = cfg.market;
  const double tau = mc.horizon_days * market::MarketConfig::dt;
  std::ostringstream rows;
  double mse = 0.0;
  int n = 0;
  for (double spot = 80.0; spot <= 125.0 + 1e-9; spot += 0.5) {
    double span[1] = {spot};
    double model_delta = models::predict(p, span);
    double bs = analytics::bs_delta(spot, mc.strike, mc.rate, mc.vol, tau);
    mse += (model_delta - bs) * (model_delta - bs);
    ++n;
    rows << io::format_double(spot) << "," << io::format_double(model_delta) << ","
         << io::format_double(bs) << "\n";
  }
  mse /= n;
  res.metrics[metric_key] = mse;
  std::ostringstream os;
  os << meta_line(cfg, std::to_string(seed),
                  params_tag(p) + "; grid_mse=" + io::format_double(mse));
  os << "spot,model_delta,bs_delta\n" << rows.str();
  w.write(name, os.str());
}

double mean_sq_pnl(const models::ModelParams& p, std::span<const training::HedgeSample> data,
                   double cost) {
  risk::PnlDistribution dist = risk::hedge_pnl(p, data, cost);
  double acc = 0.0;
  for (double v : dist.values) acc += v * v;
  return acc / double(dist.values.size());
}

training::TrainConfig cell_train_config(const ExperimentConfig& cfg, std::uint64_t seed) {
  training::TrainConfig t = cfg.train;
  t.seed = seed;
  return t;
}

// ---- study runners ----

void run_approx_delta(const ExperimentConfig& cfg, Writer& w, RunResult& res) {
  std::vector<training::HedgeSample> data = terminal_data(cfg.market);
  for (std::uint64_t seed : cfg.seeds) {
    models::ModelParams p = models::build(models::ArchSpec::make(models::Family::snn), seed);
    training::TrainTrace trace = training::train(p, data, cell_train_config(cfg, seed));
    std::string tag = "_seed" + std::to_string(seed);
    write_trace(w, cfg, "trace_snn" + tag + ".csv", trace, p, seed);
    write_delta_curve(w, cfg, "delta_curve_snn" + tag + ".csv", p, seed, res,
                      "grid_mse" + tag);
  }
}

void run_approx_pnl(const ExperimentConfig& cfg, Writer& w, RunResult& res) {
  std::vector<training::HedgeSample> data = terminal_data(cfg.market);
  std::vector<training::HedgeSample> eval_data = terminal_data(eval_market(cfg.market));
  const double cost = cfg.train.effective_cost();
  for (std::uint64_t seed : cfg.seeds) {
    models::ModelParams p = models::build(models::ArchSpec::make(models::Family::snn_pnl), seed);
    training::TrainTrace trace = training::train(p, data, cell_train_config(cfg, seed));
    std::string tag = "_seed" + std::to_string(seed);
    write_trace(w, cfg, "trace_snn_pnl" + tag + ".csv", trace, p, seed);
    write_delta_curve(w, cfg, "delta_curve_snn_pnl" + tag + ".csv", p, seed, res,
                      "grid_mse" + tag);
    risk::PnlDistribution dist = risk::hedge_pnl(p, eval_data, cost);
    write_histogram(w, cfg, "pnl_hist_snn_pnl" + tag + ".csv", dist.values,
                    std::to_string(seed), params_tag(p));
    res.reports.push_back(
        risk::summarize(dist, cfg.lambda, "snn_pnl", 1, std::to_string(seed)));
  }
}

void run_pretrain_compare(const ExperimentConfig& cfg, Writer& w, RunResult& res) {
  std::vector<training::HedgeSample> data = terminal_data(cfg.market);
  std::vector<training::HedgeSample> eval_data = terminal_data(eval_market(cfg.market));
  const double cost = cfg.train.effective_cost();
  const models::ArchSpec spec = models::ArchSpec::make(models::Family::snn_pnl);
  for (std::uint64_t seed : cfg.seeds) {
    std::string tag = "_seed" + std::to_string(seed);

    models::ModelParams plain = models::build(spec, seed);
    training::TrainTrace plain_trace = training::train(plain, data, cell_train_config(cfg, seed));
    write_trace(w, cfg, "trace_snn_pnl_only" + tag + ".csv", plain_trace, plain, seed);
    write_delta_curve(w, cfg, "delta_curve_snn_pnl_only" + tag + ".csv", plain, seed, res,
                      "grid_mse_only" + tag);
    risk::PnlDistribution plain_dist = risk::hedge_pnl(plain, eval_data, cost);
    write_histogram(w, cfg, "pnl_hist_snn_pnl_only" + tag + ".csv", plain_dist.values,
                    std::to_string(seed), params_tag(plain));
    res.reports.push_back(
        risk::summarize(plain_dist, cfg.lambda, "snn_pnl_only", 1, std::to_string(seed)));

    models::ModelParams pre = models::build(spec, seed);
    training::TrainTrace pre_trace = training::pretrain_finetune(
        pre, data, cfg.pre_epochs, cfg.fine_epochs, cell_train_config(cfg, seed));
    write_trace(w, cfg, "trace_snn_pnl_pretrained" + tag + ".csv", pre_trace, pre, seed);
    write_delta_curve(w, cfg, "delta_curve_snn_pnl_pretrained" + tag + ".csv", pre, seed, res,
                      "grid_mse_pretrained" + tag);
    risk::PnlDistribution pre_dist = risk::hedge_pnl(pre, eval_data, cost);
    write_histogram(w, cfg, "pnl_hist_snn_pnl_pretrained" + tag + ".csv", pre_dist.values,
                    std::to_string(seed), params_tag(pre));
    res.reports.push_back(
        risk::summarize(pre_dist, cfg.lambda, "snn_pnl_pretrained", 1, std::to_string(seed)));
  }
}

void run_data_poor(const ExperimentConfig& cfg, Writer& w, RunResult& res) {
  const models::ArchSpec spec = models::ArchSpec::make(models::Family::snn_pnl);
  const double cost = cfg.train.effective_cost();
  std::ostringstream curves;
  curves << "seed,variant,epoch,pnl_loss\n";
  std::ostringstream summary;
  summary << "seed,pnl_only_final,pretrained_final,reach_epoch,win\n";

  for (std::uint64_t seed : cfg.seeds) {
    market::MarketConfig mc = cfg.market;
    mc.seed = cfg.market.seed + seed;  // fresh 100-sample draw per replication
    std::vector<training::HedgeSample> data = terminal_data(mc);
    std::string tag = "_seed" + std::to_string(seed);

    // The running loss of the pretraining phase is a delta-label MSE, so both
    // variants are compared on the actual pnl objective after every epoch.
    auto curve_recorder = [&](std::vector<double>& curve) {
      return [&curve, &data, cost](int, const models::ModelParams& p) {
        curve.push_back(mean_sq_pnl(p, data, cost));
      };
    };

    std::vector<double> plain_curve, pre_curve;
    models::ModelParams plain = models::build(spec, seed);
    training::TrainTrace plain_trace =
        training::train(plain, data, cell_train_config(cfg, seed), curve_recorder(plain_curve));
    write_trace(w, cfg, "trace_pnl_only" + tag + ".csv", plain_trace, plain, seed);

    models::ModelParams pre = models::build(spec, seed);
    training::TrainTrace pre_trace =
        training::pretrain_finetune(pre, data, cfg.pre_epochs, cfg.fine_epochs,
                                    cell_train_config(cfg, seed), curve_recorder(pre_curve));
    write_trace(w, cfg, "trace_pretrained" + tag + ".csv", pre_trace, pre, seed);

    DataPoorOutcome out;
    out.seed = seed;
    out.pnl_only_final = plain_curve.back();
    out.pretrained_final = pre_curve.back();
    for (size_t e = 0; e < pre_curve.size(); ++e) {
      if (pre_curve[e] <= out.pnl_only_final) {
        out.reach_epoch = int(e) + 1;
        break;
      }
    }
    out.win = out.reach_epoch > 0 && out.reach_epoch < cfg.train.epochs;
    res.data_poor.push_back(out);

    for (size_t e = 0; e < plain_curve.size(); ++e)
      curves << seed << ",pnl_only," << e + 1 << "," << io::format_double(plain_curve[e]) << "\n";
    for (size_t e = 0; e < pre_curve.size(); ++e)
      curves << seed << ",pretrained," << e + 1 << "," << io::format_double(pre_curve[e]) << "\n";
    summary << seed << "," << io::format_double(out.pnl_only_final) << ","
            << io::format_double(out.pretrained_final) << "," << out.reach_epoch << ","
            << (out.win ? 1 : 0) << "\n";
  }

  std::string seeds_desc = join_u64(cfg.seeds);
  std::string params_desc = "snn_pnl:" + std::to_string(spec.param_count());
  w.write("data_poor_curves.csv", meta_line(cfg, seeds_desc, params_desc) + curves.str());
  w.write("data_poor_summary.csv", meta_line(cfg, seeds_desc, params_desc) + summary.str());
}

risk::RiskReport average_reports(std::span<const risk::RiskReport> rs) {
  risk::RiskReport a = rs[0];
  a.seed = "avg";
  a.erm = a.mean = a.var99 = a.var95 = a.var90 = a.var80 = a.var50 = 0.0;
  for (const auto& r : rs) {
    a.erm += r.erm;
    a.mean += r.mean;
    a.var99 += r.var99;
    a.var95 += r.var95;
    a.var90 += r.var90;
    a.var80 += r.var80;
    a.var50 += r.var50;
  }
  const double inv = 1.0 / double(rs.size());
  a.erm *= inv;
  a.mean *= inv;
  a.var99 *= inv;
  a.var95 *= inv;
  a.var90 *= inv;
  a.var80 *= inv;
  a.var50 *= inv;
  return a;
}

// Shared by span_models, table3 and criticality: trains every
// (family, span, seed) cell on the frictional one-day hedge and evaluates on
// held-out paths. `risk_tables` controls whether the risk-report artifacts are
// produced (the criticality study only wants the attention decomposition).
void run_span_study(const ExperimentConfig& cfg, Writer& w, RunResult& res, bool risk_tables) {
  const double cost = cfg.train.effective_cost();
  std::map<int, std::vector<training::HedgeSample>> train_sets, eval_sets;
  for (int sl : cfg.span_lengths) {
    train_sets[sl] = span_data(cfg.market, sl);
    eval_sets[sl] = span_data(eval_market(cfg.market), sl);
  }

  std::string all_params;
  struct CritCell {
    int sl;
    std::uint64_t seed;
    analysis::CriticalityRow row;
  };
  std::vector<CritCell> crit_cells;

  for (models::Family fam : cfg.families) {
    for (int sl : cfg.span_lengths) {
      std::vector<risk::RiskReport> cell_reports;
      for (std::uint64_t seed : cfg.seeds) {
        models::ModelParams p = models::build(models::ArchSpec::make(fam, sl), seed);
        if (all_params.find(params_tag(p) + "@" + std::to_string(sl)) == std::string::npos) {
          if (!all_params.empty()) all_params += ";";
          all_params += params_tag(p) + "@" + std::to_string(sl);
        }
        training::TrainTrace trace =
            training::train(p, train_sets[sl], cell_train_config(cfg, seed));
        std::string tag = std::string(models::family_name(fam)) + "_sl" + std::to_string(sl) +
                          "_seed" + std::to_string(seed);
        write_trace(w, cfg, "trace_" + tag + ".csv", trace, p, seed);

        risk::PnlDistribution dist = risk::hedge_pnl(p, eval_sets[sl], cost);
        risk::RiskReport rep = risk::summarize(
            dist, cfg.lambda, std::string(models::family_name(fam)), sl, std::to_string(seed));
        cell_reports.push_back(rep);
        res.reports.push_back(rep);
        if (risk_tables)
          write_histogram(w, cfg, "pnl_hist_" + tag + ".csv", dist.values, std::to_string(seed),
                          params_tag(p));

        if (fam == models::Family::attention) {
          std::vector<std::vector<double>> probes;
          probes.reserve(eval_sets[sl].size());
          for (const auto& s : eval_sets[sl]) probes.push_back(s.span);
          crit_cells.push_back({sl, seed, analysis::criticality(p, probes)});
        }
      }
      res.averages.push_back(average_reports(cell_reports));
    }
  }

  std::string seeds_desc = join_u64(cfg.seeds);
  if (risk_tables) {
    std::ostringstream rows;
    rows << risk::RiskReport::csv_header() << "\n";
    for (const auto& r : res.reports) rows << r.csv_row() << "\n";
    w.write("risk_reports.csv", meta_line(cfg, seeds_desc, all_params) + rows.str());

    std::ostringstream avg_rows;
    avg_rows << risk::RiskReport::csv_header() << "\n";
    for (const auto& r : res.averages) avg_rows << r.csv_row() << "\n";
    w.write("risk_reports_avg.csv", meta_line(cfg, seeds_desc, all_params) + avg_rows.str());
  }

  if (!crit_cells.empty()) {
    std::ostringstream per_seed;
    per_seed << "span_length,seed,position,weight\n";
    for (const auto& c : crit_cells)
      for (size_t j = 0; j < c.row.weights.size(); ++j)
        per_seed << c.sl << "," << c.seed << "," << j << ","
                 << io::format_double(c.row.weights[j]) << "\n";

    std::ostringstream avg;
    avg << "span_length,position,weight\n";
    for (int sl : cfg.span_lengths) {
      analysis::CriticalityRow mean_row;
      mean_row.span_length = sl;
      mean_row.weights.assign(size_t(sl), 0.0);
      int n = 0;
      for (const auto& c : crit_cells) {
        if (c.sl != sl) continue;
        for (size_t j = 0; j < c.row.weights.size(); ++j) mean_row.weights[j] += c.row.weights[j];
        ++n;
      }
      if (n == 0) continue;
      double total = 0.0;
      for (double& x : mean_row.weights) {
        x /= n;
        total += x;
      }
      for (double& x : mean_row.weights) x /= total;  // each row sums to 1; keep it exact
      for (size_t j = 0; j < mean_row.weights.size(); ++j)
        avg << sl << "," << j << "," << io::format_double(mean_row.weights[j]) << "\n";
      res.criticality.push_back(std::move(mean_row));
    }
    std::string attn_params = all_params.empty() ? "attention" : all_params;
    w.write("criticality_seeds.csv", meta_line(cfg, seeds_desc, attn_params) + per_seed.str());
    w.write("criticality.csv", meta_line(cfg, seeds_desc, attn_params) + avg.str());
  }
}

}  // namespace

RunResult run(const ExperimentConfig& cfg) {
  ValidationReport v = validate(cfg);
  if (!v.ok()) {
    std::string msg = "invalid experiment config:";
    for (const auto& e : v.errors) msg += "\n  - " + e;
    throw config_error(msg);
  }
  fs::create_directories(cfg.out_dir);

  Writer w;
  w.root = cfg.out_dir;
  RunResult res;
  w.write("config.ini", config_snapshot(cfg));

  switch (cfg.kind) {
    case Kind::approx_delta: run_approx_delta(cfg, w, res); break;
    case Kind::approx_pnl: run_approx_pnl(cfg, w, res); break;
    case Kind::pretrain_compare: run_pretrain_compare(cfg, w, res); break;
    case Kind::data_poor: run_data_poor(cfg, w, res); break;
    case Kind::span_models:
    case Kind::table3: run_span_study(cfg, w, res, true); break;
    case Kind::criticality: run_span_study(cfg, w, res, false); break;
  }

  std::string listing;
  for (const auto& n : w.names) listing += n + "\n";
  w.write("index.txt", listing);
  res.files = w.names;
  return res;
}

}  // namespace hedgelab::experiment
