// Command-line front end: simulate markets, train and evaluate hedging
// models, and run the packaged studies. Exit codes: 0 success, 1 bad
// configuration, 2 runtime/numeric failure.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hedgelab/analysis.hpp"
#include "hedgelab/errors.hpp"
#include "hedgelab/experiment.hpp"
#include "hedgelab/io.hpp"
#include "hedgelab/market.hpp"
#include "hedgelab/models.hpp"
#include "hedgelab/risk.hpp"
#include "hedgelab/training.hpp"

namespace hl = hedgelab;

namespace {

std::string default_out_root() {
  const char* env = std::getenv("HEDGELAB_OUT");
  return env && *env ? env : "out";
}

void add_market_options(CLI::App* cmd, hl::market::MarketConfig& mc) {
  cmd->add_option("--s0", mc.s0, "initial spot price");
  cmd->add_option("--strike", mc.strike, "option strike");
  cmd->add_option("--rate", mc.rate, "risk-free rate (annualized)");
  cmd->add_option("--vol", mc.vol, "volatility (annualized)");
  cmd->add_option("--horizon_days", mc.horizon_days, "trading days to expiry");
  cmd->add_option("--n_paths", mc.n_paths, "number of simulated paths");
  cmd->add_option("--market_seed,--seed", mc.seed, "market simulation seed");
}

void add_train_options(CLI::App* cmd, hl::training::TrainConfig& tc, std::string& loss) {
  cmd->add_option("--batch_size", tc.batch_size, "mini-batch size");
  cmd->add_option("--epochs", tc.epochs, "training epochs");
  cmd->add_option("--lr", tc.lr, "learning rate");
  cmd->add_option("--beta1", tc.beta1, "AdamW beta1");
  cmd->add_option("--beta2", tc.beta2, "AdamW beta2");
  cmd->add_option("--eps", tc.eps, "AdamW epsilon");
  cmd->add_option("--weight_decay", tc.weight_decay, "decoupled weight decay");
  cmd->add_option("--train_seed", tc.seed, "shuffle seed");
  cmd->add_option("--loss", loss, "loss: delta_mse | pnl | pnl_with_cost");
  cmd->add_option("--transaction_cost", tc.transaction_cost,
                  "currency cost per unit delta (pnl_with_cost)");
}

std::vector<hl::training::HedgeSample> make_dataset(const hl::market::MarketConfig& mc,
                                                    const hl::models::ArchSpec& spec) {
  hl::market::PathSet paths = hl::market::simulate_paths(mc);
  if (spec.input_size() == 1 && spec.span_length == 1 &&
      (spec.family == hl::models::Family::snn || spec.family == hl::models::Family::snn_pnl))
    return hl::training::from_terminal(hl::market::build_terminal_dataset(paths), mc);
  return hl::training::from_spans(hl::market::build_span_dataset(paths, spec.span_length), mc);
}

int run_simulate(const hl::market::MarketConfig& mc, const std::string& out) {
  hl::market::PathSet paths = hl::market::simulate_paths(mc);
  std::ofstream f(out, std::ios::binary);
  if (!f) throw hl::io_error("cannot open " + out + " for writing");
  hl::market::save_csv(paths, f);
  std::cout << "wrote " << paths.n_paths() << " paths x " << paths.n_cols() << " columns to "
            << out << "\n";
  return 0;
}

int run_train(const hl::market::MarketConfig& mc, hl::training::TrainConfig tc,
              const std::string& loss_name, const std::string& family, int span_length,
              std::uint64_t init_seed, const std::string& out, const std::string& trace_file) {
  tc.loss = hl::training::loss_from_name(loss_name);
  hl::models::ArchSpec spec =
      hl::models::ArchSpec::make(hl::models::family_from_name(family), span_length);
  hl::models::ModelParams params = hl::models::build(spec, init_seed);
  std::vector<hl::training::HedgeSample> data = make_dataset(mc, spec);
  hl::training::TrainTrace trace = hl::training::train(params, data, tc);
  hl::models::save(params, out);
  if (!trace_file.empty()) hl::io::write_file(trace_file, trace.to_csv(true));
  std::cout << "trained " << family << " (" << params.param_count() << " params) on "
            << data.size() << " samples; final running loss "
            << hl::io::format_double(trace.final_loss()) << "; checkpoint " << out << "\n";
  return 0;
}

int run_evaluate(const hl::market::MarketConfig& mc, const std::string& model_file, double lambda,
                 double cost, const std::string& out) {
  hl::models::ModelParams params = hl::models::load(model_file);
  std::vector<hl::training::HedgeSample> data = make_dataset(mc, params.spec);
  hl::risk::RiskReport rep = hl::risk::evaluate(params, data, lambda, cost, "-");
  std::string text = hl::risk::RiskReport::csv_header() + "\n" + rep.csv_row() + "\n";
  std::cout << text;
  if (!out.empty()) hl::io::write_file(out, text);
  return 0;
}

int run_criticality(const hl::market::MarketConfig& mc, const std::string& model_file,
                    const std::string& out) {
  hl::models::ModelParams params = hl::models::load(model_file);
  hl::market::PathSet paths = hl::market::simulate_paths(mc);
  std::vector<hl::market::SpanSample> spans =
      hl::market::build_span_dataset(paths, params.spec.span_length);
  std::vector<std::vector<double>> probes;
  probes.reserve(spans.size());
  for (const auto& s : spans) probes.push_back(s.span);
  hl::analysis::CriticalityRow row = hl::analysis::criticality(params, probes);
  std::string text = "span_length,position,weight\n";
  for (std::size_t j = 0; j < row.weights.size(); ++j)
    text += std::to_string(row.span_length) + "," + std::to_string(j) + "," +
            hl::io::format_double(row.weights[j]) + "\n";
  std::cout << text;
  std::cout << "max position: " << hl::analysis::max_position(row) << "\n";
  if (!out.empty()) hl::io::write_file(out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hedgelab: a neural delta-hedging laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(hl::experiment::kVersion));

  // ---- simulate ----
  hl::market::MarketConfig sim_mc;
  std::string sim_out = "paths.csv";
  CLI::App* sim = app.add_subcommand("simulate", "simulate price paths to CSV");
  add_market_options(sim, sim_mc);
  sim->add_option("--out", sim_out, "output CSV file");

  // ---- train ----
  hl::market::MarketConfig tr_mc;
  hl::training::TrainConfig tr_tc;
  std::string tr_loss = "delta_mse", tr_family = "snn", tr_out = "model.ckpt", tr_trace;
  int tr_span = 1;
  std::uint64_t tr_init_seed = 1;
  CLI::App* tr = app.add_subcommand("train", "train one hedging model");
  add_market_options(tr, tr_mc);
  add_train_options(tr, tr_tc, tr_loss);
  tr->add_option("--family", tr_family, "snn | snn_pnl | rnn | tcn | attention | span_mlp");
  tr->add_option("--span_length", tr_span, "input span length (sequence families)");
  tr->add_option("--init_seed", tr_init_seed, "parameter initialization seed");
  tr->add_option("--out", tr_out, "checkpoint file");
  tr->add_option("--trace", tr_trace, "optional training-trace CSV");

  // ---- evaluate ----
  hl::market::MarketConfig ev_mc;
  std::string ev_model, ev_out;
  double ev_lambda = 1.0, ev_cost = 0.0;
  CLI::App* ev = app.add_subcommand("evaluate", "risk statistics of a trained model");
  add_market_options(ev, ev_mc);
  ev->add_option("--model", ev_model, "checkpoint file")->required();
  ev->add_option("--lambda", ev_lambda, "risk aversion for the entropic measure");
  ev->add_option("--cost", ev_cost, "transaction cost per unit delta");
  ev->add_option("--out", ev_out, "optional output CSV");

  // ---- criticality ----
  hl::market::MarketConfig cr_mc;
  std::string cr_model, cr_out;
  CLI::App* cr = app.add_subcommand("criticality", "attention span-position weights");
  add_market_options(cr, cr_mc);
  cr->add_option("--model", cr_model, "checkpoint file (attention family)")->required();
  cr->add_option("--out", cr_out, "optional output CSV");

  // ---- experiment ----
  std::string ex_kind = "table3", ex_out, ex_loss;
  hl::market::MarketConfig ex_mc;
  hl::training::TrainConfig ex_tc;
  std::vector<std::string> ex_families;
  std::vector<int> ex_spans;
  std::vector<std::uint64_t> ex_seeds;
  double ex_lambda = 1.0;
  int ex_pre = 0, ex_fine = 0;
  CLI::App* ex = app.add_subcommand("experiment", "run a packaged study");
  ex->set_config("--config", "", "read options from an INI file");
  CLI::Option* o_kind = ex->add_option("--experiment", ex_kind,
                                       "approx_delta | approx_pnl | pretrain_compare | data_poor "
                                       "| span_models | table3 | criticality");
  add_market_options(ex, ex_mc);
  add_train_options(ex, ex_tc, ex_loss);
  CLI::Option* o_families = ex->add_option("--families", ex_families, "model families to train");
  CLI::Option* o_spans = ex->add_option("--span_lengths", ex_spans, "span lengths to train");
  CLI::Option* o_seeds = ex->add_option("--seeds", ex_seeds, "replication seeds");
  CLI::Option* o_lambda = ex->add_option("--lambda", ex_lambda, "risk aversion");
  CLI::Option* o_pre = ex->add_option("--pre_epochs", ex_pre, "pretraining epochs");
  CLI::Option* o_fine = ex->add_option("--fine_epochs", ex_fine, "fine-tuning epochs");
  CLI::Option* o_out = ex->add_option("--out", ex_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (sim->parsed()) return run_simulate(sim_mc, sim_out);
    if (tr->parsed())
      return run_train(tr_mc, tr_tc, tr_loss, tr_family, tr_span, tr_init_seed, tr_out, tr_trace);
    if (ev->parsed()) return run_evaluate(ev_mc, ev_model, ev_lambda, ev_cost, ev_out);
    if (cr->parsed()) return run_criticality(cr_mc, cr_model, cr_out);

    // experiment: kind-specific defaults, then only the flags actually given
    hl::experiment::Kind kind = hl::experiment::kind_from_name(ex_kind);
    hl::experiment::ExperimentConfig cfg = hl::experiment::make_default(kind);
    (void)o_kind;
    auto set_if = [](const CLI::Option* o, auto& dst, const auto& src) {
      if (o->count() > 0) dst = src;
    };
    set_if(ex->get_option("--s0"), cfg.market.s0, ex_mc.s0);
    set_if(ex->get_option("--strike"), cfg.market.strike, ex_mc.strike);
    set_if(ex->get_option("--rate"), cfg.market.rate, ex_mc.rate);
    set_if(ex->get_option("--vol"), cfg.market.vol, ex_mc.vol);
    set_if(ex->get_option("--horizon_days"), cfg.market.horizon_days, ex_mc.horizon_days);
    set_if(ex->get_option("--n_paths"), cfg.market.n_paths, ex_mc.n_paths);
    set_if(ex->get_option("--market_seed"), cfg.market.seed, ex_mc.seed);
    set_if(ex->get_option("--batch_size"), cfg.train.batch_size, ex_tc.batch_size);
    set_if(ex->get_option("--epochs"), cfg.train.epochs, ex_tc.epochs);
    set_if(ex->get_option("--lr"), cfg.train.lr, ex_tc.lr);
    set_if(ex->get_option("--beta1"), cfg.train.beta1, ex_tc.beta1);
    set_if(ex->get_option("--beta2"), cfg.train.beta2, ex_tc.beta2);
    set_if(ex->get_option("--eps"), cfg.train.eps, ex_tc.eps);
    set_if(ex->get_option("--weight_decay"), cfg.train.weight_decay, ex_tc.weight_decay);
    set_if(ex->get_option("--train_seed"), cfg.train.seed, ex_tc.seed);
    set_if(ex->get_option("--transaction_cost"), cfg.train.transaction_cost,
           ex_tc.transaction_cost);
    if (ex->get_option("--loss")->count() > 0)
      cfg.train.loss = hl::training::loss_from_name(ex_loss);
    if (o_families->count() > 0) {
      cfg.families.clear();
      for (const auto& f : ex_families) cfg.families.push_back(hl::models::family_from_name(f));
    }
    set_if(o_spans, cfg.span_lengths, ex_spans);
    set_if(o_seeds, cfg.seeds, ex_seeds);
    set_if(o_lambda, cfg.lambda, ex_lambda);
    set_if(o_pre, cfg.pre_epochs, ex_pre);
    set_if(o_fine, cfg.fine_epochs, ex_fine);
    cfg.out_dir = o_out->count() > 0 ? ex_out
                                     : default_out_root() + "/" + std::string(kind_name(kind));

    hl::experiment::ValidationReport v = hl::experiment::validate(cfg);
    for (const auto& wmsg : v.warnings) std::cerr << "warning: " << wmsg << "\n";
    if (!v.ok()) {
      for (const auto& emsg : v.errors) std::cerr << "error: " << emsg << "\n";
      return 1;
    }
    hl::experiment::RunResult res = hl::experiment::run(cfg);
    std::cout << "experiment " << kind_name(kind) << ": wrote " << res.files.size()
              << " artifacts to " << cfg.out_dir << "\n";
    return 0;
  } catch (const hl::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
