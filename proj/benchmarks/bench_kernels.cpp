// Timing comparison of the OpenMP kernels against their serial reference
// implementations, with a bitwise-equality check on each pair. Wall-clock
// numbers depend on the machine; the equality must not.
#include <chrono>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hedgelab/market.hpp"
#include "hedgelab/models.hpp"
#include "hedgelab/training.hpp"

using namespace hedgelab;
using clock_type = std::chrono::steady_clock;

namespace {

template <typename F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    auto t0 = clock_type::now();
    f();
    best = std::min(best, std::chrono::duration<double>(clock_type::now() - t0).count());
  }
  return best;
}

void row(const std::string& name, double serial_s, double parallel_s, bool identical) {
  std::cout << std::left << std::setw(34) << name << std::right << std::fixed
            << std::setprecision(4) << std::setw(10) << serial_s << " s" << std::setw(10)
            << parallel_s << " s" << std::setw(9) << std::setprecision(2)
            << (serial_s / parallel_s) << "x   " << (identical ? "bitwise-equal" : "MISMATCH")
            << "\n";
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::cout << "threads: " << omp_get_max_threads() << "\n";
#else
  std::cout << "threads: 1 (OpenMP disabled)\n";
#endif
  std::cout << std::left << std::setw(34) << "kernel" << std::right << std::setw(12) << "serial"
            << std::setw(12) << "parallel" << std::setw(10) << "speedup" << "\n";

  int mismatches = 0;

  {
    market::MarketConfig mc;
    mc.n_paths = 200000;
    market::PathSet ref = market::simulate_paths_serial(mc);
    market::PathSet par = market::simulate_paths(mc);
    bool same = ref.prices == par.prices;
    mismatches += same ? 0 : 1;
    double ts = best_of(3, [&] { market::simulate_paths_serial(mc); });
    double tp = best_of(3, [&] { market::simulate_paths(mc); });
    row("simulate_paths (200k x 22 days)", ts, tp, same);
  }

  {
    market::MarketConfig mc;
    mc.n_paths = 2048;
    auto data = training::from_terminal(market::build_terminal_dataset(market::simulate_paths(mc)), mc);
    models::ModelParams p = models::build(models::ArchSpec::make(models::Family::snn_pnl), 1);
    std::vector<int> batch(data.size());
    std::iota(batch.begin(), batch.end(), 0);
    auto gs = training::batch_gradient_serial(p, data, batch, training::Loss::pnl, 0.0);
    auto gp = training::batch_gradient(p, data, batch, training::Loss::pnl, 0.0);
    bool same = gs == gp;
    mismatches += same ? 0 : 1;
    double ts = best_of(3, [&] {
      training::batch_gradient_serial(p, data, batch, training::Loss::pnl, 0.0);
    });
    double tp =
        best_of(3, [&] { training::batch_gradient(p, data, batch, training::Loss::pnl, 0.0); });
    row("batch_gradient snn_pnl (2048)", ts, tp, same);
  }

  {
    market::MarketConfig mc;
    mc.n_paths = 1024;
    auto data = training::from_spans(market::build_span_dataset(market::simulate_paths(mc), 7), mc);
    models::ModelParams p = models::build(models::ArchSpec::make(models::Family::rnn, 7), 1);
    std::vector<int> batch(data.size());
    std::iota(batch.begin(), batch.end(), 0);
    auto gs = training::batch_gradient_serial(p, data, batch, training::Loss::pnl_with_cost, 5.0);
    auto gp = training::batch_gradient(p, data, batch, training::Loss::pnl_with_cost, 5.0);
    bool same = gs == gp;
    mismatches += same ? 0 : 1;
    double ts = best_of(3, [&] {
      training::batch_gradient_serial(p, data, batch, training::Loss::pnl_with_cost, 5.0);
    });
    double tp = best_of(3, [&] {
      training::batch_gradient(p, data, batch, training::Loss::pnl_with_cost, 5.0);
    });
    row("batch_gradient rnn sl7 (1024)", ts, tp, same);
  }

  if (mismatches) {
    std::cout << mismatches << " kernel pair(s) disagree\n";
    return 1;
  }
  std::cout << "all kernel pairs bitwise-equal\n";
  return 0;
}
