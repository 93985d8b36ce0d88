// Benchmark comparing the serial reference kernels against the OpenMP ones:
// batch loss/gradient over window samples and the Fourier accessibility
// sweep. Also asserts that both paths produce identical results.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <vector>

#include "qrul/analysis.hpp"
#include "qrul/data.hpp"
#include "qrul/model.hpp"
#include "qrul/parallel.hpp"
#include "qrul/qdi.hpp"
#include "qrul/rng.hpp"
#include "qrul/train.hpp"

using namespace qrul;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

data::Dataset synthetic_windows(int n, int window, int features, std::uint64_t seed) {
  data::Dataset ds;
  ds.window = window;
  ds.n_channels = features;
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    data::WindowSample w;
    w.unit = i;
    w.end_cycle = window;
    w.x.resize(static_cast<std::size_t>(window) * features);
    for (double& v : w.x) v = rng.normal();
    w.target = rng.uniform(0.0, 125.0);
    ds.train.push_back(std::move(w));
  }
  return ds;
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = false;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--quick") == 0) quick = true;

  const int batch = quick ? 16 : 64;
  const int reps = quick ? 1 : 3;
  const int fourier_draws = quick ? 8 : 64;

  model::HqrnnConfig cfg;
  cfg.window = quick ? 10 : 30;
  cfg.n_features = 14;
  cfg.hidden = {8, 4};
  cfg.head = {16};
  model::Hqrnn m(cfg);
  m.init_params(1);

  const data::Dataset ds = synthetic_windows(batch, cfg.window, cfg.n_features, 2);
  model::ParamSet ps;
  m.collect(ps);
  const auto order = ps.order();
  std::vector<int> idx(ds.train.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> grad_a(ps.total_size()), grad_b(ps.total_size());
  train::BatchWorkspace ws;

  std::printf("batch gradient: %d samples, window %d, %ld params, %d rep(s)\n", batch, cfg.window,
              static_cast<long>(ps.total_size()), reps);

  double loss_serial = 0.0, t_serial = 0.0;
  {
    const double t0 = now_ms();
    for (int r = 0; r < reps; ++r)
      loss_serial = train::batch_loss_grad_serial(m, order, ds.train, idx, grad_a, ws);
    t_serial = (now_ms() - t0) / reps;
    std::printf("  %-18s %10.1f ms\n", "serial", t_serial);
  }

  for (int threads : {1, 2, 4, max_threads()}) {
    set_max_threads(threads);
    const double t0 = now_ms();
    double loss = 0.0;
    for (int r = 0; r < reps; ++r)
      loss = train::batch_loss_grad_parallel(m, order, ds.train, idx, grad_b, ws);
    const double t = (now_ms() - t0) / reps;
    const bool same = loss == loss_serial && grad_a == grad_b;
    std::printf("  openmp x%-3d        %10.1f ms   speedup %4.2f   identical %s\n", threads, t,
                t_serial / t, same ? "yes" : "NO");
    if (!same) {
      std::fprintf(stderr, "mismatch between serial and parallel kernels\n");
      return 1;
    }
  }
  set_max_threads(0);

  std::printf("fourier accessibility sweep: %d draws, pooled outputs\n", fourier_draws);
  const auto spec = qdi::build_qdi_circuit();
  set_max_threads(1);
  double t0 = now_ms();
  const auto serial_report = analysis::accessibility_count(spec, fourier_draws, 1e-6, 11, -1);
  const double t_fs = now_ms() - t0;
  std::printf("  %-18s %10.1f ms\n", "serial (1 thread)", t_fs);
  set_max_threads(0);
  t0 = now_ms();
  const auto parallel_report = analysis::accessibility_count(spec, fourier_draws, 1e-6, 11, -1);
  const double t_fp = now_ms() - t0;
  const bool same = serial_report.mean_abs == parallel_report.mean_abs;
  std::printf("  openmp x%-3d        %10.1f ms   speedup %4.2f   identical %s\n", max_threads(),
              t_fp, t_fs / t_fp, same ? "yes" : "NO");
  if (!same) {
    std::fprintf(stderr, "mismatch between serial and parallel accessibility\n");
    return 1;
  }
  std::printf("accessible components: %d / %d\n", serial_report.accessible, serial_report.total);
  return 0;
}
