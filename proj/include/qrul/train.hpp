#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qrul/data.hpp"
#include "qrul/model.hpp"

// Training loops, seed management, metrics, and multi-seed aggregation.
namespace qrul::train {

struct TrainOptions {
  int epochs = 20;
  int batch_size = 128;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  bool parallel = true;  // batch elements in parallel; results identical either way
};

struct EpochStats {
  double train_mse = 0.0;
  double val_mse = 0.0;
};

// Scratch buffers reused across batches.
struct BatchWorkspace {
  std::vector<double> rows;    // batch x n_params, per-sample gradients
  std::vector<double> losses;  // per-sample losses
};

// Mean loss over the batch; grad_out receives the mean gradient in the
// canonical tensor order. The parallel kernel computes per-sample rows with
// OpenMP and reduces them in sample order, so it matches the serial
// reference bit for bit.
double batch_loss_grad_serial(const model::SequenceModel& m,
                              std::span<const nn::Tensor* const> order,
                              std::span<const data::WindowSample> samples,
                              std::span<const int> idx, std::span<double> grad_out,
                              BatchWorkspace& ws);
double batch_loss_grad_parallel(const model::SequenceModel& m,
                                std::span<const nn::Tensor* const> order,
                                std::span<const data::WindowSample> samples,
                                std::span<const int> idx, std::span<double> grad_out,
                                BatchWorkspace& ws);

struct EvalRecord {
  std::uint64_t seed = 0;
  std::vector<double> preds;
  std::vector<double> targets;
  double rmse = 0.0;
  double mae = 0.0;
};

EvalRecord evaluate(const model::SequenceModel& m, std::span<const data::WindowSample> windows,
                    bool clip = false, double clip_lo = 0.0, double clip_hi = 125.0);

// RMSE on `test` of the constant predictor that always outputs the mean
// training target.
double constant_predictor_rmse(std::span<const data::WindowSample> train,
                               std::span<const data::WindowSample> test);

struct SeedRunResult {
  std::vector<EpochStats> curves;
  int best_epoch = 0;  // 1-based epoch with lowest validation MSE
  std::vector<double> best_flat;
  EvalRecord eval;  // final-epoch parameters on the test windows
};

// Deterministic given (seed, config, dataset): seeded init, seeded epoch
// shuffles, fixed-order gradient reduction. Throws NumericError on a
// non-finite loss.
SeedRunResult train_one_seed(model::SequenceModel& m, const data::Dataset& ds,
                             const TrainOptions& opts);

struct Aggregate {
  double mean_rmse = 0.0, best_rmse = 0.0;
  double mean_mae = 0.0, best_mae = 0.0;
  // metrics of the per-unit prediction averaged across seeds, reported
  // separately from the per-seed aggregation above
  double ensemble_rmse = 0.0, ensemble_mae = 0.0;
};

Aggregate aggregate_seeds(std::span<const EvalRecord> evals);

struct ExperimentOptions {
  std::string model_kind = "hqrnn";
  std::string config_json;  // empty = model defaults (window/features forced from dataset)
  std::vector<std::uint64_t> seeds = {1};
  TrainOptions train;
  bool clip_predictions = false;
};

struct ExperimentResult {
  Aggregate agg;
  std::vector<EvalRecord> evals;
  long param_count = 0;
  std::string summary_json;  // what was written to summary.json
};

// Runs every seed and writes the run directory layout:
//   out_dir/manifest.json
//   out_dir/seed-<k>/{checkpoint.json, checkpoint_best.json, curves.csv, eval.json}
//   out_dir/summary.json, out_dir/summary.csv
// summary.json carries no timestamps so identical runs are byte-identical.
ExperimentResult run_experiment(const data::Dataset& ds, const ExperimentOptions& opts,
                                const std::string& out_dir);

}  // namespace qrul::train
