#include "qrul/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "qrul/checkpoint.hpp"
#include "qrul/hash.hpp"
#include "qrul/parallel.hpp"
#include "qrul/rng.hpp"

namespace qrul::train {

namespace {

using nlohmann::json;

double sample_loss_grad(const model::SequenceModel& m,
                        std::span<const nn::Tensor* const> order,
                        const data::WindowSample& sample, std::span<double> grad_row) {
  nn::Tape tape;
  const nn::Tape::Var out = m.output_tape(tape, sample.x);
  const double target[1] = {sample.target};
  const nn::Tape::Var loss = tape.mse(out, target);
  tape.backward(loss);
  tape.export_grads(order, grad_row);
  return tape.value(loss)[0];
}

// fixed-order reduction shared by the serial and parallel kernels
double reduce_rows(std::span<const int> idx, std::size_t n_params, const BatchWorkspace& ws,
                   std::span<double> grad_out) {
  const double inv = 1.0 / static_cast<double>(idx.size());
  std::fill(grad_out.begin(), grad_out.end(), 0.0);
  double loss = 0.0;
  for (std::size_t s = 0; s < idx.size(); ++s) {
    loss += ws.losses[s];
    const double* row = ws.rows.data() + s * n_params;
    for (std::size_t p = 0; p < n_params; ++p) grad_out[p] += row[p];
  }
  for (std::size_t p = 0; p < n_params; ++p) grad_out[p] *= inv;
  return loss * inv;
}

std::size_t order_size(std::span<const nn::Tensor* const> order) {
  std::size_t n = 0;
  for (const nn::Tensor* t : order) n += t->size();
  return n;
}

}  // namespace

double batch_loss_grad_serial(const model::SequenceModel& m,
                              std::span<const nn::Tensor* const> order,
                              std::span<const data::WindowSample> samples,
                              std::span<const int> idx, std::span<double> grad_out,
                              BatchWorkspace& ws) {
  const std::size_t n_params = order_size(order);
  ws.rows.resize(idx.size() * n_params);
  ws.losses.resize(idx.size());
  for (std::size_t s = 0; s < idx.size(); ++s) {
    ws.losses[s] = sample_loss_grad(m, order, samples[static_cast<std::size_t>(idx[s])],
                                    {ws.rows.data() + s * n_params, n_params});
  }
  return reduce_rows(idx, n_params, ws, grad_out);
}

double batch_loss_grad_parallel(const model::SequenceModel& m,
                                std::span<const nn::Tensor* const> order,
                                std::span<const data::WindowSample> samples,
                                std::span<const int> idx, std::span<double> grad_out,
                                BatchWorkspace& ws) {
  const std::size_t n_params = order_size(order);
  ws.rows.resize(idx.size() * n_params);
  ws.losses.resize(idx.size());
  parallel_for(static_cast<std::int64_t>(idx.size()), [&](std::int64_t s) {
    const auto si = static_cast<std::size_t>(s);
    ws.losses[si] = sample_loss_grad(m, order, samples[static_cast<std::size_t>(idx[si])],
                                     {ws.rows.data() + si * n_params, n_params});
  });
  return reduce_rows(idx, n_params, ws, grad_out);
}

EvalRecord evaluate(const model::SequenceModel& m, std::span<const data::WindowSample> windows,
                    bool clip, double clip_lo, double clip_hi) {
  EvalRecord rec;
  rec.preds.resize(windows.size());
  rec.targets.resize(windows.size());
  parallel_for(static_cast<std::int64_t>(windows.size()), [&](std::int64_t i) {
    const auto ii = static_cast<std::size_t>(i);
    double p = m.predict(windows[ii].x);
    if (clip) p = std::clamp(p, clip_lo, clip_hi);
    rec.preds[ii] = p;
    rec.targets[ii] = windows[ii].target;
  });
  double se = 0.0, ae = 0.0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const double d = rec.preds[i] - rec.targets[i];
    se += d * d;
    ae += std::abs(d);
  }
  const double n = windows.empty() ? 1.0 : static_cast<double>(windows.size());
  rec.rmse = std::sqrt(se / n);
  rec.mae = ae / n;
  return rec;
}

double constant_predictor_rmse(std::span<const data::WindowSample> train,
                               std::span<const data::WindowSample> test) {
  if (train.empty() || test.empty()) throw InputError("train: empty window set");
  double mean = 0.0;
  for (const auto& w : train) mean += w.target;
  mean /= static_cast<double>(train.size());
  double se = 0.0;
  for (const auto& w : test) {
    const double d = mean - w.target;
    se += d * d;
  }
  return std::sqrt(se / static_cast<double>(test.size()));
}

SeedRunResult train_one_seed(model::SequenceModel& m, const data::Dataset& ds,
                             const TrainOptions& opts) {
  if (opts.epochs < 0 || opts.batch_size < 1) throw InputError("train: bad epochs/batch size");
  if (ds.train.empty()) throw InputError("train: dataset has no training windows");
  m.init_params(opts.seed);

  model::ParamSet ps;
  m.collect(ps);
  const std::vector<const nn::Tensor*> order = ps.order();
  std::vector<nn::Tensor*> mut_order;
  for (auto& [name, t] : ps.items) mut_order.push_back(t);

  std::vector<double> flat = model::flatten_params(order);
  std::vector<double> grad(flat.size(), 0.0);
  nn::AdamState adam(flat.size(), nn::AdamConfig{opts.lr, 0.9, 0.999, 1e-8});
  BatchWorkspace ws;

  std::vector<int> idx(ds.train.size());
  std::iota(idx.begin(), idx.end(), 0);

  SeedRunResult result;
  double best_val = std::numeric_limits<double>::infinity();
  result.best_flat = flat;

  const auto val_mse = [&]() {
    if (ds.val.empty()) return 0.0;
    std::vector<double> errs(ds.val.size());
    parallel_for(static_cast<std::int64_t>(ds.val.size()), [&](std::int64_t i) {
      const auto ii = static_cast<std::size_t>(i);
      const double d = m.predict(ds.val[ii].x) - ds.val[ii].target;
      errs[ii] = d * d;
    });
    double acc = 0.0;
    for (double e : errs) acc += e;
    return acc / static_cast<double>(ds.val.size());
  };

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    Rng rng = Rng::stream(opts.seed, 0x5F0FF1E5ULL, static_cast<std::uint64_t>(epoch));
    rng.shuffle(idx);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < idx.size(); start += static_cast<std::size_t>(opts.batch_size)) {
      const std::size_t count =
          std::min(static_cast<std::size_t>(opts.batch_size), idx.size() - start);
      const std::span<const int> batch(idx.data() + start, count);
      const double loss = opts.parallel
                              ? batch_loss_grad_parallel(m, order, ds.train, batch, grad, ws)
                              : batch_loss_grad_serial(m, order, ds.train, batch, grad, ws);
      if (!std::isfinite(loss))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           " (seed " + std::to_string(opts.seed) + ", lr " +
                           std::to_string(opts.lr) + "); check learning rate/initialization");
      adam.update(flat, grad);
      model::unflatten_params(flat, mut_order);
      loss_sum += loss * static_cast<double>(count);
      seen += count;
    }

    EpochStats stats;
    stats.train_mse = loss_sum / static_cast<double>(seen);
    stats.val_mse = val_mse();
    result.curves.push_back(stats);
    if (!ds.val.empty() && stats.val_mse < best_val) {
      best_val = stats.val_mse;
      result.best_epoch = epoch;
      result.best_flat = flat;
    }
  }
  if (ds.val.empty() || result.curves.empty()) result.best_flat = flat;

  result.eval = evaluate(m, ds.test);
  result.eval.seed = opts.seed;
  return result;
}

Aggregate aggregate_seeds(std::span<const EvalRecord> evals) {
  if (evals.empty()) throw InputError("train: no evaluation records to aggregate");
  Aggregate agg;
  agg.best_rmse = std::numeric_limits<double>::infinity();
  agg.best_mae = std::numeric_limits<double>::infinity();
  for (const EvalRecord& e : evals) {
    agg.mean_rmse += e.rmse;
    agg.mean_mae += e.mae;
    agg.best_rmse = std::min(agg.best_rmse, e.rmse);
    agg.best_mae = std::min(agg.best_mae, e.mae);
  }
  const double n = static_cast<double>(evals.size());
  agg.mean_rmse /= n;
  agg.mean_mae /= n;

  // seed-averaged prediction, then the metric of that single prediction set
  const std::size_t n_units = evals.front().preds.size();
  double se = 0.0, ae = 0.0;
  for (std::size_t i = 0; i < n_units; ++i) {
    double p = 0.0;
    for (const EvalRecord& e : evals) p += e.preds[i];
    p /= n;
    const double d = p - evals.front().targets[i];
    se += d * d;
    ae += std::abs(d);
  }
  agg.ensemble_rmse = std::sqrt(se / static_cast<double>(n_units));
  agg.ensemble_mae = ae / static_cast<double>(n_units);
  return agg;
}

namespace {

void write_curves_csv(const std::string& path, const std::vector<EpochStats>& curves) {
  std::ofstream out(path);
  out << "epoch,train_mse,val_mse\n";
  char buf[96];
  for (std::size_t e = 0; e < curves.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", e + 1, curves[e].train_mse,
                  curves[e].val_mse);
    out << buf;
  }
}

json eval_to_json(const EvalRecord& e) {
  json j;
  j["seed"] = e.seed;
  j["rmse"] = e.rmse;
  j["mae"] = e.mae;
  j["predictions"] = e.preds;
  j["targets"] = e.targets;
  return j;
}

}  // namespace

ExperimentResult run_experiment(const data::Dataset& ds, const ExperimentOptions& opts,
                                const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (opts.seeds.empty()) throw InputError("train: need at least one seed");
  fs::create_directories(out_dir);

  // window/features always come from the dataset
  json cfg = opts.config_json.empty() ? json::object() : json::parse(opts.config_json);
  cfg["window"] = ds.window;
  cfg["n_features"] = ds.n_channels;
  const std::string config_json = cfg.dump();
  const std::string config_hash = hex64(fnv1a64(opts.model_kind + "|" + config_json));

  ExperimentResult result;
  std::vector<EvalRecord>& evals = result.evals;

  for (std::uint64_t seed : opts.seeds) {
    auto m = model::make_model(opts.model_kind, config_json);
    TrainOptions topts = opts.train;
    topts.seed = seed;
    SeedRunResult run = train_one_seed(*m, ds, topts);
    if (opts.clip_predictions) {
      run.eval = evaluate(*m, ds.test, true);
      run.eval.seed = seed;
    }

    const fs::path seed_dir = fs::path(out_dir) / ("seed-" + std::to_string(seed));
    fs::create_directories(seed_dir);
    save_checkpoint((seed_dir / "checkpoint.json").string(), *m, seed, config_hash);

    // best-validation parameters, saved for inspection
    model::ParamSet ps;
    m->collect(ps);
    std::vector<nn::Tensor*> mut_order;
    for (auto& [name, t] : ps.items) mut_order.push_back(t);
    const std::vector<double> final_flat = model::flatten_params(ps.order());
    model::unflatten_params(run.best_flat, mut_order);
    save_checkpoint((seed_dir / "checkpoint_best.json").string(), *m, seed, config_hash);
    model::unflatten_params(final_flat, mut_order);

    write_curves_csv((seed_dir / "curves.csv").string(), run.curves);
    std::ofstream ej(seed_dir / "eval.json");
    ej << eval_to_json(run.eval).dump(2) << "\n";

    evals.push_back(std::move(run.eval));
    result.param_count = model::param_count(*m);
  }

  result.agg = aggregate_seeds(evals);

  json summary;
  summary["model"] = opts.model_kind;
  summary["config"] = json::parse(config_json);
  summary["config_hash"] = config_hash;
  summary["param_count"] = result.param_count;
  summary["seeds"] = opts.seeds;
  summary["epochs"] = opts.train.epochs;
  summary["batch_size"] = opts.train.batch_size;
  summary["lr"] = opts.train.lr;
  summary["mean_rmse"] = result.agg.mean_rmse;
  summary["best_rmse"] = result.agg.best_rmse;
  summary["mean_mae"] = result.agg.mean_mae;
  summary["best_mae"] = result.agg.best_mae;
  summary["ensemble_rmse"] = result.agg.ensemble_rmse;
  summary["ensemble_mae"] = result.agg.ensemble_mae;
  json per_seed = json::array();
  for (const EvalRecord& e : evals) {
    per_seed.push_back({{"seed", e.seed}, {"rmse", e.rmse}, {"mae", e.mae}});
  }
  summary["per_seed"] = std::move(per_seed);
  result.summary_json = summary.dump(2) + "\n";

  std::ofstream sj(fs::path(out_dir) / "summary.json");
  sj << result.summary_json;

  std::ofstream sc(fs::path(out_dir) / "summary.csv");
  sc << "model,seeds,mean_rmse,best_rmse,mean_mae,best_mae,ensemble_rmse,ensemble_mae,param_count\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%zu,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%ld\n",
                opts.model_kind.c_str(), opts.seeds.size(), result.agg.mean_rmse,
                result.agg.best_rmse, result.agg.mean_mae, result.agg.best_mae,
                result.agg.ensemble_rmse, result.agg.ensemble_mae, result.param_count);
  sc << buf;

  return result;
}

}  // namespace qrul::train
