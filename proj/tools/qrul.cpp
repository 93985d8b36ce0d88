// Command-line entry point: dataset preparation, training, evaluation,
// reporting, and quantum-layer analysis. All commands are deterministic given
// an explicit --seed; omitted seeds are generated, printed, and stored in the
// run manifest. Exit codes: 0 success, 2 input/configuration error,
// 3 numerical failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "CLI11.hpp"
#include "json.hpp"

#include "qrul/analysis.hpp"
#include "qrul/checkpoint.hpp"
#include "qrul/data.hpp"
#include "qrul/errors.hpp"
#include "qrul/hash.hpp"
#include "qrul/model.hpp"
#include "qrul/parallel.hpp"
#include "qrul/qdi.hpp"
#include "qrul/synth.hpp"
#include "qrul/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "qrul 0.1.0";

std::uint64_t generate_seed() {
  std::random_device rd;
  std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  seed ^= static_cast<std::uint64_t>(
      std::chrono::steady_clock::now().time_since_epoch().count());
  return seed ? seed : 1;
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qrul::InputError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& content) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw qrul::InputError("cannot write " + path.string());
  out << content;
}

void write_manifest(const std::string& dir, json extra) {
  extra["version"] = kVersion;
  extra["timestamp"] = timestamp_utc();
  write_file(fs::path(dir) / "manifest.json", extra.dump(2) + "\n");
}

std::string data_dir_or_env(std::string dir) {
  if (!dir.empty()) return dir;
  if (const char* env = std::getenv("QRUL_DATA_DIR")) return env;
  throw qrul::InputError("no data directory: pass --data-dir or set QRUL_DATA_DIR");
}

struct PrepareArgs {
  std::string data_dir;
  std::string subset = "FD001";
  std::string out = "dataset.cache";
  qrul::data::PrepareOptions opts;
  bool no_rul_cap = false;
  bool seed_given = false;
};

int run_prepare(PrepareArgs& args) {
  if (!args.seed_given) {
    args.opts.seed = generate_seed();
    std::printf("seed: %llu (generated)\n", static_cast<unsigned long long>(args.opts.seed));
  }
  args.opts.cap_test_rul = !args.no_rul_cap;
  const std::string dir = data_dir_or_env(args.data_dir);
  const std::string train_path = (fs::path(dir) / ("train_" + args.subset + ".txt")).string();
  const std::string test_path = (fs::path(dir) / ("test_" + args.subset + ".txt")).string();
  const std::string rul_path = (fs::path(dir) / ("RUL_" + args.subset + ".txt")).string();

  const qrul::data::Dataset ds =
      qrul::data::prepare_dataset(train_path, test_path, rul_path, args.opts);
  qrul::data::save_cache(ds, args.out);

  for (const std::string& w : ds.warnings) std::printf("warning: %s\n", w.c_str());
  std::printf("train units:     %d (min run length %d)\n", ds.n_train_units, ds.min_train_run);
  std::printf("kept channels:   %d of 21\n", ds.n_channels);
  std::printf("train windows:   %zu\n", ds.train.size());
  std::printf("val windows:     %zu (%zu engines)\n", ds.val.size(), ds.val_units.size());
  std::printf("test windows:    %zu\n", ds.test.size());
  std::printf("cache:           %s\n", args.out.c_str());
  return 0;
}

struct TrainArgs {
  std::string cache = "dataset.cache";
  std::string model = "hqrnn";
  std::string config_file;
  std::string rnn_name;
  std::string out = "runs/run";
  int seeds = 1;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int epochs = 20;
  int batch = 128;
  double lr = 0.001;
  bool clip = false;
};

int run_train(TrainArgs& args) {
  if (!args.seed_given) {
    args.seed = generate_seed();
    std::printf("seed: %llu (generated)\n", static_cast<unsigned long long>(args.seed));
  }
  const qrul::data::Dataset ds = qrul::data::load_cache(args.cache);

  qrul::train::ExperimentOptions opts;
  opts.model_kind = args.model;
  if (!args.config_file.empty()) opts.config_json = read_file(args.config_file);
  if (!args.rnn_name.empty()) {
    if (args.model != "rnn") throw qrul::InputError("--name applies to --model rnn");
    opts.config_json = qrul::model::RnnConfig::from_name(args.rnn_name).to_json();
  }
  for (int k = 0; k < args.seeds; ++k) {
    if (k == 0) {
      opts.seeds = {args.seed};
    } else {
      opts.seeds.push_back(args.seed + static_cast<std::uint64_t>(k));
    }
  }
  opts.train.epochs = args.epochs;
  opts.train.batch_size = args.batch;
  opts.train.lr = args.lr;
  opts.clip_predictions = args.clip;

  {
    // window/features come from the cache
    json cfg = opts.config_json.empty() ? json::object() : json::parse(opts.config_json);
    cfg["window"] = ds.window;
    cfg["n_features"] = ds.n_channels;
    auto probe = qrul::model::make_model(opts.model_kind, cfg.dump());
    std::printf("model: %s, parameters: %ld (reference table: HQRNN 6793, RNN-20-16-4-8-16 6793)\n",
                opts.model_kind.c_str(), qrul::model::param_count(*probe));
  }

  const qrul::train::ExperimentResult result = qrul::train::run_experiment(ds, opts, args.out);

  json manifest;
  manifest["command"] = "train";
  manifest["model"] = opts.model_kind;
  manifest["config"] = opts.config_json.empty() ? json::object() : json::parse(opts.config_json);
  manifest["seeds"] = opts.seeds;
  manifest["epochs"] = args.epochs;
  manifest["batch_size"] = args.batch;
  manifest["lr"] = args.lr;
  manifest["clip_predictions"] = args.clip;
  manifest["cache"] = args.cache;
  manifest["dataset_hashes"] = {qrul::hex64(ds.source_hashes[0]), qrul::hex64(ds.source_hashes[1]),
                                qrul::hex64(ds.source_hashes[2])};
  manifest["jobs"] = qrul::max_threads();
  write_manifest(args.out, std::move(manifest));

  std::printf("mean RMSE %.4f  best RMSE %.4f  mean MAE %.4f  best MAE %.4f\n",
              result.agg.mean_rmse, result.agg.best_rmse, result.agg.mean_mae,
              result.agg.best_mae);
  std::printf("seed-averaged prediction: RMSE %.4f  MAE %.4f\n", result.agg.ensemble_rmse,
              result.agg.ensemble_mae);
  std::printf("run directory: %s\n", args.out.c_str());
  return 0;
}

struct EvaluateArgs {
  std::string run;
  std::string cache = "dataset.cache";
  bool clip = false;
};

int run_evaluate(const EvaluateArgs& args) {
  const qrul::data::Dataset ds = qrul::data::load_cache(args.cache);
  std::vector<qrul::train::EvalRecord> evals;
  long params = 0;
  std::string kind = "?";
  for (const auto& entry : fs::directory_iterator(args.run)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("seed-", 0) != 0) continue;
    const auto loaded = qrul::train::load_checkpoint((entry.path() / "checkpoint.json").string());
    qrul::train::EvalRecord rec = qrul::train::evaluate(*loaded.model, ds.test, args.clip);
    rec.seed = loaded.seed;
    params = qrul::model::param_count(*loaded.model);
    kind = loaded.model->kind();
    json ej;
    ej["seed"] = rec.seed;
    ej["rmse"] = rec.rmse;
    ej["mae"] = rec.mae;
    ej["predictions"] = rec.preds;
    ej["targets"] = rec.targets;
    write_file(entry.path() / "eval.json", ej.dump(2) + "\n");
    evals.push_back(std::move(rec));
  }
  if (evals.empty()) throw qrul::InputError("no seed-* checkpoints under " + args.run);
  std::sort(evals.begin(), evals.end(),
            [](const auto& a, const auto& b) { return a.seed < b.seed; });
  const auto agg = qrul::train::aggregate_seeds(evals);
  std::printf("%s (%ld params, %zu seeds): mean RMSE %.4f  best RMSE %.4f  mean MAE %.4f  best "
              "MAE %.4f\n",
              kind.c_str(), params, evals.size(), agg.mean_rmse, agg.best_rmse, agg.mean_mae,
              agg.best_mae);
  return 0;
}

struct ReportArgs {
  std::vector<std::string> runs;
  std::string out;
};

int run_report(const ReportArgs& args) {
  if (args.runs.empty()) throw qrul::InputError("report: no run directories given");

  struct Row {
    std::string label, source;
    double mean_rmse, best_rmse, mean_mae, best_mae;
    double ensemble_rmse = -1, ensemble_mae = -1;
    long params;
  };
  std::vector<Row> rows;
  for (const std::string& run : args.runs) {
    const fs::path sj = fs::path(run) / "summary.json";
    if (!fs::exists(sj)) {
      std::printf("warning: %s has no summary.json, skipped (incomplete run?)\n", run.c_str());
      continue;
    }
    const json j = json::parse(read_file(sj.string()));
    Row row;
    std::string label = j.at("model").get<std::string>();
    if (j.contains("config") && j.at("config").contains("hidden")) {
      for (int d : j.at("config").at("hidden").get<std::vector<int>>())
        label += "-" + std::to_string(d);
      if (j.at("config").contains("head")) {
        for (int d : j.at("config").at("head").get<std::vector<int>>())
          label += "-" + std::to_string(d);
      }
    }
    row.label = label;
    row.source = "this-work";
    row.mean_rmse = j.at("mean_rmse").get<double>();
    row.best_rmse = j.at("best_rmse").get<double>();
    row.mean_mae = j.at("mean_mae").get<double>();
    row.best_mae = j.at("best_mae").get<double>();
    row.ensemble_rmse = j.at("ensemble_rmse").get<double>();
    row.ensemble_mae = j.at("ensemble_mae").get<double>();
    row.params = j.at("param_count").get<long>();
    rows.push_back(std::move(row));
  }

  // reference results from the comparison table, for side-by-side reading
  const Row paper_rows[] = {
      {"HQRNN", "paper", 15.46, 14.78, 12.25, 11.51, -1, -1, 6793},
      {"RNN-32-16-8-16-32", "paper", 16.71, 15.68, 13.18, 12.19, -1, -1, 14609},
      {"RNN-20-16-4-8-16", "paper", 16.37, 15.73, 12.89, 12.51, -1, -1, 6793},
      {"RNN-16-8-4-8-16", "paper", 16.56, 15.52, 13.03, 12.36, -1, -1, 4233},
      {"RNN-8-4-2-4-8", "paper", 29.72, 15.07, 24.52, 12.20, -1, -1, 1349},
  };
  for (const Row& r : paper_rows) rows.push_back(r);

  std::string csv =
      "model,source,mean_rmse,best_rmse,mean_mae,best_mae,ensemble_rmse,ensemble_mae,params\n";
  std::printf("%-22s %-9s %9s %9s %9s %9s %7s\n", "model", "source", "meanRMSE", "bestRMSE",
              "meanMAE", "bestMAE", "params");
  char buf[256];
  json jrows = json::array();
  for (const Row& r : rows) {
    std::printf("%-22s %-9s %9.2f %9.2f %9.2f %9.2f %7ld\n", r.label.c_str(), r.source.c_str(),
                r.mean_rmse, r.best_rmse, r.mean_mae, r.best_mae, r.params);
    std::snprintf(buf, sizeof buf, "%s,%s,%.4f,%.4f,%.4f,%.4f,", r.label.c_str(),
                  r.source.c_str(), r.mean_rmse, r.best_rmse, r.mean_mae, r.best_mae);
    csv += buf;
    if (r.ensemble_rmse >= 0) {
      std::snprintf(buf, sizeof buf, "%.4f,%.4f,", r.ensemble_rmse, r.ensemble_mae);
      csv += buf;
    } else {
      csv += ",,";
    }
    csv += std::to_string(r.params) + "\n";
    json jr;
    jr["model"] = r.label;
    jr["source"] = r.source;
    jr["mean_rmse"] = r.mean_rmse;
    jr["best_rmse"] = r.best_rmse;
    jr["mean_mae"] = r.mean_mae;
    jr["best_mae"] = r.best_mae;
    if (r.ensemble_rmse >= 0) {
      jr["ensemble_rmse"] = r.ensemble_rmse;
      jr["ensemble_mae"] = r.ensemble_mae;
    }
    jr["params"] = r.params;
    jrows.push_back(std::move(jr));
  }
  if (!args.out.empty()) {
    write_file(fs::path(args.out) / "report.csv", csv);
    write_file(fs::path(args.out) / "report.json", jrows.dump(2) + "\n");
    std::printf("report written to %s\n", args.out.c_str());
  }
  return 0;
}

struct AnalyzeArgs {
  std::string what;
  std::string out = "analysis";
  std::string circuit_file;
  std::string candidate_file;
  std::string map_file;
  std::string dump_circuit;
  int samples = 1000;
  double threshold = 0.0;  // per-analysis default
  int n_theta = 100;
  int n_x = 100;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int qubit = -1;
  int n_reps = 1;
  int trials = 20;
};

qrul::qsim::CircuitSpec load_or_default_circuit(const std::string& file, int n_reps) {
  if (file.empty()) return qrul::qdi::build_qdi_circuit(qrul::qdi::QdiLayout{4, n_reps});
  return qrul::qsim::CircuitSpec::from_json(read_file(file));
}

int run_analyze(AnalyzeArgs& args) {
  if (!args.seed_given) {
    args.seed = generate_seed();
    std::printf("seed: %llu (generated)\n", static_cast<unsigned long long>(args.seed));
  }
  const qrul::qsim::CircuitSpec spec = load_or_default_circuit(args.circuit_file, args.n_reps);
  if (!args.dump_circuit.empty()) write_file(args.dump_circuit, spec.to_json() + "\n");

  json summary;
  summary["what"] = args.what;
  summary["seed"] = args.seed;
  summary["circuit"] = args.circuit_file.empty() ? "builtin-qdi" : args.circuit_file;

  if (args.what == "fisher") {
    qrul::analysis::FimSpectrumOptions opts;
    opts.n_theta = args.n_theta;
    opts.n_x = args.n_x;
    opts.seed = args.seed;
    const auto spectrum = qrul::analysis::fim_spectrum(spec, opts);
    qrul::analysis::write_fim_csv(spectrum, args.out);
    summary["n_theta"] = opts.n_theta;
    summary["n_x"] = opts.n_x;
    summary["near_zero_fraction"] = spectrum.near_zero_fraction;
    summary["n_skipped"] = spectrum.n_skipped;
    std::printf("fisher: %d draws, near-zero eigenvalue fraction %.4f (threshold 1e-3 x max)\n",
                spectrum.n_draws, spectrum.near_zero_fraction);
  } else if (args.what == "fourier") {
    const double threshold = args.threshold > 0 ? args.threshold : 1e-6;
    const auto report =
        qrul::analysis::accessibility_count(spec, args.samples, threshold, args.seed, args.qubit);
    qrul::analysis::write_fourier_csv(report, args.out);
    summary["samples"] = args.samples;
    summary["threshold"] = threshold;
    summary["qubit"] = args.qubit;
    summary["accessible"] = report.accessible;
    summary["total"] = report.total;
    summary["per_qubit_accessible"] = report.per_qubit_accessible;
    std::printf("fourier: %d of %d components accessible (threshold %g, %s)\n", report.accessible,
                report.total, threshold,
                args.qubit < 0 ? "pooled over outputs" : "single output");
  } else if (args.what == "essentiality") {
    const double threshold = args.threshold > 0 ? args.threshold : 1e-4;
    const auto report =
        qrul::analysis::essential_parameters(spec, {}, args.samples, threshold, args.seed);
    qrul::analysis::write_essentiality_csv(report, args.out);
    summary["samples"] = args.samples;
    summary["threshold"] = threshold;
    summary["essential"] = report.n_essential();
    summary["total_params"] = static_cast<int>(report.essential.size());
    std::printf("essentiality: %d of %zu parameters essential\n", report.n_essential(),
                report.essential.size());
  } else if (args.what == "equivalence") {
    json results = json::array();
    if (!args.candidate_file.empty()) {
      const auto candidate = qrul::qsim::CircuitSpec::from_json(read_file(args.candidate_file));
      qrul::analysis::ParamMap map = qrul::analysis::ParamMap::identity(candidate.n_param_slots);
      if (!args.map_file.empty()) {
        const json mj = json::parse(read_file(args.map_file));
        map.src = mj.at("src").get<std::vector<int>>();
        map.sign = mj.at("sign").get<std::vector<double>>();
        map.offset = mj.at("offset").get<std::vector<double>>();
      }
      const bool ok =
          qrul::analysis::verify_reduction(spec, candidate, map, args.trials, args.seed);
      results.push_back({{"candidate", args.candidate_file}, {"equivalent", ok}});
      std::printf("equivalence(%s): %s\n", args.candidate_file.c_str(), ok ? "true" : "false");
    } else {
      // built-in demonstrations: a commuting rewrite and a broken variant
      qrul::qsim::CircuitSpec commuted = spec;
      for (std::size_t i = 0; i + 1 < commuted.gates.size(); ++i) {
        if (commuted.gates[i].kind == qrul::qsim::GateKind::RZ &&
            commuted.gates[i + 1].kind == qrul::qsim::GateKind::RZ &&
            commuted.gates[i].target != commuted.gates[i + 1].target) {
          std::swap(commuted.gates[i], commuted.gates[i + 1]);
          break;
        }
      }
      qrul::qsim::CircuitSpec dropped = spec;
      for (std::size_t i = 0; i < dropped.gates.size(); ++i) {
        if (dropped.gates[i].kind == qrul::qsim::GateKind::CNOT) {
          dropped.gates.erase(dropped.gates.begin() + static_cast<std::ptrdiff_t>(i));
          break;
        }
      }
      const auto id = qrul::analysis::ParamMap::identity(spec.n_param_slots);
      const bool ok1 = qrul::analysis::verify_reduction(spec, commuted, id, args.trials, args.seed);
      const bool ok2 = qrul::analysis::verify_reduction(spec, dropped, id, args.trials, args.seed);
      results.push_back({{"candidate", "commuted-rz"}, {"equivalent", ok1}});
      results.push_back({{"candidate", "cnot-dropped"}, {"equivalent", ok2}});
      std::printf("equivalence(commuted-rz): %s\n", ok1 ? "true" : "false");
      std::printf("equivalence(cnot-dropped): %s\n", ok2 ? "true" : "false");
    }
    summary["results"] = std::move(results);
    summary["trials"] = args.trials;
  } else {
    throw qrul::InputError("unknown analysis '" + args.what +
                           "' (expected fisher|fourier|essentiality|equivalence)");
  }

  write_file(fs::path(args.out) / "summary.json", summary.dump(2) + "\n");
  json manifest;
  manifest["command"] = "analyze";
  manifest["what"] = args.what;
  manifest["seed"] = args.seed;
  manifest["jobs"] = qrul::max_threads();
  write_manifest(args.out, std::move(manifest));
  return 0;
}

struct SynthArgs {
  std::string out = "data";
  qrul::data::SynthOptions opts;
};

int run_synth(const SynthArgs& args) {
  qrul::data::write_synthetic_cmapss(args.out, args.opts);
  std::printf("synthetic FD001-shaped files written to %s (train/test/RUL)\n", args.out.c_str());
  std::printf("note: synthetic stand-in for local runs; benchmark numbers require the real "
              "C-MAPSS files\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid quantum-classical RUL forecasting on C-MAPSS FD001"};
  app.set_version_flag("--version", kVersion);
  int jobs = 0;
  app.add_option("--jobs", jobs, "worker threads for parallel kernels (default: all cores)");

  PrepareArgs prep;
  auto* prepare = app.add_subcommand("prepare", "parse raw files, scale, label, window, cache");
  prepare->add_option("--data-dir", prep.data_dir, "directory with train/test/RUL files")
      ->envname("QRUL_DATA_DIR");
  prepare->add_option("--subset", prep.subset, "dataset subset name (default FD001)");
  prepare->add_option("--window", prep.opts.window, "window length in cycles (default 30)");
  prepare->add_option("--early-rul", prep.opts.early_rul, "piecewise-linear cap (default 125)");
  prepare->add_option("--val-fraction", prep.opts.val_fraction,
                      "fraction of engines held out for validation (default 0.2)");
  prepare->add_flag("--no-rul-cap", prep.no_rul_cap, "leave test targets uncapped");
  prepare->add_option("--max-units", prep.opts.max_units, "use only the first N train engines");
  prepare->add_option("--degradation", prep.opts.degradation,
                      "labeling model: piecewise (default) or linear");
  prepare->add_option("--out", prep.out, "cache file to write (default dataset.cache)");
  prepare->add_option("--seed", prep.opts.seed, "validation split seed")
      ->trigger_on_parse()
      ->each([&](const std::string&) { prep.seed_given = true; });

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train a model over one or more seeds");
  train_cmd->add_option("--cache", tr.cache, "dataset cache from prepare");
  train_cmd->add_option("--model", tr.model, "hqrnn or rnn")->check(CLI::IsMember({"hqrnn", "rnn"}));
  train_cmd->add_option("--config", tr.config_file, "model config JSON file");
  train_cmd->add_option("--name", tr.rnn_name, "baseline shorthand, e.g. RNN-20-16-4-8-16");
  train_cmd->add_option("--seeds", tr.seeds, "number of seeds (default 1)");
  train_cmd->add_option("--epochs", tr.epochs, "training epochs (default 20)");
  train_cmd->add_option("--batch", tr.batch, "batch size (default 128)");
  train_cmd->add_option("--lr", tr.lr, "learning rate (default 0.001)");
  train_cmd->add_flag("--clip", tr.clip, "clip predictions to [0, 125] at evaluation");
  train_cmd->add_option("--out", tr.out, "run directory (default runs/run)");
  train_cmd->add_option("--seed", tr.seed, "base seed; seed k of N is base+k")
      ->trigger_on_parse()
      ->each([&](const std::string&) { tr.seed_given = true; });

  EvaluateArgs ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "re-evaluate run checkpoints on the test set");
  eval_cmd->add_option("--run", ev.run, "run directory")->required();
  eval_cmd->add_option("--cache", ev.cache, "dataset cache");
  eval_cmd->add_flag("--clip", ev.clip, "clip predictions to [0, 125]");

  ReportArgs rep;
  auto* report_cmd = app.add_subcommand("report", "aggregate runs into a comparison table");
  report_cmd->add_option("--runs", rep.runs, "run directories");
  report_cmd->add_option("--out", rep.out, "directory for report.csv / report.json");

  AnalyzeArgs an;
  auto* analyze_cmd = app.add_subcommand("analyze", "quantum-layer diagnostics");
  analyze_cmd
      ->add_option("--what", an.what, "fisher | fourier | essentiality | equivalence")
      ->required();
  analyze_cmd->add_option("--out", an.out, "output directory (default analysis)");
  analyze_cmd->add_option("--samples", an.samples, "random draws (fourier/essentiality)");
  analyze_cmd->add_option("--threshold", an.threshold,
                          "accessibility/essentiality threshold (defaults 1e-6 / 1e-4)");
  analyze_cmd->add_option("--n-theta", an.n_theta, "fisher: parameter draws (default 100)");
  analyze_cmd->add_option("--n-x", an.n_x, "fisher: feature samples per draw (default 100)");
  analyze_cmd->add_option("--qubit", an.qubit,
                          "fourier output qubit 0..3; -1 pools all outputs (default)");
  analyze_cmd->add_option("--n-reps", an.n_reps, "repetitions of the encoding block (default 1)");
  analyze_cmd->add_option("--trials", an.trials, "equivalence: random trials (default 20)");
  analyze_cmd->add_option("--circuit", an.circuit_file, "circuit JSON instead of the built-in");
  analyze_cmd->add_option("--candidate", an.candidate_file, "equivalence: candidate circuit JSON");
  analyze_cmd->add_option("--map", an.map_file, "equivalence: parameter map JSON");
  analyze_cmd->add_option("--dump-circuit", an.dump_circuit, "write the analyzed circuit as JSON");
  analyze_cmd->add_option("--seed", an.seed, "draw seed")
      ->trigger_on_parse()
      ->each([&](const std::string&) { an.seed_given = true; });

  SynthArgs sy;
  auto* synth_cmd =
      app.add_subcommand("synth-data", "generate a seeded synthetic FD001-shaped fixture");
  synth_cmd->add_option("--out", sy.out, "output directory (default data)");
  synth_cmd->add_option("--seed", sy.opts.seed, "generator seed (default 2024)");
  synth_cmd->add_option("--train-units", sy.opts.n_train_units, "train engines (default 100)");
  synth_cmd->add_option("--test-units", sy.opts.n_test_units, "test engines (default 100)");

  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  qrul::set_max_threads(jobs);

  try {
    if (prepare->parsed()) return run_prepare(prep);
    if (train_cmd->parsed()) return run_train(tr);
    if (eval_cmd->parsed()) return run_evaluate(ev);
    if (report_cmd->parsed()) return run_report(rep);
    if (analyze_cmd->parsed()) return run_analyze(an);
    if (synth_cmd->parsed()) return run_synth(sy);
  } catch (const qrul::NumericError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const qrul::InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
