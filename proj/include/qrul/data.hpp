#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qrul/errors.hpp"

// C-MAPSS FD001 ingestion: parsing, constant-sensor removal, standard scaling
// fitted on training data only, piecewise-linear RUL labels, and sliding
// windows for train/validation/test.
namespace qrul::data {

struct RawRecord {
  int unit = 0;
  int cycle = 0;
  std::array<double, 3> op_settings{};
  std::array<double, 21> sensors{};
};

struct ParseError : InputError {
  int line;
  ParseError(int line_no, const std::string& msg)
      : InputError("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
};

// Whitespace-separated rows of 26 numeric columns, returned sorted by
// (unit, cycle) with strictly increasing cycles per unit.
std::vector<RawRecord> parse_cmapss(std::istream& in);
void serialize_records(std::span<const RawRecord> records, std::ostream& out);

struct ChannelMask {
  std::vector<int> kept;  // sensor indices, 0-based, ascending
};

// Sensors whose training-set standard deviation exceeds the threshold;
// operational settings are never considered.
ChannelMask drop_constant_sensors(std::span<const RawRecord> train, double std_threshold = 1e-8);

struct ScalerStats {
  std::vector<double> mean;    // per kept channel
  std::vector<double> stddev;  // population std
};

ScalerStats fit_scaler(std::span<const RawRecord> train, const ChannelMask& mask);

struct UnitSeries {
  int unit = 0;
  int length = 0;
  int n_channels = 0;
  std::vector<double> rows;  // length x n_channels, row-major
};

std::vector<UnitSeries> apply_scaler(const ScalerStats& stats, const ChannelMask& mask,
                                     std::span<const RawRecord> records);

// RUL(c) = min(early_rul, L - c) for cycle c in [1, L].
std::vector<double> label_piecewise_rul(int length, double early_rul = 125.0);
// RUL(c) = L - c (no cap), kept as an alternative labeling for comparison.
std::vector<double> label_linear_rul(int length);

struct WindowSample {
  int unit = 0;
  int end_cycle = 0;  // cycle of the last row in the window
  double target = 0.0;
  std::vector<double> x;  // window x n_channels, row-major
};

// One sample per start cycle t in [1, L-W]; target is the label at cycle
// t+W, the cycle immediately following the window. Series shorter than W+1
// yield no samples.
std::vector<WindowSample> make_train_windows(const UnitSeries& series,
                                             std::span<const double> labels, int window);

// The final `window` cycles; shorter series are left-padded by repeating the
// earliest row. Target is the provided ground-truth RUL, capped at early_rul
// when `cap` is set.
WindowSample make_test_window(const UnitSeries& series, int window, double true_rul, bool cap,
                              double early_rul);

struct PrepareOptions {
  int window = 30;
  double early_rul = 125.0;
  double val_fraction = 0.2;
  std::uint64_t seed = 1;
  bool cap_test_rul = true;
  double const_threshold = 1e-8;
  int max_units = 0;                       // 0 = all; otherwise first N train units
  std::string degradation = "piecewise";   // "piecewise" or "linear"
};

struct Dataset {
  int window = 30;
  int n_channels = 0;
  double early_rul = 125.0;
  bool rul_capped = true;
  std::uint64_t seed = 1;
  ChannelMask mask;
  ScalerStats stats;
  std::vector<int> val_units;
  std::vector<WindowSample> train, val, test;
  std::array<std::uint64_t, 3> source_hashes{};  // train, test, rul files
  std::vector<std::string> warnings;
  int n_train_units = 0;
  int min_train_run = 0;
};

// Full pipeline. The mask and scaler are fitted on the training file only;
// there is no entry point that fits them on test data. The validation split
// holds out whole engines (seeded shuffle), not windows.
Dataset prepare_dataset(const std::string& train_path, const std::string& test_path,
                        const std::string& rul_path, const PrepareOptions& opts = {});

// Binary cache with header (window, mask, scaler stats, seed, file hashes).
void save_cache(const Dataset& ds, const std::string& path);
Dataset load_cache(const std::string& path);

}  // namespace qrul::data
