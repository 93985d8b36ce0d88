#pragma once

#include <cstdint>
#include <string>

// Seeded generator for an FD001-shaped fixture: same file layout, column
// count, constant-sensor pattern, and run-length profile as the real subset,
// with a smooth wear signal so models have something to learn. Used by tests
// and smoke runs when the real dataset is not on disk; it is not a substitute
// for benchmarking against the real data.
namespace qrul::data {

struct SynthOptions {
  int n_train_units = 100;
  int n_test_units = 100;
  std::uint64_t seed = 2024;
  int min_len = 128;  // one train engine gets exactly this run length
  int max_len = 320;
};

// Writes train_FD001.txt, test_FD001.txt, RUL_FD001.txt into `dir`.
void write_synthetic_cmapss(const std::string& dir, const SynthOptions& opts = {});

}  // namespace qrul::data
