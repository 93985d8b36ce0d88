#include "qrul/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "qrul/errors.hpp"
#include "qrul/rng.hpp"

namespace qrul::data {

namespace {

// FD001 keeps 14 of 21 sensors; these seven (0-based) stay constant.
constexpr std::array<int, 7> kConstantSensors = {0, 4, 5, 9, 15, 17, 18};
constexpr std::array<double, 7> kConstantValues = {518.67, 14.62, 21.61, 1.30,
                                                   0.03,   2388.0, 100.0};

struct SensorModel {
  double base;
  double amp;    // total drift over the fault window, signed
  double power;  // wear exponent
  double noise;
};

constexpr std::array<SensorModel, 14> kVarying = {{
    {641.82, 4.2, 1.0, 0.25},   {1589.70, 28.0, 1.3, 2.8},  {1400.60, 35.0, 1.1, 4.0},
    {554.36, -4.5, 1.0, 0.35},  {2388.06, 6.5, 1.4, 0.05},  {9046.19, -90.0, 1.2, 11.0},
    {47.47, 2.4, 1.0, 0.12},    {521.66, -6.1, 1.2, 0.30},  {2388.02, 6.0, 1.5, 0.04},
    {8138.62, -55.0, 1.0, 8.0}, {8.4195, -0.21, 1.3, 0.004}, {392.0, 7.5, 1.1, 0.9},
    {38.86, -1.45, 1.0, 0.08},  {23.3735, -0.85, 1.2, 0.006},
}};

struct EngineProfile {
  int length;        // cycles until failure
  int fault_window;  // cycles of visible degradation before failure
  double bias;       // per-engine offset scale
  double rate;       // per-engine drift scale
};

void write_row(std::ofstream& out, int unit, int cycle, const EngineProfile& p, Rng& rng) {
  const double wear_cycles = static_cast<double>(cycle - (p.length - p.fault_window));
  const double wear = std::clamp(wear_cycles / p.fault_window, 0.0, 1.0);
  char buf[64];
  out << unit << ' ' << cycle;
  std::snprintf(buf, sizeof buf, " %.4f %.4f %.1f", rng.normal() * 0.0015,
                rng.normal() * 0.0004, 100.0);
  out << buf;
  std::size_t vi = 0;
  for (int s = 0; s < 21; ++s) {
    const auto* cs = std::find(kConstantSensors.begin(), kConstantSensors.end(), s);
    double v;
    if (cs != kConstantSensors.end()) {
      v = kConstantValues[static_cast<std::size_t>(cs - kConstantSensors.begin())];
    } else {
      const SensorModel& m = kVarying[vi++];
      v = m.base + p.bias * m.noise + p.rate * m.amp * std::pow(wear, m.power) +
          m.noise * 0.6 * rng.normal();
    }
    std::snprintf(buf, sizeof buf, " %.4f", v);
    out << buf;
  }
  out << '\n';
}

EngineProfile draw_profile(Rng& rng, const SynthOptions& opts) {
  EngineProfile p;
  const double u = rng.uniform();
  p.length = opts.min_len + static_cast<int>(std::pow(u, 1.3) *
                                             static_cast<double>(opts.max_len - opts.min_len));
  p.fault_window = 90 + static_cast<int>(rng.below(36));
  p.bias = rng.normal();
  p.rate = 0.85 + 0.3 * rng.uniform();
  return p;
}

}  // namespace

void write_synthetic_cmapss(const std::string& dir, const SynthOptions& opts) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  {
    std::ofstream out(fs::path(dir) / "train_FD001.txt");
    if (!out) throw InputError("synth: cannot write into " + dir);
    for (int unit = 1; unit <= opts.n_train_units; ++unit) {
      Rng rng = Rng::stream(opts.seed, 0x51A7, static_cast<std::uint64_t>(unit));
      EngineProfile p = draw_profile(rng, opts);
      if (unit == 1) p.length = opts.min_len;  // pin the minimum run length
      for (int cycle = 1; cycle <= p.length; ++cycle) write_row(out, unit, cycle, p, rng);
    }
  }

  std::ofstream test_out(fs::path(dir) / "test_FD001.txt");
  std::ofstream rul_out(fs::path(dir) / "RUL_FD001.txt");
  if (!test_out || !rul_out) throw InputError("synth: cannot write into " + dir);
  for (int unit = 1; unit <= opts.n_test_units; ++unit) {
    Rng rng = Rng::stream(opts.seed, 0x7E57, static_cast<std::uint64_t>(unit));
    const EngineProfile p = draw_profile(rng, opts);
    // truncate before failure; keep at least 31 recorded cycles
    int true_rul = 10 + static_cast<int>(rng.below(131));
    true_rul = std::min(true_rul, p.length - 31);
    const int recorded = p.length - true_rul;
    for (int cycle = 1; cycle <= recorded; ++cycle) write_row(test_out, unit, cycle, p, rng);
    rul_out << true_rul << '\n';
  }
}

}  // namespace qrul::data
