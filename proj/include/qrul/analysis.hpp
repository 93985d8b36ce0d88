#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qrul/mat.hpp"
#include "qrul/qsim.hpp"

// Quantitative diagnostics of the quantum layer: Fisher information matrix
// and spectrum, Fourier spectrum and accessibility over the {-1,0,1}^4
// frequency lattice, per-parameter essentiality, and numerical verification
// of circuit rewrites up to global phase.
namespace qrul::analysis {

// Fisher information at one parameter point, averaged over the given feature
// samples. The outcome model is the exact joint Y-basis distribution (16
// outcomes for 4 qubits) with exact probability gradients; outcomes below
// prob_floor are skipped.
Mat fim_at(const qsim::CircuitSpec& spec, std::span<const double> theta,
           const std::vector<std::vector<double>>& x_samples, double prob_floor = 1e-12);

std::vector<double> sym_eigenvalues(const Mat& m);  // ascending

struct FimSpectrumOptions {
  int n_theta = 100;
  int n_x = 100;
  std::uint64_t seed = 1;
};

struct FimSpectrum {
  std::vector<double> eigenvalues;  // pooled across draws
  Mat avg_normalized;               // mean of per-draw trace-normalized FIMs
  double near_zero_fraction = 0.0;  // eigenvalues below 1e-3 x per-draw max
  int n_draws = 0;
  int n_skipped = 0;  // zero-trace draws excluded from the average
  FimSpectrumOptions opts;
};

// theta ~ U[-pi,pi]^P per draw, features ~ N(0,1) per sample.
FimSpectrum fim_spectrum(const qsim::CircuitSpec& spec, const FimSpectrumOptions& opts = {});

// Coefficients of f(x) = <Y_qubit> over the frequency lattice {-1,0,1}^4,
// computed by discrete Fourier projection on a K^4 grid (K = 5 by default,
// above the Nyquist rate for single-encoding circuits).
struct FourierSpectrum {
  std::vector<std::complex<double>> coeffs;  // 81 entries

  static constexpr int kNumFreqs = 81;
  static constexpr int kNumComponents = 161;  // 81 real parts + 80 imaginary parts
  static constexpr int kZeroIndex = 40;       // omega = (0,0,0,0)

  static std::array<int, 4> freq_of(int index);
  static int index_of(const std::array<int, 4>& freq);

  // 81 real parts followed by the 80 imaginary parts (omega = 0 excluded).
  std::vector<double> real_components() const;
};

FourierSpectrum fourier_spectrum(const qsim::CircuitSpec& spec, std::span<const double> theta,
                                 int qubit, int grid_k = 5);

struct AccessibilityReport {
  int accessible = 0;
  int total = FourierSpectrum::kNumComponents;
  double threshold = 1e-6;
  int n_samples = 0;
  std::uint64_t seed = 0;
  int qubit = -1;                                // -1 = pooled over all outputs
  std::vector<double> mean_abs;                  // per component, 161
  std::vector<double> mean_abs_re, mean_abs_im;  // per frequency, 81 each
  std::vector<double> mean_abs_coeff;            // mean |c(w)| per frequency, 81
  std::vector<int> per_qubit_accessible;         // one entry per analyzed qubit
};

// Mean absolute component value over random theta draws; a component is
// accessible when that mean exceeds the threshold. qubit = -1 pools the
// layer's outputs: a component counts as accessible when it is accessible
// for at least one measured qubit. Individual qubits have structurally
// restricted frequency support (the CNOT ring dresses each observable
// differently), so the pooled count is the layer-level expressivity figure.
AccessibilityReport accessibility_count(const qsim::CircuitSpec& spec, int n_samples = 1000,
                                        double threshold = 1e-6, std::uint64_t seed = 1,
                                        int qubit = -1);
int count_accessible(std::span<const double> mean_abs, double threshold);

struct EssentialityReport {
  std::vector<double> max_abs_grad;  // per parameter, over draws and measured qubits
  std::vector<bool> essential;
  double threshold = 1e-4;
  int n_samples = 0;
  std::uint64_t seed = 0;

  int n_essential() const;
};

// Random (theta, x) draws, both U[-pi,pi]; a parameter is essential when some
// measured expectation has gradient magnitude above the threshold.
EssentialityReport essential_parameters(const qsim::CircuitSpec& spec,
                                        std::span<const int> measured = {}, int n_samples = 1000,
                                        double threshold = 1e-4, std::uint64_t seed = 1);

// candidate parameter j = sign[j] * original[src[j]] + offset[j]
struct ParamMap {
  std::vector<int> src;
  std::vector<double> sign;
  std::vector<double> offset;

  static ParamMap identity(int n);
  std::vector<double> apply(std::span<const double> original) const;
};

// Compares full unitaries up to global phase on random (theta, x) trials.
bool verify_reduction(const qsim::CircuitSpec& original, const qsim::CircuitSpec& candidate,
                      const ParamMap& map, int n_trials = 20, std::uint64_t seed = 1,
                      double tol = 1e-9);

// CSV emission used by the CLI.
void write_fim_csv(const FimSpectrum& spec, const std::string& dir);
void write_fourier_csv(const AccessibilityReport& report, const std::string& dir);
void write_essentiality_csv(const EssentialityReport& report, const std::string& dir);

}  // namespace qrul::analysis
