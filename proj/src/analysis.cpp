#include "qrul/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "qrul/parallel.hpp"
#include "qrul/rng.hpp"

namespace qrul::analysis {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> random_angles(Rng& rng, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = rng.uniform(-kPi, kPi);
  return v;
}

}  // namespace

Mat fim_at(const qsim::CircuitSpec& spec, std::span<const double> theta,
           const std::vector<std::vector<double>>& x_samples, double prob_floor) {
  if (x_samples.empty()) throw std::invalid_argument("analysis: fim_at needs feature samples");
  const int P = spec.n_param_slots;
  Mat fim(P, P);
  for (const std::vector<double>& x : x_samples) {
    const qsim::ProbJacobians pj = qsim::y_distribution_jacobian(spec, theta, x);
    for (std::size_t y = 0; y < pj.probs.size(); ++y) {
      const double p = pj.probs[y];
      if (p < prob_floor) continue;
      const double* dp = pj.by_param.a.data() + y * static_cast<std::size_t>(P);
      // score s = dp/p; contribution p * s s^T = dp dp^T / p
      for (int i = 0; i < P; ++i) {
        const double di = dp[i] / p;
        for (int j = i; j < P; ++j) fim.at(i, j) += di * dp[j];
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(x_samples.size());
  for (int i = 0; i < P; ++i) {
    for (int j = i; j < P; ++j) {
      const double v = fim.at(i, j) * inv_n;
      fim.at(i, j) = v;
      fim.at(j, i) = v;
    }
  }
  return fim;
}

std::vector<double> sym_eigenvalues(const Mat& m) {
  if (m.rows != m.cols) throw std::invalid_argument("analysis: eigenvalues need a square matrix");
  Eigen::MatrixXd em(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) em(i, j) = m.at(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(em);
  std::vector<double> eigs(static_cast<std::size_t>(m.rows));
  for (int i = 0; i < m.rows; ++i) eigs[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
  return eigs;
}

FimSpectrum fim_spectrum(const qsim::CircuitSpec& spec, const FimSpectrumOptions& opts) {
  if (opts.n_theta < 1 || opts.n_x < 1)
    throw std::invalid_argument("analysis: fim_spectrum counts must be positive");
  const int P = spec.n_param_slots;
  const int D = spec.n_data_slots;

  std::vector<Mat> fims(static_cast<std::size_t>(opts.n_theta));
  parallel_for(opts.n_theta, [&](std::int64_t draw) {
    Rng trng = Rng::stream(opts.seed, 0xF15E01ULL, static_cast<std::uint64_t>(draw));
    const std::vector<double> theta = random_angles(trng, P);
    Rng xrng = Rng::stream(opts.seed, 0xF15E02ULL, static_cast<std::uint64_t>(draw));
    std::vector<std::vector<double>> xs(static_cast<std::size_t>(opts.n_x));
    for (auto& x : xs) {
      x.resize(static_cast<std::size_t>(D));
      for (double& v : x) v = xrng.normal();
    }
    fims[static_cast<std::size_t>(draw)] = fim_at(spec, theta, xs);
  });

  FimSpectrum out;
  out.opts = opts;
  out.n_draws = opts.n_theta;
  out.avg_normalized = Mat(P, P);
  std::size_t near_zero = 0;
  int averaged = 0;
  for (const Mat& fim : fims) {
    const std::vector<double> eigs = sym_eigenvalues(fim);
    const double max_eig = eigs.back();
    for (double e : eigs) {
      out.eigenvalues.push_back(e);
      if (e < 1e-3 * max_eig) ++near_zero;
    }
    double trace = 0.0;
    for (int i = 0; i < P; ++i) trace += fim.at(i, i);
    if (trace < 1e-300) {
      ++out.n_skipped;
      continue;
    }
    for (int i = 0; i < P; ++i)
      for (int j = 0; j < P; ++j) out.avg_normalized.at(i, j) += fim.at(i, j) / trace;
    ++averaged;
  }
  if (averaged > 0) {
    for (double& v : out.avg_normalized.a) v /= static_cast<double>(averaged);
  }
  out.near_zero_fraction =
      static_cast<double>(near_zero) / static_cast<double>(out.eigenvalues.size());
  return out;
}

std::array<int, 4> FourierSpectrum::freq_of(int index) {
  std::array<int, 4> w{};
  for (int d = 3; d >= 0; --d) {
    w[static_cast<std::size_t>(d)] = index % 3 - 1;
    index /= 3;
  }
  return w;
}

int FourierSpectrum::index_of(const std::array<int, 4>& freq) {
  int idx = 0;
  for (int d = 0; d < 4; ++d) idx = idx * 3 + (freq[static_cast<std::size_t>(d)] + 1);
  return idx;
}

std::vector<double> FourierSpectrum::real_components() const {
  std::vector<double> comps;
  comps.reserve(kNumComponents);
  for (const auto& c : coeffs) comps.push_back(c.real());
  for (int i = 0; i < kNumFreqs; ++i) {
    if (i == kZeroIndex) continue;
    comps.push_back(coeffs[static_cast<std::size_t>(i)].imag());
  }
  return comps;
}

namespace {

// f_q on the uniform grid x_d = 2 pi k_d / K, one row per requested qubit;
// a single circuit run serves every readout qubit
std::vector<std::vector<double>> grid_expectations(const qsim::CircuitSpec& spec,
                                                   std::span<const double> theta, int K,
                                                   std::span<const int> qubits) {
  const std::size_t n_grid = static_cast<std::size_t>(K) * K * K * K;
  std::vector<std::vector<double>> f(qubits.size(), std::vector<double>(n_grid));
  std::vector<double> x(4);
  std::size_t g = 0;
  for (int k0 = 0; k0 < K; ++k0)
    for (int k1 = 0; k1 < K; ++k1)
      for (int k2 = 0; k2 < K; ++k2)
        for (int k3 = 0; k3 < K; ++k3) {
          x[0] = 2.0 * kPi * k0 / K;
          x[1] = 2.0 * kPi * k1 / K;
          x[2] = 2.0 * kPi * k2 / K;
          x[3] = 2.0 * kPi * k3 / K;
          const qsim::StateVector psi = qsim::run_circuit(spec, theta, x);
          for (std::size_t qi = 0; qi < qubits.size(); ++qi)
            f[qi][g] = qsim::expectation_y(psi, qubits[qi]);
          ++g;
        }
  return f;
}

FourierSpectrum fourier_from_grid(std::span<const double> f, int K) {
  // e^{-i w x} lookup per (w+1, k)
  std::vector<std::complex<double>> table(3 * static_cast<std::size_t>(K));
  for (int w = -1; w <= 1; ++w)
    for (int k = 0; k < K; ++k)
      table[static_cast<std::size_t>((w + 1) * K + k)] =
          std::polar(1.0, -2.0 * kPi * w * k / K);

  FourierSpectrum out;
  out.coeffs.assign(FourierSpectrum::kNumFreqs, {0.0, 0.0});
  for (int idx = 0; idx < FourierSpectrum::kNumFreqs; ++idx) {
    const std::array<int, 4> w = FourierSpectrum::freq_of(idx);
    std::complex<double> acc{0.0, 0.0};
    std::size_t g = 0;
    for (int k0 = 0; k0 < K; ++k0) {
      const auto e0 = table[static_cast<std::size_t>((w[0] + 1) * K + k0)];
      for (int k1 = 0; k1 < K; ++k1) {
        const auto e01 = e0 * table[static_cast<std::size_t>((w[1] + 1) * K + k1)];
        for (int k2 = 0; k2 < K; ++k2) {
          const auto e012 = e01 * table[static_cast<std::size_t>((w[2] + 1) * K + k2)];
          for (int k3 = 0; k3 < K; ++k3) {
            acc += f[g++] * e012 * table[static_cast<std::size_t>((w[3] + 1) * K + k3)];
          }
        }
      }
    }
    out.coeffs[static_cast<std::size_t>(idx)] = acc / static_cast<double>(f.size());
  }
  return out;
}

}  // namespace

FourierSpectrum fourier_spectrum(const qsim::CircuitSpec& spec, std::span<const double> theta,
                                 int qubit, int grid_k) {
  if (spec.n_data_slots != 4)
    throw std::invalid_argument("analysis: fourier_spectrum expects 4 data slots");
  if (grid_k < 3) throw std::invalid_argument("analysis: grid_k must be >= 3");
  const int qubits[1] = {qubit};
  const auto f = grid_expectations(spec, theta, grid_k, qubits);
  return fourier_from_grid(f[0], grid_k);
}

int count_accessible(std::span<const double> mean_abs, double threshold) {
  int n = 0;
  for (double v : mean_abs)
    if (v > threshold) ++n;
  return n;
}

AccessibilityReport accessibility_count(const qsim::CircuitSpec& spec, int n_samples,
                                        double threshold, std::uint64_t seed, int qubit) {
  if (n_samples < 1) throw std::invalid_argument("analysis: n_samples must be positive");
  if (threshold <= 0.0) throw std::invalid_argument("analysis: threshold must be positive");
  if (qubit >= spec.n_qubits) throw std::invalid_argument("analysis: qubit out of range");

  std::vector<int> qubits;
  if (qubit < 0) {
    for (int q = 0; q < spec.n_qubits; ++q) qubits.push_back(q);
  } else {
    qubits.push_back(qubit);
  }
  const int C = FourierSpectrum::kNumComponents;
  const int F = FourierSpectrum::kNumFreqs;
  const std::size_t n_q = qubits.size();

  // rows[draw][qubit][component]; magnitude rows hold |c(w)| per frequency
  const int K = 5;
  std::vector<double> rows(static_cast<std::size_t>(n_samples) * n_q * C);
  std::vector<double> mag_rows(static_cast<std::size_t>(n_samples) * n_q * F);
  parallel_for(n_samples, [&](std::int64_t draw) {
    Rng rng = Rng::stream(seed, 0xF0F0ULL, static_cast<std::uint64_t>(draw));
    const std::vector<double> theta = random_angles(rng, spec.n_param_slots);
    const auto f = grid_expectations(spec, theta, K, qubits);
    for (std::size_t qi = 0; qi < n_q; ++qi) {
      const FourierSpectrum fs = fourier_from_grid(f[qi], K);
      const std::vector<double> comps = fs.real_components();
      double* row = rows.data() + (static_cast<std::size_t>(draw) * n_q + qi) * C;
      for (int c = 0; c < C; ++c) row[c] = std::abs(comps[static_cast<std::size_t>(c)]);
      double* mrow = mag_rows.data() + (static_cast<std::size_t>(draw) * n_q + qi) * F;
      for (int i = 0; i < F; ++i) mrow[i] = std::abs(fs.coeffs[static_cast<std::size_t>(i)]);
    }
  });

  AccessibilityReport report;
  report.threshold = threshold;
  report.n_samples = n_samples;
  report.seed = seed;
  report.qubit = qubit;

  // mean over draws per qubit, then max across qubits per component
  report.mean_abs.assign(static_cast<std::size_t>(C), 0.0);
  report.mean_abs_coeff.assign(static_cast<std::size_t>(F), 0.0);
  for (std::size_t qi = 0; qi < n_q; ++qi) {
    std::vector<double> mean(static_cast<std::size_t>(C), 0.0);
    std::vector<double> mag(static_cast<std::size_t>(F), 0.0);
    for (int s = 0; s < n_samples; ++s) {
      const double* row = rows.data() + (static_cast<std::size_t>(s) * n_q + qi) * C;
      for (int c = 0; c < C; ++c) mean[static_cast<std::size_t>(c)] += row[c];
      const double* mrow = mag_rows.data() + (static_cast<std::size_t>(s) * n_q + qi) * F;
      for (int i = 0; i < F; ++i) mag[static_cast<std::size_t>(i)] += mrow[i];
    }
    for (double& v : mean) v /= static_cast<double>(n_samples);
    for (double& v : mag) v /= static_cast<double>(n_samples);
    report.per_qubit_accessible.push_back(count_accessible(mean, threshold));
    for (int c = 0; c < C; ++c) {
      report.mean_abs[static_cast<std::size_t>(c)] = std::max(
          report.mean_abs[static_cast<std::size_t>(c)], mean[static_cast<std::size_t>(c)]);
    }
    for (int i = 0; i < F; ++i) {
      report.mean_abs_coeff[static_cast<std::size_t>(i)] =
          std::max(report.mean_abs_coeff[static_cast<std::size_t>(i)],
                   mag[static_cast<std::size_t>(i)]);
    }
  }
  report.accessible = count_accessible(report.mean_abs, threshold);

  report.mean_abs_re.assign(FourierSpectrum::kNumFreqs, 0.0);
  report.mean_abs_im.assign(FourierSpectrum::kNumFreqs, 0.0);
  for (int i = 0; i < FourierSpectrum::kNumFreqs; ++i)
    report.mean_abs_re[static_cast<std::size_t>(i)] = report.mean_abs[static_cast<std::size_t>(i)];
  int c = FourierSpectrum::kNumFreqs;
  for (int i = 0; i < FourierSpectrum::kNumFreqs; ++i) {
    if (i == FourierSpectrum::kZeroIndex) continue;
    report.mean_abs_im[static_cast<std::size_t>(i)] =
        report.mean_abs[static_cast<std::size_t>(c++)];
  }
  return report;
}

int EssentialityReport::n_essential() const {
  int n = 0;
  for (bool e : essential)
    if (e) ++n;
  return n;
}

EssentialityReport essential_parameters(const qsim::CircuitSpec& spec,
                                        std::span<const int> measured, int n_samples,
                                        double threshold, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("analysis: n_samples must be positive");
  const int P = spec.n_param_slots;
  std::vector<int> meas(measured.begin(), measured.end());

  std::vector<double> rows(static_cast<std::size_t>(n_samples) * P, 0.0);
  parallel_for(n_samples, [&](std::int64_t draw) {
    Rng rng = Rng::stream(seed, 0xE55EULL, static_cast<std::uint64_t>(draw));
    const std::vector<double> theta = random_angles(rng, P);
    const std::vector<double> x = random_angles(rng, spec.n_data_slots);
    const Mat jac = qsim::circuit_jacobian(spec, theta, x, meas);
    double* row = rows.data() + static_cast<std::size_t>(draw) * P;
    for (int k = 0; k < jac.rows; ++k)
      for (int p = 0; p < P; ++p)
        row[p] = std::max(row[p], std::abs(jac.at(k, p)));
  });

  EssentialityReport report;
  report.threshold = threshold;
  report.n_samples = n_samples;
  report.seed = seed;
  report.max_abs_grad.assign(static_cast<std::size_t>(P), 0.0);
  for (int s = 0; s < n_samples; ++s) {
    const double* row = rows.data() + static_cast<std::size_t>(s) * P;
    for (int p = 0; p < P; ++p)
      report.max_abs_grad[static_cast<std::size_t>(p)] =
          std::max(report.max_abs_grad[static_cast<std::size_t>(p)], row[p]);
  }
  for (double g : report.max_abs_grad) report.essential.push_back(g > threshold);
  return report;
}

ParamMap ParamMap::identity(int n) {
  ParamMap map;
  for (int i = 0; i < n; ++i) {
    map.src.push_back(i);
    map.sign.push_back(1.0);
    map.offset.push_back(0.0);
  }
  return map;
}

std::vector<double> ParamMap::apply(std::span<const double> original) const {
  std::vector<double> mapped(src.size());
  for (std::size_t j = 0; j < src.size(); ++j) {
    mapped[j] = sign[j] * original[static_cast<std::size_t>(src[j])] + offset[j];
  }
  return mapped;
}

bool verify_reduction(const qsim::CircuitSpec& original, const qsim::CircuitSpec& candidate,
                      const ParamMap& map, int n_trials, std::uint64_t seed, double tol) {
  if (original.n_qubits != candidate.n_qubits)
    throw std::invalid_argument("analysis: qubit count mismatch in verify_reduction");
  if (original.n_data_slots != candidate.n_data_slots)
    throw std::invalid_argument("analysis: data slot mismatch in verify_reduction");
  if (static_cast<int>(map.src.size()) != candidate.n_param_slots)
    throw std::invalid_argument("analysis: param map does not cover candidate slots");

  for (int trial = 0; trial < n_trials; ++trial) {
    Rng rng = Rng::stream(seed, 0xEC41ULL, static_cast<std::uint64_t>(trial));
    const std::vector<double> theta = random_angles(rng, original.n_param_slots);
    const std::vector<double> x = random_angles(rng, original.n_data_slots);
    const std::vector<double> mapped = map.apply(theta);
    const CMat u = qsim::unitary_of(original, theta, x);
    const CMat v = qsim::unitary_of(candidate, mapped, x);
    if (!qsim::equivalent_up_to_phase(u, v, tol)) return false;
  }
  return true;
}

namespace {

std::ofstream open_csv(const std::string& dir, const char* name) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream out(fs::path(dir) / name);
  if (!out) throw std::runtime_error(std::string("analysis: cannot write ") + name);
  return out;
}

}  // namespace

void write_fim_csv(const FimSpectrum& spec, const std::string& dir) {
  {
    std::ofstream out = open_csv(dir, "fisher_eigenvalues.csv");
    out << "draw,index,eigenvalue\n";
    const int P = spec.avg_normalized.rows;
    char buf[96];
    for (std::size_t i = 0; i < spec.eigenvalues.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g\n", i / static_cast<std::size_t>(P),
                    i % static_cast<std::size_t>(P), spec.eigenvalues[i]);
      out << buf;
    }
  }
  {
    std::ofstream out = open_csv(dir, "fisher_avg_matrix.csv");
    char buf[48];
    for (int i = 0; i < spec.avg_normalized.rows; ++i) {
      for (int j = 0; j < spec.avg_normalized.cols; ++j) {
        std::snprintf(buf, sizeof buf, "%s%.17g", j == 0 ? "" : ",", spec.avg_normalized.at(i, j));
        out << buf;
      }
      out << "\n";
    }
  }
  {
    // normalized histogram of the pooled eigenvalues
    std::ofstream out = open_csv(dir, "fisher_histogram.csv");
    out << "bin_lo,bin_hi,count,density\n";
    const int n_bins = 30;
    double max_eig = 0.0;
    for (double e : spec.eigenvalues) max_eig = std::max(max_eig, e);
    if (max_eig <= 0.0) max_eig = 1.0;
    std::vector<int> counts(n_bins, 0);
    for (double e : spec.eigenvalues) {
      int b = static_cast<int>(std::floor(e / max_eig * n_bins));
      b = std::clamp(b, 0, n_bins - 1);
      ++counts[static_cast<std::size_t>(b)];
    }
    const double width = max_eig / n_bins;
    const double total = static_cast<double>(spec.eigenvalues.size());
    char buf[128];
    for (int b = 0; b < n_bins; ++b) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%.17g\n", b * width, (b + 1) * width,
                    counts[static_cast<std::size_t>(b)],
                    counts[static_cast<std::size_t>(b)] / (total * width));
      out << buf;
    }
  }
}

void write_fourier_csv(const AccessibilityReport& report, const std::string& dir) {
  std::ofstream out = open_csv(dir, "fourier_coefficients.csv");
  out << "w0,w1,w2,w3,mean_abs_re,mean_abs_im,mean_abs,accessible_re,accessible_im\n";
  char buf[200];
  for (int i = 0; i < FourierSpectrum::kNumFreqs; ++i) {
    const std::array<int, 4> w = FourierSpectrum::freq_of(i);
    const double re = report.mean_abs_re[static_cast<std::size_t>(i)];
    const double im = report.mean_abs_im[static_cast<std::size_t>(i)];
    const double mag = report.mean_abs_coeff[static_cast<std::size_t>(i)];
    const bool re_ok = re > report.threshold;
    const bool im_ok = i != FourierSpectrum::kZeroIndex && im > report.threshold;
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.17g,%.17g,%.17g,%d,%d\n", w[0], w[1], w[2],
                  w[3], re, im, mag, re_ok ? 1 : 0, im_ok ? 1 : 0);
    out << buf;
  }
}

void write_essentiality_csv(const EssentialityReport& report, const std::string& dir) {
  std::ofstream out = open_csv(dir, "essentiality.csv");
  out << "param,max_abs_grad,essential\n";
  char buf[96];
  for (std::size_t p = 0; p < report.max_abs_grad.size(); ++p) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%d\n", p, report.max_abs_grad[p],
                  report.essential[p] ? 1 : 0);
    out << buf;
  }
}

}  // namespace qrul::analysis
