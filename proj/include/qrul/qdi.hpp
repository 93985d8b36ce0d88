#pragma once

#include <span>
#include <vector>

#include "qrul/qsim.hpp"

// The 4-qubit depth-infused circuit used inside each QLSTM gate: a trainable
// RX block plus CNOT ring, then a repeated section of RZ data encoding,
// trainable RX block, and CNOT ring. Readout is <Y> on every qubit.
//
// The CNOT ring is fixed as (0->1)(1->2)(2->3)(3->0) and is identical in the
// initial and repeated blocks. Data slots are shared across repetitions
// (re-uploading); features enter RZ as raw angles, without squashing.
namespace qrul::qdi {

struct QdiLayout {
  int n_qubits = 4;
  int n_reps = 1;

  int n_params() const { return n_qubits * (1 + n_reps); }
  int n_features() const { return n_qubits; }
};

struct QdiParams {
  std::vector<double> angles;  // 8 for the default layout: 4 initial + 4 repeated

  static QdiParams zeros(const QdiLayout& layout = {});
};

qsim::CircuitSpec build_qdi_circuit(const QdiLayout& layout = {});

// The default n_reps = 1 circuit, built once.
const qsim::CircuitSpec& default_circuit();

// <Y_k> per qubit, each in [-1, 1]. `angles` length must equal the spec's
// param slot count and `features` its data slot count; non-finite input is an
// error.
std::vector<double> qdi_forward(const qsim::CircuitSpec& spec, std::span<const double> angles,
                                std::span<const double> features);
std::vector<double> qdi_forward(const QdiParams& params, std::span<const double> features);

struct QdiBackward {
  std::vector<double> grad_params;
  std::vector<double> grad_features;
};

// Chain rule through the circuit: grad_params = J^T upstream and
// grad_features = J_data^T upstream, with exact jacobians.
QdiBackward qdi_backward(const qsim::CircuitSpec& spec, std::span<const double> angles,
                         std::span<const double> features, std::span<const double> upstream);
QdiBackward qdi_backward(const QdiParams& params, std::span<const double> features,
                         std::span<const double> upstream);

}  // namespace qrul::qdi
