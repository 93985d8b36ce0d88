#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "qrul/mat.hpp"

// Dense statevector simulation of few-qubit parameterized circuits with exact
// expectation values, exact adjoint-mode gradients, and unitary extraction.
//
// Convention: qubit 0 is the most significant bit of the basis-state index,
// so for two qubits |10> has index 2.
namespace qrul::qsim {

using cdouble = std::complex<double>;

enum class GateKind { RX, RZ, CNOT };
enum class AngleSource { Fixed, Param, Data };

struct GateOp {
  GateKind kind = GateKind::RX;
  int target = 0;
  int control = -1;  // CNOT only
  AngleSource source = AngleSource::Fixed;
  int slot = -1;
  double fixed_angle = 0.0;

  static GateOp rx_param(int qubit, int slot) {
    return {GateKind::RX, qubit, -1, AngleSource::Param, slot, 0.0};
  }
  static GateOp rx_fixed(int qubit, double angle) {
    return {GateKind::RX, qubit, -1, AngleSource::Fixed, -1, angle};
  }
  static GateOp rz_param(int qubit, int slot) {
    return {GateKind::RZ, qubit, -1, AngleSource::Param, slot, 0.0};
  }
  static GateOp rz_data(int qubit, int slot) {
    return {GateKind::RZ, qubit, -1, AngleSource::Data, slot, 0.0};
  }
  static GateOp rz_fixed(int qubit, double angle) {
    return {GateKind::RZ, qubit, -1, AngleSource::Fixed, -1, angle};
  }
  static GateOp cnot(int control, int target) {
    return {GateKind::CNOT, target, control, AngleSource::Fixed, -1, 0.0};
  }

  bool parameterized() const { return kind != GateKind::CNOT && source != AngleSource::Fixed; }
};

struct CircuitSpec {
  int n_qubits = 0;
  std::vector<GateOp> gates;
  int n_param_slots = 0;
  int n_data_slots = 0;

  // Throws std::invalid_argument on out-of-range indices, malformed gates, or
  // param slots never referenced by any gate.
  void validate() const;

  std::string to_json() const;
  static CircuitSpec from_json(const std::string& text);
};

struct StateVector {
  int n_qubits = 0;
  std::vector<cdouble> amps;

  static StateVector zero_state(int n_qubits);
  double norm_sq() const;
};

double resolve_angle(const GateOp& gate, std::span<const double> params,
                     std::span<const double> data);

void apply_gate_inplace(StateVector& state, const GateOp& gate, double angle = 0.0);
StateVector apply_gate(const StateVector& state, const GateOp& gate, double angle = 0.0);

StateVector run_circuit(const CircuitSpec& spec, std::span<const double> params,
                        std::span<const double> data = {});

// <Y> on one qubit, in [-1, 1].
double expectation_y(const StateVector& state, int qubit);

// Probabilities of the 2^n joint outcomes with every qubit measured in the
// Pauli-Y eigenbasis; bit 0 at a qubit's position means the +1 outcome.
std::vector<double> y_basis_distribution(const StateVector& state);

// Exact adjoint-mode derivatives of the Pauli-Y expectations on `measured`
// qubits (all qubits when empty). Rows follow the measured-qubit order,
// columns the slot index; slots bound to several gates accumulate.
struct YJacobians {
  std::vector<double> values;  // expectation per measured qubit
  Mat by_param;
  Mat by_data;
};
YJacobians y_jacobians(const CircuitSpec& spec, std::span<const double> params,
                       std::span<const double> data = {}, std::span<const int> measured = {});

Mat circuit_jacobian(const CircuitSpec& spec, std::span<const double> params,
                     std::span<const double> data = {}, std::span<const int> measured = {});
Mat circuit_data_jacobian(const CircuitSpec& spec, std::span<const double> params,
                          std::span<const double> data = {}, std::span<const int> measured = {});

// Joint Y-basis outcome probabilities and their exact parameter derivatives,
// one row per outcome. Used by the Fisher information analysis.
struct ProbJacobians {
  std::vector<double> probs;
  Mat by_param;
};
ProbJacobians y_distribution_jacobian(const CircuitSpec& spec, std::span<const double> params,
                                      std::span<const double> data = {});

// Full circuit unitary; column b is the circuit applied to basis state |b>.
CMat unitary_of(const CircuitSpec& spec, std::span<const double> params,
                std::span<const double> data = {});

// True iff |trace(U^dag V)| / dim >= 1 - tol.
bool equivalent_up_to_phase(const CMat& u, const CMat& v, double tol);

}  // namespace qrul::qsim
