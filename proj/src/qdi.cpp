#include "qrul/qdi.hpp"

#include <cmath>
#include <stdexcept>

namespace qrul::qdi {

namespace {

void check_finite(std::span<const double> xs, const char* what) {
  for (double x : xs) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string("qdi: non-finite ") + what);
  }
}

void append_ring(qsim::CircuitSpec& spec, int n) {
  for (int q = 0; q < n; ++q) spec.gates.push_back(qsim::GateOp::cnot(q, (q + 1) % n));
}

}  // namespace

QdiParams QdiParams::zeros(const QdiLayout& layout) {
  return QdiParams{std::vector<double>(static_cast<std::size_t>(layout.n_params()), 0.0)};
}

qsim::CircuitSpec build_qdi_circuit(const QdiLayout& layout) {
  if (layout.n_reps < 1) throw std::invalid_argument("qdi: n_reps must be >= 1");
  const int n = layout.n_qubits;
  qsim::CircuitSpec spec;
  spec.n_qubits = n;
  spec.n_param_slots = layout.n_params();
  spec.n_data_slots = layout.n_features();

  for (int q = 0; q < n; ++q) spec.gates.push_back(qsim::GateOp::rx_param(q, q));
  append_ring(spec, n);
  for (int r = 0; r < layout.n_reps; ++r) {
    for (int q = 0; q < n; ++q) spec.gates.push_back(qsim::GateOp::rz_data(q, q));
    for (int q = 0; q < n; ++q) spec.gates.push_back(qsim::GateOp::rx_param(q, n * (1 + r) + q));
    append_ring(spec, n);
  }
  spec.validate();
  return spec;
}

const qsim::CircuitSpec& default_circuit() {
  static const qsim::CircuitSpec spec = build_qdi_circuit();
  return spec;
}

std::vector<double> qdi_forward(const qsim::CircuitSpec& spec, std::span<const double> angles,
                                std::span<const double> features) {
  check_finite(angles, "angle");
  check_finite(features, "feature");
  const qsim::StateVector psi = qsim::run_circuit(spec, angles, features);
  std::vector<double> out(static_cast<std::size_t>(spec.n_qubits));
  for (int q = 0; q < spec.n_qubits; ++q)
    out[static_cast<std::size_t>(q)] = qsim::expectation_y(psi, q);
  return out;
}

std::vector<double> qdi_forward(const QdiParams& params, std::span<const double> features) {
  return qdi_forward(default_circuit(), params.angles, features);
}

QdiBackward qdi_backward(const qsim::CircuitSpec& spec, std::span<const double> angles,
                         std::span<const double> features, std::span<const double> upstream) {
  check_finite(angles, "angle");
  check_finite(features, "feature");
  if (static_cast<int>(upstream.size()) != spec.n_qubits)
    throw std::invalid_argument("qdi: upstream length must match measured qubit count");

  const qsim::YJacobians jac = qsim::y_jacobians(spec, angles, features);
  QdiBackward out;
  out.grad_params.assign(static_cast<std::size_t>(spec.n_param_slots), 0.0);
  out.grad_features.assign(static_cast<std::size_t>(spec.n_data_slots), 0.0);
  for (int k = 0; k < spec.n_qubits; ++k) {
    const double u = upstream[static_cast<std::size_t>(k)];
    for (int s = 0; s < spec.n_param_slots; ++s)
      out.grad_params[static_cast<std::size_t>(s)] += jac.by_param.at(k, s) * u;
    for (int s = 0; s < spec.n_data_slots; ++s)
      out.grad_features[static_cast<std::size_t>(s)] += jac.by_data.at(k, s) * u;
  }
  return out;
}

QdiBackward qdi_backward(const QdiParams& params, std::span<const double> features,
                         std::span<const double> upstream) {
  return qdi_backward(default_circuit(), params.angles, features, upstream);
}

}  // namespace qrul::qdi
