#include "qrul/qsim.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "json.hpp"

namespace qrul::qsim {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;

std::size_t bit_mask(int n_qubits, int qubit) {
  return std::size_t{1} << (n_qubits - 1 - qubit);
}

void check_angle(double angle) {
  if (!std::isfinite(angle)) throw std::invalid_argument("qsim: non-finite gate angle");
}

void check_qubit(int n_qubits, int qubit, const char* what) {
  if (qubit < 0 || qubit >= n_qubits)
    throw std::invalid_argument(std::string("qsim: ") + what + " qubit index out of range");
}

// in-place RX on the target qubit: [[cos, -i sin], [-i sin, cos]] at angle/2
void apply_rx(std::vector<cdouble>& a, std::size_t mask, double angle) {
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle);
  const cdouble mis{0.0, -s};
  const std::size_t dim = a.size();
  for (std::size_t base = 0; base < dim; base += mask << 1) {
    for (std::size_t k = 0; k < mask; ++k) {
      const std::size_t i = base + k;
      const std::size_t j = i + mask;
      const cdouble ai = a[i];
      const cdouble aj = a[j];
      a[i] = c * ai + mis * aj;
      a[j] = mis * ai + c * aj;
    }
  }
}

// in-place RZ: diag(e^{-i angle/2}, e^{+i angle/2})
void apply_rz(std::vector<cdouble>& a, std::size_t mask, double angle) {
  const cdouble p0{std::cos(0.5 * angle), -std::sin(0.5 * angle)};
  const cdouble p1 = std::conj(p0);
  const std::size_t dim = a.size();
  for (std::size_t base = 0; base < dim; base += mask << 1) {
    for (std::size_t k = 0; k < mask; ++k) {
      const std::size_t i = base + k;
      a[i] *= p0;
      a[i + mask] *= p1;
    }
  }
}

void apply_cnot(std::vector<cdouble>& a, std::size_t cmask, std::size_t tmask) {
  const std::size_t dim = a.size();
  for (std::size_t i = 0; i < dim; ++i) {
    if ((i & cmask) && !(i & tmask)) std::swap(a[i], a[i | tmask]);
  }
}

// applies (-i/2) X_t, the derivative generator of RX
void apply_gen_x(std::vector<cdouble>& a, std::size_t mask) {
  const cdouble half_mi{0.0, -0.5};
  const std::size_t dim = a.size();
  for (std::size_t base = 0; base < dim; base += mask << 1) {
    for (std::size_t k = 0; k < mask; ++k) {
      const std::size_t i = base + k;
      const std::size_t j = i + mask;
      const cdouble ai = a[i];
      a[i] = half_mi * a[j];
      a[j] = half_mi * ai;
    }
  }
}

// applies (-i/2) Z_t, the derivative generator of RZ
void apply_gen_z(std::vector<cdouble>& a, std::size_t mask) {
  const cdouble half_mi{0.0, -0.5};
  const cdouble half_pi{0.0, 0.5};
  const std::size_t dim = a.size();
  for (std::size_t base = 0; base < dim; base += mask << 1) {
    for (std::size_t k = 0; k < mask; ++k) {
      const std::size_t i = base + k;
      a[i] *= half_mi;
      a[i + mask] *= half_pi;
    }
  }
}

void apply_resolved(std::vector<cdouble>& a, int n_qubits, const GateOp& g, double angle) {
  switch (g.kind) {
    case GateKind::RX:
      apply_rx(a, bit_mask(n_qubits, g.target), angle);
      break;
    case GateKind::RZ:
      apply_rz(a, bit_mask(n_qubits, g.target), angle);
      break;
    case GateKind::CNOT:
      apply_cnot(a, bit_mask(n_qubits, g.control), bit_mask(n_qubits, g.target));
      break;
  }
}

// per-qubit change into the Y eigenbasis; row order (+1, -1)
void apply_y_basis_change(std::vector<cdouble>& a, std::size_t mask) {
  const std::size_t dim = a.size();
  for (std::size_t base = 0; base < dim; base += mask << 1) {
    for (std::size_t k = 0; k < mask; ++k) {
      const std::size_t i = base + k;
      const std::size_t j = i + mask;
      const cdouble ai = a[i];
      const cdouble aj = a[j];
      a[i] = kInvSqrt2 * (ai - cdouble{0.0, 1.0} * aj);
      a[j] = kInvSqrt2 * (ai + cdouble{0.0, 1.0} * aj);
    }
  }
}

// inverse of apply_y_basis_change
void apply_y_basis_change_dagger(std::vector<cdouble>& a, std::size_t mask) {
  const std::size_t dim = a.size();
  for (std::size_t base = 0; base < dim; base += mask << 1) {
    for (std::size_t k = 0; k < mask; ++k) {
      const std::size_t i = base + k;
      const std::size_t j = i + mask;
      const cdouble ai = a[i];
      const cdouble aj = a[j];
      a[i] = kInvSqrt2 * (ai + aj);
      a[j] = kInvSqrt2 * (cdouble{0.0, 1.0} * ai - cdouble{0.0, 1.0} * aj);
    }
  }
}

cdouble inner(const std::vector<cdouble>& x, const std::vector<cdouble>& y) {
  cdouble acc{0.0, 0.0};
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::conj(x[i]) * y[i];
  return acc;
}

std::vector<int> default_measured(int n_qubits) {
  std::vector<int> m(static_cast<std::size_t>(n_qubits));
  for (int q = 0; q < n_qubits; ++q) m[static_cast<std::size_t>(q)] = q;
  return m;
}

void check_lengths(const CircuitSpec& spec, std::span<const double> params,
                   std::span<const double> data) {
  if (static_cast<int>(params.size()) != spec.n_param_slots)
    throw std::invalid_argument("qsim: params length does not match n_param_slots");
  if (static_cast<int>(data.size()) != spec.n_data_slots)
    throw std::invalid_argument("qsim: data length does not match n_data_slots");
}

// Shared adjoint sweep. `bras` holds M_k|psi> for the final state; on return
// by_param/by_data hold d<M_k>/d(slot). Exact for RX/RZ rotations.
struct AdjointOut {
  Mat by_param;
  Mat by_data;
};

AdjointOut adjoint_sweep(const CircuitSpec& spec, std::span<const double> params,
                         std::span<const double> data, std::vector<cdouble> ket,
                         std::vector<std::vector<cdouble>> bras) {
  const int n_obs = static_cast<int>(bras.size());
  AdjointOut out;
  out.by_param = Mat(n_obs, spec.n_param_slots);
  out.by_data = Mat(n_obs, spec.n_data_slots);

  std::vector<cdouble> tmp(ket.size());
  for (std::size_t gi = spec.gates.size(); gi-- > 0;) {
    const GateOp& g = spec.gates[gi];
    const double angle = resolve_angle(g, params, data);
    if (g.parameterized()) {
      tmp = ket;
      const std::size_t mask = bit_mask(spec.n_qubits, g.target);
      if (g.kind == GateKind::RX) {
        apply_gen_x(tmp, mask);
      } else {
        apply_gen_z(tmp, mask);
      }
      Mat& dst = g.source == AngleSource::Param ? out.by_param : out.by_data;
      for (int k = 0; k < n_obs; ++k) {
        dst.at(k, g.slot) += 2.0 * inner(bras[static_cast<std::size_t>(k)], tmp).real();
      }
    }
    // un-apply the gate from ket and every bra (CNOT is self-inverse)
    const double inv = g.kind == GateKind::CNOT ? 0.0 : -angle;
    apply_resolved(ket, spec.n_qubits, g, inv);
    for (auto& bra : bras) apply_resolved(bra, spec.n_qubits, g, inv);
  }
  return out;
}

using nlohmann::json;

json gate_to_json(const GateOp& g) {
  json j;
  switch (g.kind) {
    case GateKind::RX:
      j["kind"] = "rx";
      break;
    case GateKind::RZ:
      j["kind"] = "rz";
      break;
    case GateKind::CNOT:
      j["kind"] = "cnot";
      j["control"] = g.control;
      break;
  }
  j["target"] = g.target;
  if (g.kind != GateKind::CNOT) {
    switch (g.source) {
      case AngleSource::Param:
        j["angle"] = {{"param", g.slot}};
        break;
      case AngleSource::Data:
        j["angle"] = {{"data", g.slot}};
        break;
      case AngleSource::Fixed:
        j["angle"] = {{"fixed", g.fixed_angle}};
        break;
    }
  }
  return j;
}

GateOp gate_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "cnot") {
    return GateOp::cnot(j.at("control").get<int>(), j.at("target").get<int>());
  }
  GateOp g;
  g.kind = kind == "rx" ? GateKind::RX : GateKind::RZ;
  if (kind != "rx" && kind != "rz") throw std::invalid_argument("qsim: unknown gate kind " + kind);
  g.target = j.at("target").get<int>();
  const json& a = j.at("angle");
  if (a.contains("param")) {
    g.source = AngleSource::Param;
    g.slot = a.at("param").get<int>();
  } else if (a.contains("data")) {
    g.source = AngleSource::Data;
    g.slot = a.at("data").get<int>();
  } else {
    g.source = AngleSource::Fixed;
    g.fixed_angle = a.at("fixed").get<double>();
  }
  return g;
}

}  // namespace

void CircuitSpec::validate() const {
  if (n_qubits < 1 || n_qubits > 12)
    throw std::invalid_argument("qsim: n_qubits must be in [1, 12]");
  if (n_param_slots < 0 || n_data_slots < 0)
    throw std::invalid_argument("qsim: negative slot count");
  std::vector<bool> param_used(static_cast<std::size_t>(n_param_slots), false);
  for (const GateOp& g : gates) {
    check_qubit(n_qubits, g.target, "target");
    if (g.kind == GateKind::CNOT) {
      check_qubit(n_qubits, g.control, "control");
      if (g.control == g.target)
        throw std::invalid_argument("qsim: CNOT control equals target");
    } else {
      if (g.control != -1) throw std::invalid_argument("qsim: rotation gate with control");
      if (g.source == AngleSource::Param) {
        if (g.slot < 0 || g.slot >= n_param_slots)
          throw std::invalid_argument("qsim: param slot out of range");
        param_used[static_cast<std::size_t>(g.slot)] = true;
      } else if (g.source == AngleSource::Data) {
        if (g.slot < 0 || g.slot >= n_data_slots)
          throw std::invalid_argument("qsim: data slot out of range");
      }
    }
  }
  for (int s = 0; s < n_param_slots; ++s) {
    if (!param_used[static_cast<std::size_t>(s)])
      throw std::invalid_argument("qsim: param slot " + std::to_string(s) +
                                  " is not referenced by any gate");
  }
}

std::string CircuitSpec::to_json() const {
  json j;
  j["n_qubits"] = n_qubits;
  j["n_param_slots"] = n_param_slots;
  j["n_data_slots"] = n_data_slots;
  j["gates"] = json::array();
  for (const GateOp& g : gates) j["gates"].push_back(gate_to_json(g));
  return j.dump(2);
}

CircuitSpec CircuitSpec::from_json(const std::string& text) {
  json j = json::parse(text);
  CircuitSpec spec;
  spec.n_qubits = j.at("n_qubits").get<int>();
  spec.n_param_slots = j.at("n_param_slots").get<int>();
  spec.n_data_slots = j.at("n_data_slots").get<int>();
  for (const json& gj : j.at("gates")) spec.gates.push_back(gate_from_json(gj));
  spec.validate();
  return spec;
}

StateVector StateVector::zero_state(int n_qubits) {
  StateVector s;
  s.n_qubits = n_qubits;
  s.amps.assign(std::size_t{1} << n_qubits, cdouble{0.0, 0.0});
  s.amps[0] = cdouble{1.0, 0.0};
  return s;
}

double StateVector::norm_sq() const {
  double acc = 0.0;
  for (const cdouble& a : amps) acc += std::norm(a);
  return acc;
}

double resolve_angle(const GateOp& gate, std::span<const double> params,
                     std::span<const double> data) {
  double angle = 0.0;
  switch (gate.source) {
    case AngleSource::Fixed:
      angle = gate.fixed_angle;
      break;
    case AngleSource::Param:
      angle = params[static_cast<std::size_t>(gate.slot)];
      break;
    case AngleSource::Data:
      angle = data[static_cast<std::size_t>(gate.slot)];
      break;
  }
  if (gate.kind != GateKind::CNOT) check_angle(angle);
  return angle;
}

void apply_gate_inplace(StateVector& state, const GateOp& gate, double angle) {
  check_qubit(state.n_qubits, gate.target, "target");
  if (gate.kind == GateKind::CNOT) {
    check_qubit(state.n_qubits, gate.control, "control");
    if (gate.control == gate.target)
      throw std::invalid_argument("qsim: CNOT control equals target");
  } else {
    check_angle(angle);
  }
  apply_resolved(state.amps, state.n_qubits, gate, angle);
}

StateVector apply_gate(const StateVector& state, const GateOp& gate, double angle) {
  StateVector out = state;
  apply_gate_inplace(out, gate, angle);
  return out;
}

StateVector run_circuit(const CircuitSpec& spec, std::span<const double> params,
                        std::span<const double> data) {
  check_lengths(spec, params, data);
  StateVector state = StateVector::zero_state(spec.n_qubits);
  for (const GateOp& g : spec.gates) {
    apply_resolved(state.amps, spec.n_qubits, g, resolve_angle(g, params, data));
  }
  return state;
}

double expectation_y(const StateVector& state, int qubit) {
  check_qubit(state.n_qubits, qubit, "measured");
  const std::size_t mask = bit_mask(state.n_qubits, qubit);
  const std::size_t dim = state.amps.size();
  double acc = 0.0;
  for (std::size_t base = 0; base < dim; base += mask << 1) {
    for (std::size_t k = 0; k < mask; ++k) {
      const std::size_t i = base + k;
      acc += 2.0 * (std::conj(state.amps[i]) * state.amps[i + mask]).imag();
    }
  }
  return acc;
}

std::vector<double> y_basis_distribution(const StateVector& state) {
  std::vector<cdouble> a = state.amps;
  for (int q = 0; q < state.n_qubits; ++q) apply_y_basis_change(a, bit_mask(state.n_qubits, q));
  std::vector<double> probs(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) probs[i] = std::norm(a[i]);
  return probs;
}

YJacobians y_jacobians(const CircuitSpec& spec, std::span<const double> params,
                       std::span<const double> data, std::span<const int> measured) {
  std::vector<int> meas_storage;
  if (measured.empty()) {
    meas_storage = default_measured(spec.n_qubits);
    measured = meas_storage;
  }
  StateVector psi = run_circuit(spec, params, data);

  YJacobians out;
  out.values.reserve(measured.size());
  std::vector<std::vector<cdouble>> bras;
  bras.reserve(measured.size());
  for (int q : measured) {
    check_qubit(spec.n_qubits, q, "measured");
    // bra = Y_q |psi>
    std::vector<cdouble> bra(psi.amps.size());
    const std::size_t mask = bit_mask(spec.n_qubits, q);
    for (std::size_t base = 0; base < bra.size(); base += mask << 1) {
      for (std::size_t k = 0; k < mask; ++k) {
        const std::size_t i = base + k;
        const std::size_t j = i + mask;
        bra[i] = cdouble{0.0, -1.0} * psi.amps[j];
        bra[j] = cdouble{0.0, 1.0} * psi.amps[i];
      }
    }
    out.values.push_back(inner(psi.amps, bra).real());
    bras.push_back(std::move(bra));
  }

  AdjointOut adj = adjoint_sweep(spec, params, data, std::move(psi.amps), std::move(bras));
  out.by_param = std::move(adj.by_param);
  out.by_data = std::move(adj.by_data);
  return out;
}

Mat circuit_jacobian(const CircuitSpec& spec, std::span<const double> params,
                     std::span<const double> data, std::span<const int> measured) {
  return y_jacobians(spec, params, data, measured).by_param;
}

Mat circuit_data_jacobian(const CircuitSpec& spec, std::span<const double> params,
                          std::span<const double> data, std::span<const int> measured) {
  return y_jacobians(spec, params, data, measured).by_data;
}

ProbJacobians y_distribution_jacobian(const CircuitSpec& spec, std::span<const double> params,
                                      std::span<const double> data) {
  StateVector psi = run_circuit(spec, params, data);
  const std::size_t dim = psi.amps.size();

  // phi = B |psi> with B the tensor product of per-qubit Y-basis changes
  std::vector<cdouble> phi = psi.amps;
  for (int q = 0; q < spec.n_qubits; ++q) apply_y_basis_change(phi, bit_mask(spec.n_qubits, q));

  ProbJacobians out;
  out.probs.resize(dim);
  std::vector<std::vector<cdouble>> bras(dim);
  for (std::size_t y = 0; y < dim; ++y) {
    out.probs[y] = std::norm(phi[y]);
    // bra_y = B^dag |y><y| B |psi>
    std::vector<cdouble> bra(dim, cdouble{0.0, 0.0});
    bra[y] = phi[y];
    for (int q = 0; q < spec.n_qubits; ++q)
      apply_y_basis_change_dagger(bra, bit_mask(spec.n_qubits, q));
    bras[y] = std::move(bra);
  }

  AdjointOut adj = adjoint_sweep(spec, params, data, std::move(psi.amps), std::move(bras));
  out.by_param = std::move(adj.by_param);
  return out;
}

CMat unitary_of(const CircuitSpec& spec, std::span<const double> params,
                std::span<const double> data) {
  check_lengths(spec, params, data);
  const int dim = 1 << spec.n_qubits;
  CMat u(dim, dim);
  std::vector<cdouble> col(static_cast<std::size_t>(dim));
  for (int b = 0; b < dim; ++b) {
    std::fill(col.begin(), col.end(), cdouble{0.0, 0.0});
    col[static_cast<std::size_t>(b)] = cdouble{1.0, 0.0};
    for (const GateOp& g : spec.gates) {
      apply_resolved(col, spec.n_qubits, g, resolve_angle(g, params, data));
    }
    for (int r = 0; r < dim; ++r) u.at(r, b) = col[static_cast<std::size_t>(r)];
  }
  return u;
}

bool equivalent_up_to_phase(const CMat& u, const CMat& v, double tol) {
  if (u.rows != v.rows || u.cols != v.cols || u.rows != u.cols)
    throw std::invalid_argument("qsim: dimension mismatch in equivalence check");
  cdouble acc{0.0, 0.0};
  for (std::size_t i = 0; i < u.a.size(); ++i) acc += std::conj(u.a[i]) * v.a[i];
  return std::abs(acc) / static_cast<double>(u.rows) >= 1.0 - tol;
}

}  // namespace qrul::qsim
