#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "qrul/qdi.hpp"

using namespace qrul;
using qsim::CircuitSpec;
using qsim::GateKind;

TEST_CASE("build_qdi_circuit structure") {
  SUBCASE("default layout: 8 param slots, 4 data slots, 20 gates") {
    const CircuitSpec spec = qdi::build_qdi_circuit();
    CHECK(spec.n_qubits == 4);
    CHECK(spec.n_param_slots == 8);
    CHECK(spec.n_data_slots == 4);
    CHECK(spec.gates.size() == 20);
    int n_rx = 0, n_rz = 0, n_cnot = 0;
    for (const auto& g : spec.gates) {
      if (g.kind == GateKind::RX) ++n_rx;
      if (g.kind == GateKind::RZ) ++n_rz;
      if (g.kind == GateKind::CNOT) ++n_cnot;
    }
    CHECK(n_rx == 8);
    CHECK(n_rz == 4);
    CHECK(n_cnot == 8);
  }

  SUBCASE("gate order: RX block, ring, then RZ/RX/ring per repetition") {
    const CircuitSpec spec = qdi::build_qdi_circuit();
    for (int i = 0; i < 4; ++i) CHECK(spec.gates[static_cast<std::size_t>(i)].kind == GateKind::RX);
    for (int i = 4; i < 8; ++i)
      CHECK(spec.gates[static_cast<std::size_t>(i)].kind == GateKind::CNOT);
    for (int i = 8; i < 12; ++i)
      CHECK(spec.gates[static_cast<std::size_t>(i)].kind == GateKind::RZ);
    for (int i = 12; i < 16; ++i)
      CHECK(spec.gates[static_cast<std::size_t>(i)].kind == GateKind::RX);
    // ring orientation 0->1, 1->2, 2->3, 3->0
    CHECK(spec.gates[4].control == 0);
    CHECK(spec.gates[4].target == 1);
    CHECK(spec.gates[7].control == 3);
    CHECK(spec.gates[7].target == 0);
  }

  SUBCASE("two repetitions: 12 param slots, still 4 shared data slots") {
    const CircuitSpec spec = qdi::build_qdi_circuit(qdi::QdiLayout{4, 2});
    CHECK(spec.n_param_slots == 12);
    CHECK(spec.n_data_slots == 4);
    int data_refs = 0;
    for (const auto& g : spec.gates)
      if (g.kind == GateKind::RZ && g.source == qsim::AngleSource::Data) ++data_refs;
    CHECK(data_refs == 8);  // each data slot re-encoded once per repetition
  }

  SUBCASE("n_reps must be at least 1") {
    CHECK_THROWS_AS(qdi::build_qdi_circuit(qdi::QdiLayout{4, 0}), std::invalid_argument);
  }
}

TEST_CASE("qdi_forward") {
  const CircuitSpec& spec = qdi::default_circuit();

  SUBCASE("theta = 0 gives identically zero outputs") {
    const std::vector<double> zeros(8, 0.0);
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
      const auto x = oracle::random_vec(rng, 4, -10.0, 10.0);
      for (double y : qdi::qdi_forward(spec, zeros, x)) CHECK(std::abs(y) < 1e-12);
    }
  }

  SUBCASE("outputs stay in [-1, 1]") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
      const auto theta = oracle::random_vec(rng, 8, -50.0, 50.0);
      const auto x = oracle::random_vec(rng, 4, -50.0, 50.0);
      for (double y : qdi::qdi_forward(spec, theta, x)) {
        CHECK(y >= -1.0);
        CHECK(y <= 1.0);
      }
    }
  }

  SUBCASE("matches the dense oracle") {
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
      const auto theta = oracle::random_vec(rng, 8);
      const auto x = oracle::random_vec(rng, 4);
      const auto out = qdi::qdi_forward(spec, theta, x);
      const oracle::CVecX psi = oracle::run(spec, theta, x);
      for (int q = 0; q < 4; ++q)
        CHECK(std::abs(out[static_cast<std::size_t>(q)] - oracle::expectation_y(psi, 4, q)) <
              1e-12);
    }
  }

  SUBCASE("2pi periodicity in every angle") {
    Rng rng(9);
    const auto theta = oracle::random_vec(rng, 8);
    const auto x = oracle::random_vec(rng, 4);
    const auto base = qdi::qdi_forward(spec, theta, x);
    for (int s = 0; s < 8; ++s) {
      auto shifted = theta;
      shifted[static_cast<std::size_t>(s)] += 2.0 * M_PI;
      const auto out = qdi::qdi_forward(spec, shifted, x);
      for (int q = 0; q < 4; ++q)
        CHECK(std::abs(out[static_cast<std::size_t>(q)] - base[static_cast<std::size_t>(q)]) <
              1e-12);
    }
    for (int s = 0; s < 4; ++s) {
      auto shifted = x;
      shifted[static_cast<std::size_t>(s)] += 2.0 * M_PI;
      const auto out = qdi::qdi_forward(spec, theta, shifted);
      for (int q = 0; q < 4; ++q)
        CHECK(std::abs(out[static_cast<std::size_t>(q)] - base[static_cast<std::size_t>(q)]) <
              1e-12);
    }
  }

  SUBCASE("determinism") {
    Rng rng(11);
    const auto theta = oracle::random_vec(rng, 8);
    const auto x = oracle::random_vec(rng, 4);
    const auto a = qdi::qdi_forward(spec, theta, x);
    const auto b = qdi::qdi_forward(spec, theta, x);
    for (int q = 0; q < 4; ++q)
      CHECK(a[static_cast<std::size_t>(q)] == b[static_cast<std::size_t>(q)]);
  }

  SUBCASE("non-finite input is an error") {
    const std::vector<double> theta(8, 0.0);
    std::vector<double> x(4, 0.0);
    x[2] = NAN;
    CHECK_THROWS_AS(qdi::qdi_forward(spec, theta, x), std::invalid_argument);
  }
}

TEST_CASE("qdi_backward") {
  const CircuitSpec& spec = qdi::default_circuit();

  SUBCASE("zero upstream gives zero gradients") {
    Rng rng(13);
    const auto theta = oracle::random_vec(rng, 8);
    const auto x = oracle::random_vec(rng, 4);
    const std::vector<double> up(4, 0.0);
    const auto back = qdi::qdi_backward(spec, theta, x, up);
    for (double g : back.grad_params) CHECK(g == 0.0);
    for (double g : back.grad_features) CHECK(g == 0.0);
  }

  SUBCASE("theta = 0 is a degenerate point for feature gradients") {
    Rng rng(17);
    const std::vector<double> theta(8, 0.0);
    const auto x = oracle::random_vec(rng, 4);
    const std::vector<double> up = {0.3, -1.1, 0.7, 0.25};
    const auto back = qdi::qdi_backward(spec, theta, x, up);
    for (double g : back.grad_features) CHECK(std::abs(g) < 1e-12);
  }

  SUBCASE("matches finite differences of upstream . forward") {
    Rng rng(19);
    for (int trial = 0; trial < 5; ++trial) {
      const auto theta = oracle::random_vec(rng, 8);
      const auto x = oracle::random_vec(rng, 4);
      const auto up = oracle::random_vec(rng, 4, -1.0, 1.0);
      const auto back = qdi::qdi_backward(spec, theta, x, up);

      const auto scalar = [&](std::span<const double> t, std::span<const double> f) {
        const auto out = qdi::qdi_forward(spec, t, f);
        double acc = 0.0;
        for (int q = 0; q < 4; ++q) acc += up[static_cast<std::size_t>(q)] * out[static_cast<std::size_t>(q)];
        return acc;
      };
      const double h = 1e-5;
      for (int s = 0; s < 8; ++s) {
        auto tp = theta, tm = theta;
        tp[static_cast<std::size_t>(s)] += h;
        tm[static_cast<std::size_t>(s)] -= h;
        const double fd = (scalar(tp, x) - scalar(tm, x)) / (2 * h);
        CHECK(std::abs(back.grad_params[static_cast<std::size_t>(s)] - fd) < 1e-6);
      }
      for (int s = 0; s < 4; ++s) {
        auto xp = x, xm = x;
        xp[static_cast<std::size_t>(s)] += h;
        xm[static_cast<std::size_t>(s)] -= h;
        const double fd = (scalar(theta, xp) - scalar(theta, xm)) / (2 * h);
        CHECK(std::abs(back.grad_features[static_cast<std::size_t>(s)] - fd) < 1e-6);
      }
    }
  }
}
