#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "qrul/qsim.hpp"

// Minimal dense neural-network kit: tensors, dense layers, activations, MSE,
// Adam, and a reverse-mode tape that is just big enough for LSTM/QLSTM
// training (dense ops, elementwise ops, concat, and the quantum layer as a
// custom node).
namespace qrul::nn {

using Vec = std::vector<double>;

struct Tensor {
  std::vector<int> shape;
  Vec v;
  Vec g;  // optional gradient buffer, same length as v when in use

  static Tensor zeros(std::vector<int> shape);
  std::size_t size() const { return v.size(); }
  void zero_grad() { g.assign(v.size(), 0.0); }
};

struct DenseParams {
  Tensor w;  // [out, in]
  Tensor b;  // [out], may be empty (no bias)

  static DenseParams zeros(int out, int in, bool bias = true);
  int out_dim() const { return w.shape[0]; }
  int in_dim() const { return w.shape[1]; }
};

Vec dense_forward(const DenseParams& p, std::span<const double> x);

double sigmoid(double x);
Vec sigmoid(std::span<const double> x);
Vec tanh_v(std::span<const double> x);
double relu(double x);
Vec relu(std::span<const double> x);

// (1/N) sum (pred_i - target_i)^2; empty input is an error.
double mse_loss(std::span<const double> pred, std::span<const double> target);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  AdamState(std::size_t n, AdamConfig cfg);

  // standard bias-corrected update, in place
  void update(std::span<double> params, std::span<const double> grads);
  std::int64_t step() const { return step_; }

 private:
  AdamConfig cfg_;
  std::int64_t step_ = 0;
  Vec m_, v_;
};

// Reverse-mode tape. Build the forward pass with the ops below, call
// backward(loss), then read gradients per var or per registered Tensor.
// Tapes are single-threaded; parallel batches use one tape per sample.
class Tape {
 public:
  using Var = int;

  Var input(std::span<const double> values);
  // Trainable leaf. Registering the same Tensor twice returns the same var,
  // so reuse across timesteps accumulates gradients correctly.
  Var param(const Tensor& t);
  // y = W x + b; pass b = -1 for a bias-free layer.
  Var dense(Var w, Var b, Var x);
  Var sigmoid(Var x);
  Var tanh_fn(Var x);
  Var relu(Var x);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var concat(std::span<const Var> parts);
  // Outputs <Y_k> for every qubit of the spec; angles/features are vars.
  Var qdi(const qsim::CircuitSpec& spec, Var angles, Var features);
  Var mse(Var pred, std::span<const double> target);

  const Vec& value(Var v) const { return nodes_[static_cast<std::size_t>(v)].val; }
  void backward(Var loss);
  const Vec& grad(Var v) const { return nodes_[static_cast<std::size_t>(v)].grad; }

  // Gradient of a registered tensor after backward; zeros if it never
  // influenced the loss.
  Vec grad_for(const Tensor& t) const;
  // Concatenated gradients following `order`; used for flat optimizer state.
  void export_grads(std::span<const Tensor* const> order, std::span<double> out) const;

 private:
  enum class Op { Input, Param, Dense, Sigmoid, Tanh, Relu, Add, Mul, Concat, Qdi, Mse };

  struct Node {
    Op op;
    int a = -1, b = -1, c = -1;
    std::vector<int> list;
    Vec val;
    Vec grad;
    Vec aux;  // Mse target
    const qsim::CircuitSpec* spec = nullptr;
    const Tensor* tensor = nullptr;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, Var> param_vars_;
};

// Adds tape gradients into each tensor's .g buffer (sized on demand).
void accumulate_grads(const Tape& tape, std::span<Tensor* const> tensors);

}  // namespace qrul::nn
