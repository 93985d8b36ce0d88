#include "qrul/nn.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qrul::nn {

Tensor Tensor::zeros(std::vector<int> shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("nn: negative tensor dimension");
    n *= static_cast<std::size_t>(d);
  }
  Tensor t;
  t.shape = std::move(shape);
  t.v.assign(n, 0.0);
  return t;
}

DenseParams DenseParams::zeros(int out, int in, bool bias) {
  DenseParams p;
  p.w = Tensor::zeros({out, in});
  if (bias) p.b = Tensor::zeros({out});
  return p;
}

Vec dense_forward(const DenseParams& p, std::span<const double> x) {
  const int out = p.out_dim();
  const int in = p.in_dim();
  if (static_cast<int>(x.size()) != in)
    throw std::invalid_argument("nn: dense input length mismatch");
  Vec y(static_cast<std::size_t>(out), 0.0);
  for (int i = 0; i < out; ++i) {
    double acc = p.b.v.empty() ? 0.0 : p.b.v[static_cast<std::size_t>(i)];
    const double* row = p.w.v.data() + static_cast<std::size_t>(i) * in;
    for (int j = 0; j < in; ++j) acc += row[j] * x[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vec sigmoid(std::span<const double> x) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = sigmoid(x[i]);
  return y;
}

Vec tanh_v(std::span<const double> x) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  return y;
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

Vec relu(std::span<const double> x) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = relu(x[i]);
  return y;
}

double mse_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.empty() || pred.size() != target.size())
    throw std::invalid_argument("nn: mse_loss needs equal nonempty lengths");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

AdamState::AdamState(std::size_t n, AdamConfig cfg)
    : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

void AdamState::update(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw std::invalid_argument("nn: adam size mismatch");
  ++step_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    const double g = grads[i];
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    params[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
  }
}

Tape::Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return static_cast<Var>(nodes_.size() - 1);
}

Tape::Var Tape::input(std::span<const double> values) {
  Node n;
  n.op = Op::Input;
  n.val.assign(values.begin(), values.end());
  return push(std::move(n));
}

Tape::Var Tape::param(const Tensor& t) {
  auto it = param_vars_.find(&t);
  if (it != param_vars_.end()) return it->second;
  Node n;
  n.op = Op::Param;
  n.val = t.v;
  n.tensor = &t;
  const Var v = push(std::move(n));
  param_vars_.emplace(&t, v);
  return v;
}

Tape::Var Tape::dense(Var w, Var b, Var x) {
  const Vec& wv = value(w);
  const Vec& xv = value(x);
  if (xv.empty() || wv.size() % xv.size() != 0)
    throw std::invalid_argument("nn: dense weight/input size mismatch");
  const std::size_t in = xv.size();
  const std::size_t out = wv.size() / in;
  if (b >= 0 && value(b).size() != out)
    throw std::invalid_argument("nn: dense bias size mismatch");
  Node n;
  n.op = Op::Dense;
  n.a = w;
  n.b = b;
  n.c = x;
  n.val.resize(out);
  const Vec* bias = b >= 0 ? &value(b) : nullptr;
  for (std::size_t i = 0; i < out; ++i) {
    double acc = bias ? (*bias)[i] : 0.0;
    const double* row = wv.data() + i * in;
    for (std::size_t j = 0; j < in; ++j) acc += row[j] * xv[j];
    n.val[i] = acc;
  }
  return push(std::move(n));
}

Tape::Var Tape::sigmoid(Var x) {
  Node n;
  n.op = Op::Sigmoid;
  n.a = x;
  n.val = nn::sigmoid(value(x));
  return push(std::move(n));
}

Tape::Var Tape::tanh_fn(Var x) {
  Node n;
  n.op = Op::Tanh;
  n.a = x;
  n.val = nn::tanh_v(value(x));
  return push(std::move(n));
}

Tape::Var Tape::relu(Var x) {
  Node n;
  n.op = Op::Relu;
  n.a = x;
  n.val = nn::relu(value(x));
  return push(std::move(n));
}

Tape::Var Tape::add(Var a, Var b) {
  const Vec& av = value(a);
  const Vec& bv = value(b);
  if (av.size() != bv.size()) throw std::invalid_argument("nn: add size mismatch");
  Node n;
  n.op = Op::Add;
  n.a = a;
  n.b = b;
  n.val.resize(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) n.val[i] = av[i] + bv[i];
  return push(std::move(n));
}

Tape::Var Tape::mul(Var a, Var b) {
  const Vec& av = value(a);
  const Vec& bv = value(b);
  if (av.size() != bv.size()) throw std::invalid_argument("nn: mul size mismatch");
  Node n;
  n.op = Op::Mul;
  n.a = a;
  n.b = b;
  n.val.resize(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) n.val[i] = av[i] * bv[i];
  return push(std::move(n));
}

Tape::Var Tape::concat(std::span<const Var> parts) {
  Node n;
  n.op = Op::Concat;
  n.list.assign(parts.begin(), parts.end());
  for (Var p : parts) {
    const Vec& pv = value(p);
    n.val.insert(n.val.end(), pv.begin(), pv.end());
  }
  return push(std::move(n));
}

Tape::Var Tape::qdi(const qsim::CircuitSpec& spec, Var angles, Var features) {
  const Vec& av = value(angles);
  const Vec& fv = value(features);
  if (static_cast<int>(av.size()) != spec.n_param_slots)
    throw std::invalid_argument("nn: qdi angle count mismatch");
  if (static_cast<int>(fv.size()) != spec.n_data_slots)
    throw std::invalid_argument("nn: qdi feature count mismatch");
  Node n;
  n.op = Op::Qdi;
  n.a = angles;
  n.b = features;
  n.spec = &spec;
  const qsim::StateVector psi = qsim::run_circuit(spec, av, fv);
  n.val.resize(static_cast<std::size_t>(spec.n_qubits));
  for (int q = 0; q < spec.n_qubits; ++q)
    n.val[static_cast<std::size_t>(q)] = qsim::expectation_y(psi, q);
  return push(std::move(n));
}

Tape::Var Tape::mse(Var pred, std::span<const double> target) {
  Node n;
  n.op = Op::Mse;
  n.a = pred;
  n.aux.assign(target.begin(), target.end());
  n.val = {mse_loss(value(pred), target)};
  return push(std::move(n));
}

void Tape::backward(Var loss) {
  if (value(loss).size() != 1)
    throw std::invalid_argument("nn: backward needs a scalar loss");
  for (Node& n : nodes_) n.grad.assign(n.val.size(), 0.0);
  nodes_[static_cast<std::size_t>(loss)].grad[0] = 1.0;

  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    switch (n.op) {
      case Op::Input:
      case Op::Param:
        break;
      case Op::Dense: {
        Node& wn = nodes_[static_cast<std::size_t>(n.a)];
        Node& xn = nodes_[static_cast<std::size_t>(n.c)];
        const std::size_t in = xn.val.size();
        const std::size_t out = n.val.size();
        for (std::size_t r = 0; r < out; ++r) {
          const double go = n.grad[r];
          if (go == 0.0) continue;
          double* wrow_g = wn.grad.data() + r * in;
          const double* wrow = wn.val.data() + r * in;
          for (std::size_t j = 0; j < in; ++j) {
            wrow_g[j] += go * xn.val[j];
            xn.grad[j] += go * wrow[j];
          }
        }
        if (n.b >= 0) {
          Node& bn = nodes_[static_cast<std::size_t>(n.b)];
          for (std::size_t r = 0; r < out; ++r) bn.grad[r] += n.grad[r];
        }
        break;
      }
      case Op::Sigmoid: {
        Node& xn = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t k = 0; k < n.val.size(); ++k)
          xn.grad[k] += n.grad[k] * n.val[k] * (1.0 - n.val[k]);
        break;
      }
      case Op::Tanh: {
        Node& xn = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t k = 0; k < n.val.size(); ++k)
          xn.grad[k] += n.grad[k] * (1.0 - n.val[k] * n.val[k]);
        break;
      }
      case Op::Relu: {
        Node& xn = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t k = 0; k < n.val.size(); ++k)
          if (xn.val[k] > 0.0) xn.grad[k] += n.grad[k];
        break;
      }
      case Op::Add: {
        Node& an = nodes_[static_cast<std::size_t>(n.a)];
        Node& bn = nodes_[static_cast<std::size_t>(n.b)];
        for (std::size_t k = 0; k < n.val.size(); ++k) {
          an.grad[k] += n.grad[k];
          bn.grad[k] += n.grad[k];
        }
        break;
      }
      case Op::Mul: {
        Node& an = nodes_[static_cast<std::size_t>(n.a)];
        Node& bn = nodes_[static_cast<std::size_t>(n.b)];
        for (std::size_t k = 0; k < n.val.size(); ++k) {
          an.grad[k] += n.grad[k] * bn.val[k];
          bn.grad[k] += n.grad[k] * an.val[k];
        }
        break;
      }
      case Op::Concat: {
        std::size_t off = 0;
        for (int p : n.list) {
          Node& pn = nodes_[static_cast<std::size_t>(p)];
          for (std::size_t k = 0; k < pn.val.size(); ++k) pn.grad[k] += n.grad[off + k];
          off += pn.val.size();
        }
        break;
      }
      case Op::Qdi: {
        Node& an = nodes_[static_cast<std::size_t>(n.a)];
        Node& fn = nodes_[static_cast<std::size_t>(n.b)];
        bool any = false;
        for (double g : n.grad) any = any || g != 0.0;
        if (!any) break;
        const qsim::YJacobians jac = qsim::y_jacobians(*n.spec, an.val, fn.val);
        for (int k = 0; k < n.spec->n_qubits; ++k) {
          const double go = n.grad[static_cast<std::size_t>(k)];
          if (go == 0.0) continue;
          for (int s = 0; s < n.spec->n_param_slots; ++s)
            an.grad[static_cast<std::size_t>(s)] += go * jac.by_param.at(k, s);
          for (int s = 0; s < n.spec->n_data_slots; ++s)
            fn.grad[static_cast<std::size_t>(s)] += go * jac.by_data.at(k, s);
        }
        break;
      }
      case Op::Mse: {
        Node& pn = nodes_[static_cast<std::size_t>(n.a)];
        const double go = n.grad[0];
        const double scale = 2.0 / static_cast<double>(pn.val.size());
        for (std::size_t k = 0; k < pn.val.size(); ++k)
          pn.grad[k] += go * scale * (pn.val[k] - n.aux[k]);
        break;
      }
    }
  }
}

Vec Tape::grad_for(const Tensor& t) const {
  auto it = param_vars_.find(&t);
  if (it == param_vars_.end()) return Vec(t.size(), 0.0);
  return nodes_[static_cast<std::size_t>(it->second)].grad;
}

void Tape::export_grads(std::span<const Tensor* const> order, std::span<double> out) const {
  std::size_t off = 0;
  for (const Tensor* t : order) {
    auto it = param_vars_.find(t);
    if (it == param_vars_.end()) {
      for (std::size_t k = 0; k < t->size(); ++k) out[off + k] = 0.0;
    } else {
      const Vec& g = nodes_[static_cast<std::size_t>(it->second)].grad;
      for (std::size_t k = 0; k < g.size(); ++k) out[off + k] = g[k];
    }
    off += t->size();
  }
}

void accumulate_grads(const Tape& tape, std::span<Tensor* const> tensors) {
  for (Tensor* t : tensors) {
    if (t->g.size() != t->v.size()) t->zero_grad();
    const Vec g = tape.grad_for(*t);
    for (std::size_t i = 0; i < g.size(); ++i) t->g[i] += g[i];
  }
}

}  // namespace qrul::nn
