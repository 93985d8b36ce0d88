#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qrul/nn.hpp"
#include "qrul/qdi.hpp"

// QLSTM cell, the stacked hybrid recurrent model, and the classical stacked
// LSTM baseline. Both models share the same skeleton: a stack of recurrent
// layers over a fixed window, then a dense head over the concatenation of the
// last layer's hidden states.
namespace qrul::model {

// Ordered, named view of a model's trainable tensors. The order is the
// canonical flattening used by the optimizer and checkpoints.
struct ParamSet {
  std::vector<std::pair<std::string, nn::Tensor*>> items;

  void add(const std::string& name, nn::Tensor& t) {
    if (t.size() > 0) items.emplace_back(name, &t);
  }
  std::size_t total_size() const;
  std::vector<const nn::Tensor*> order() const;
};

class SequenceModel {
 public:
  virtual ~SequenceModel() = default;

  virtual std::string kind() const = 0;
  virtual int window() const = 0;
  virtual int n_features() const = 0;
  virtual void init_params(std::uint64_t seed) = 0;
  virtual double predict(std::span<const double> window) const = 0;
  // Scalar output var; thread-safe for concurrent tapes over the same model.
  virtual nn::Tape::Var output_tape(nn::Tape& tape, std::span<const double> window) const = 0;
  virtual void collect(ParamSet& out) = 0;
  virtual std::string config_json() const = 0;
};

long param_count(SequenceModel& m);

std::vector<double> flatten_params(const std::vector<const nn::Tensor*>& order);
void unflatten_params(std::span<const double> flat, const std::vector<nn::Tensor*>& order);

struct HqrnnConfig {
  int window = 30;
  int n_features = 14;
  std::vector<int> hidden = {32, 16, 8};
  std::vector<int> head = {16, 32};  // head chain: (hidden.back()*window) -> head... -> 1
  int n_reps = 1;
  bool shared_in_proj = false;  // one in-projection per cell instead of one per gate
  bool use_bias = true;

  void validate() const;
  std::string to_json() const;
  static HqrnnConfig from_json(const std::string& text);
};

struct RnnConfig {
  int window = 30;
  int n_features = 14;
  std::vector<int> hidden = {20, 16, 4};
  std::vector<int> head = {8, 16};

  void validate() const;
  std::string to_json() const;
  static RnnConfig from_json(const std::string& text);
  // "RNN-20-16-4-8-16" -> hidden {20,16,4}, head {8,16}
  static RnnConfig from_name(const std::string& name, int window = 30, int n_features = 14);
};

// One QLSTM cell: per gate an (I+H)->4 in-projection, an 8-angle circuit, and
// a 4->H out-projection. Gate order is forget, input, update, output.
struct QlstmCellParams {
  std::vector<nn::DenseParams> in_projs;   // size 4, or 1 when shared
  std::vector<nn::Tensor> qdi_angles;      // size 4
  std::vector<nn::DenseParams> out_projs;  // size 4
};

void qlstm_cell_step(const QlstmCellParams& p, const qsim::CircuitSpec& spec,
                     std::span<const double> x, std::span<const double> h,
                     std::span<const double> c, nn::Vec& h_out, nn::Vec& c_out);

// Classical LSTM cell with separate input/hidden biases per gate.
struct LstmCellParams {
  std::array<nn::DenseParams, 4> ih;  // [H, I] + bias
  std::array<nn::DenseParams, 4> hh;  // [H, H] + bias
};

void lstm_cell_step(const LstmCellParams& p, std::span<const double> x,
                    std::span<const double> h, std::span<const double> c, nn::Vec& h_out,
                    nn::Vec& c_out);

struct Trace {
  double output = 0.0;
  std::vector<std::vector<nn::Vec>> hidden;  // [layer][step]
};

class Hqrnn : public SequenceModel {
 public:
  explicit Hqrnn(HqrnnConfig cfg);

  std::string kind() const override { return "hqrnn"; }
  int window() const override { return cfg_.window; }
  int n_features() const override { return cfg_.n_features; }
  void init_params(std::uint64_t seed) override;
  double predict(std::span<const double> window) const override;
  nn::Tape::Var output_tape(nn::Tape& tape, std::span<const double> window) const override;
  void collect(ParamSet& out) override;
  std::string config_json() const override { return cfg_.to_json(); }

  Trace predict_trace(std::span<const double> window) const;
  const HqrnnConfig& config() const { return cfg_; }
  const qsim::CircuitSpec& circuit() const { return spec_; }
  std::vector<QlstmCellParams>& cells() { return cells_; }
  std::vector<nn::DenseParams>& head() { return head_; }

 private:
  HqrnnConfig cfg_;
  qsim::CircuitSpec spec_;
  std::vector<QlstmCellParams> cells_;
  std::vector<nn::DenseParams> head_;
};

class LstmBaseline : public SequenceModel {
 public:
  explicit LstmBaseline(RnnConfig cfg);

  std::string kind() const override { return "rnn"; }
  int window() const override { return cfg_.window; }
  int n_features() const override { return cfg_.n_features; }
  void init_params(std::uint64_t seed) override;
  double predict(std::span<const double> window) const override;
  nn::Tape::Var output_tape(nn::Tape& tape, std::span<const double> window) const override;
  void collect(ParamSet& out) override;
  std::string config_json() const override { return cfg_.to_json(); }

  Trace predict_trace(std::span<const double> window) const;
  const RnnConfig& config() const { return cfg_; }
  std::vector<LstmCellParams>& cells() { return cells_; }
  std::vector<nn::DenseParams>& head() { return head_; }

 private:
  RnnConfig cfg_;
  std::vector<LstmCellParams> cells_;
  std::vector<nn::DenseParams> head_;
};

// kind is "hqrnn" or "rnn"; empty config_json means defaults.
std::unique_ptr<SequenceModel> make_model(const std::string& kind, const std::string& config_json);

}  // namespace qrul::model
