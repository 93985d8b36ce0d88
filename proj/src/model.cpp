#include "qrul/model.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "qrul/errors.hpp"
#include "qrul/rng.hpp"

namespace qrul::model {

namespace {

using nlohmann::json;
using nn::Vec;

constexpr const char* kGateNames[4] = {"forget", "input", "update", "output"};

void init_dense(nn::DenseParams& p, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(p.in_dim()));
  for (double& w : p.w.v) w = rng.uniform(-bound, bound);
  for (double& b : p.b.v) b = rng.uniform(-bound, bound);
}

Vec apply_head(const std::vector<nn::DenseParams>& head, Vec z) {
  for (std::size_t k = 0; k < head.size(); ++k) {
    z = nn::dense_forward(head[k], z);
    if (k + 1 < head.size()) {
      for (double& x : z) x = nn::relu(x);
    }
  }
  return z;
}

nn::Tape::Var tape_head(nn::Tape& tape, const std::vector<nn::DenseParams>& head,
                        nn::Tape::Var z) {
  for (std::size_t k = 0; k < head.size(); ++k) {
    const nn::Tape::Var b = head[k].b.size() > 0 ? tape.param(head[k].b) : -1;
    z = tape.dense(tape.param(head[k].w), b, z);
    if (k + 1 < head.size()) z = tape.relu(z);
  }
  return z;
}

std::vector<nn::DenseParams> build_head(int in_dim, const std::vector<int>& dims, bool bias) {
  std::vector<nn::DenseParams> head;
  int in = in_dim;
  for (int d : dims) {
    head.push_back(nn::DenseParams::zeros(d, in, bias));
    in = d;
  }
  head.push_back(nn::DenseParams::zeros(1, in, bias));
  return head;
}

void check_window_shape(std::span<const double> window, int w, int f, const char* who) {
  if (window.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(f))
    throw std::invalid_argument(std::string(who) + ": window shape mismatch");
}

void check_dims(const std::vector<int>& dims, const char* what) {
  if (dims.empty()) throw InputError(std::string("model: empty ") + what + " dims");
  for (int d : dims)
    if (d < 1) throw InputError(std::string("model: non-positive ") + what + " dim");
}

json config_common(int window, int n_features, const std::vector<int>& hidden,
                   const std::vector<int>& head) {
  json j;
  j["window"] = window;
  j["n_features"] = n_features;
  j["hidden"] = hidden;
  j["head"] = head;
  return j;
}

void parse_common(const json& j, int& window, int& n_features, std::vector<int>& hidden,
                  std::vector<int>& head) {
  if (j.contains("window")) window = j.at("window").get<int>();
  if (j.contains("n_features")) n_features = j.at("n_features").get<int>();
  if (j.contains("hidden")) hidden = j.at("hidden").get<std::vector<int>>();
  if (j.contains("head")) head = j.at("head").get<std::vector<int>>();
}

}  // namespace

std::size_t ParamSet::total_size() const {
  std::size_t n = 0;
  for (const auto& [name, t] : items) n += t->size();
  return n;
}

std::vector<const nn::Tensor*> ParamSet::order() const {
  std::vector<const nn::Tensor*> o;
  o.reserve(items.size());
  for (const auto& [name, t] : items) o.push_back(t);
  return o;
}

long param_count(SequenceModel& m) {
  ParamSet ps;
  m.collect(ps);
  return static_cast<long>(ps.total_size());
}

std::vector<double> flatten_params(const std::vector<const nn::Tensor*>& order) {
  std::vector<double> flat;
  for (const nn::Tensor* t : order) flat.insert(flat.end(), t->v.begin(), t->v.end());
  return flat;
}

void unflatten_params(std::span<const double> flat, const std::vector<nn::Tensor*>& order) {
  std::size_t off = 0;
  for (nn::Tensor* t : order) {
    for (std::size_t i = 0; i < t->size(); ++i) t->v[i] = flat[off + i];
    off += t->size();
  }
  if (off != flat.size()) throw std::invalid_argument("model: flat parameter size mismatch");
}

void HqrnnConfig::validate() const {
  if (window < 1 || n_features < 1) throw InputError("model: window and n_features must be >= 1");
  check_dims(hidden, "hidden");
  for (int d : head)
    if (d < 1) throw InputError("model: non-positive head dim");
  if (n_reps < 1) throw InputError("model: n_reps must be >= 1");
}

std::string HqrnnConfig::to_json() const {
  json j = config_common(window, n_features, hidden, head);
  j["n_reps"] = n_reps;
  j["shared_in_proj"] = shared_in_proj;
  j["use_bias"] = use_bias;
  return j.dump();
}

HqrnnConfig HqrnnConfig::from_json(const std::string& text) {
  HqrnnConfig cfg;
  if (text.empty()) return cfg;
  json j = json::parse(text);
  parse_common(j, cfg.window, cfg.n_features, cfg.hidden, cfg.head);
  if (j.contains("n_reps")) cfg.n_reps = j.at("n_reps").get<int>();
  if (j.contains("shared_in_proj")) cfg.shared_in_proj = j.at("shared_in_proj").get<bool>();
  if (j.contains("use_bias")) cfg.use_bias = j.at("use_bias").get<bool>();
  cfg.validate();
  return cfg;
}

void RnnConfig::validate() const {
  if (window < 1 || n_features < 1) throw InputError("model: window and n_features must be >= 1");
  check_dims(hidden, "hidden");
  for (int d : head)
    if (d < 1) throw InputError("model: non-positive head dim");
}

std::string RnnConfig::to_json() const {
  return config_common(window, n_features, hidden, head).dump();
}

RnnConfig RnnConfig::from_json(const std::string& text) {
  RnnConfig cfg;
  if (text.empty()) return cfg;
  json j = json::parse(text);
  if (j.contains("name")) {
    cfg = from_name(j.at("name").get<std::string>(), cfg.window, cfg.n_features);
  }
  parse_common(j, cfg.window, cfg.n_features, cfg.hidden, cfg.head);
  cfg.validate();
  return cfg;
}

RnnConfig RnnConfig::from_name(const std::string& name, int window, int n_features) {
  std::vector<int> nums;
  std::size_t pos = name.find('-');
  if (pos == std::string::npos) throw InputError("model: cannot parse rnn name " + name);
  while (pos != std::string::npos) {
    const std::size_t next = name.find('-', pos + 1);
    const std::string tok = name.substr(pos + 1, next == std::string::npos ? next : next - pos - 1);
    try {
      nums.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw InputError("model: cannot parse rnn name " + name);
    }
    pos = next;
  }
  if (nums.size() < 3) throw InputError("model: rnn name needs at least 3 dims: " + name);
  RnnConfig cfg;
  cfg.window = window;
  cfg.n_features = n_features;
  cfg.hidden.assign(nums.begin(), nums.end() - 2);
  cfg.head.assign(nums.end() - 2, nums.end());
  cfg.validate();
  return cfg;
}

void qlstm_cell_step(const QlstmCellParams& p, const qsim::CircuitSpec& spec,
                     std::span<const double> x, std::span<const double> h,
                     std::span<const double> c, Vec& h_out, Vec& c_out) {
  if (h.size() != c.size()) throw std::invalid_argument("model: h/c size mismatch");
  Vec v;
  v.reserve(x.size() + h.size());
  v.insert(v.end(), x.begin(), x.end());
  v.insert(v.end(), h.begin(), h.end());

  std::array<Vec, 4> act;
  for (int g = 0; g < 4; ++g) {
    const nn::DenseParams& ip = p.in_projs[p.in_projs.size() == 1 ? 0 : g];
    const Vec z = nn::dense_forward(ip, v);
    const Vec q = qdi::qdi_forward(spec, p.qdi_angles[static_cast<std::size_t>(g)].v, z);
    act[static_cast<std::size_t>(g)] = nn::dense_forward(p.out_projs[static_cast<std::size_t>(g)], q);
  }

  const std::size_t H = h.size();
  h_out.resize(H);
  c_out.resize(H);
  for (std::size_t k = 0; k < H; ++k) {
    const double f = nn::sigmoid(act[0][k]);
    const double i = nn::sigmoid(act[1][k]);
    const double u = std::tanh(act[2][k]);
    const double o = nn::sigmoid(act[3][k]);
    c_out[k] = f * c[k] + i * u;
    h_out[k] = o * std::tanh(c_out[k]);
  }
}

void lstm_cell_step(const LstmCellParams& p, std::span<const double> x, std::span<const double> h,
                    std::span<const double> c, Vec& h_out, Vec& c_out) {
  if (h.size() != c.size()) throw std::invalid_argument("model: h/c size mismatch");
  std::array<Vec, 4> act;
  for (int g = 0; g < 4; ++g) {
    Vec a = nn::dense_forward(p.ih[static_cast<std::size_t>(g)], x);
    const Vec b = nn::dense_forward(p.hh[static_cast<std::size_t>(g)], h);
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
    act[static_cast<std::size_t>(g)] = std::move(a);
  }
  const std::size_t H = h.size();
  h_out.resize(H);
  c_out.resize(H);
  for (std::size_t k = 0; k < H; ++k) {
    const double f = nn::sigmoid(act[0][k]);
    const double i = nn::sigmoid(act[1][k]);
    const double u = std::tanh(act[2][k]);
    const double o = nn::sigmoid(act[3][k]);
    c_out[k] = f * c[k] + i * u;
    h_out[k] = o * std::tanh(c_out[k]);
  }
}

namespace {

nn::Tape::Var param_or_none(nn::Tape& tape, const nn::Tensor& t) {
  return t.size() > 0 ? tape.param(t) : -1;
}

// taped version of qlstm_cell_step
std::pair<nn::Tape::Var, nn::Tape::Var> tape_qlstm_step(nn::Tape& tape,
                                                        const QlstmCellParams& p,
                                                        const qsim::CircuitSpec& spec,
                                                        nn::Tape::Var x, nn::Tape::Var h,
                                                        nn::Tape::Var c) {
  const std::array<nn::Tape::Var, 2> xh{x, h};
  const nn::Tape::Var v = tape.concat(xh);
  std::array<nn::Tape::Var, 4> act;
  for (int g = 0; g < 4; ++g) {
    const nn::DenseParams& ip = p.in_projs[p.in_projs.size() == 1 ? 0 : g];
    const nn::Tape::Var z = tape.dense(tape.param(ip.w), param_or_none(tape, ip.b), v);
    const nn::Tape::Var q =
        tape.qdi(spec, tape.param(p.qdi_angles[static_cast<std::size_t>(g)]), z);
    const nn::DenseParams& op = p.out_projs[static_cast<std::size_t>(g)];
    act[static_cast<std::size_t>(g)] = tape.dense(tape.param(op.w), param_or_none(tape, op.b), q);
  }
  const nn::Tape::Var f = tape.sigmoid(act[0]);
  const nn::Tape::Var i = tape.sigmoid(act[1]);
  const nn::Tape::Var u = tape.tanh_fn(act[2]);
  const nn::Tape::Var o = tape.sigmoid(act[3]);
  const nn::Tape::Var c_new = tape.add(tape.mul(f, c), tape.mul(i, u));
  const nn::Tape::Var h_new = tape.mul(o, tape.tanh_fn(c_new));
  return {h_new, c_new};
}

std::pair<nn::Tape::Var, nn::Tape::Var> tape_lstm_step(nn::Tape& tape, const LstmCellParams& p,
                                                       nn::Tape::Var x, nn::Tape::Var h,
                                                       nn::Tape::Var c) {
  std::array<nn::Tape::Var, 4> act;
  for (int g = 0; g < 4; ++g) {
    const nn::DenseParams& ih = p.ih[static_cast<std::size_t>(g)];
    const nn::DenseParams& hh = p.hh[static_cast<std::size_t>(g)];
    const nn::Tape::Var a = tape.dense(tape.param(ih.w), param_or_none(tape, ih.b), x);
    const nn::Tape::Var b = tape.dense(tape.param(hh.w), param_or_none(tape, hh.b), h);
    act[static_cast<std::size_t>(g)] = tape.add(a, b);
  }
  const nn::Tape::Var f = tape.sigmoid(act[0]);
  const nn::Tape::Var i = tape.sigmoid(act[1]);
  const nn::Tape::Var u = tape.tanh_fn(act[2]);
  const nn::Tape::Var o = tape.sigmoid(act[3]);
  const nn::Tape::Var c_new = tape.add(tape.mul(f, c), tape.mul(i, u));
  const nn::Tape::Var h_new = tape.mul(o, tape.tanh_fn(c_new));
  return {h_new, c_new};
}

}  // namespace

Hqrnn::Hqrnn(HqrnnConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  spec_ = qdi::build_qdi_circuit(qdi::QdiLayout{4, cfg_.n_reps});
  int in = cfg_.n_features;
  for (int hdim : cfg_.hidden) {
    QlstmCellParams cell;
    const int n_in_projs = cfg_.shared_in_proj ? 1 : 4;
    for (int k = 0; k < n_in_projs; ++k)
      cell.in_projs.push_back(nn::DenseParams::zeros(4, in + hdim, cfg_.use_bias));
    for (int g = 0; g < 4; ++g) {
      cell.qdi_angles.push_back(nn::Tensor::zeros({spec_.n_param_slots}));
      cell.out_projs.push_back(nn::DenseParams::zeros(hdim, 4, cfg_.use_bias));
    }
    cells_.push_back(std::move(cell));
    in = hdim;
  }
  head_ = build_head(cfg_.hidden.back() * cfg_.window, cfg_.head, cfg_.use_bias);
}

void Hqrnn::init_params(std::uint64_t seed) {
  Rng rng(seed);
  for (QlstmCellParams& cell : cells_) {
    for (nn::DenseParams& ip : cell.in_projs) init_dense(ip, rng);
    for (int g = 0; g < 4; ++g) {
      for (double& a : cell.qdi_angles[static_cast<std::size_t>(g)].v)
        a = rng.uniform(-3.14159265358979323846, 3.14159265358979323846);
      init_dense(cell.out_projs[static_cast<std::size_t>(g)], rng);
    }
  }
  for (nn::DenseParams& d : head_) init_dense(d, rng);
}

double Hqrnn::predict(std::span<const double> window) const {
  return predict_trace(window).output;
}

Trace Hqrnn::predict_trace(std::span<const double> window) const {
  check_window_shape(window, cfg_.window, cfg_.n_features, "hqrnn");
  const std::size_t L = cells_.size();
  std::vector<Vec> h(L), c(L);
  for (std::size_t l = 0; l < L; ++l) {
    h[l].assign(static_cast<std::size_t>(cfg_.hidden[l]), 0.0);
    c[l].assign(static_cast<std::size_t>(cfg_.hidden[l]), 0.0);
  }
  Trace trace;
  trace.hidden.resize(L);
  Vec flat_hidden;
  flat_hidden.reserve(static_cast<std::size_t>(cfg_.hidden.back()) * cfg_.window);
  Vec h_new, c_new;
  for (int t = 0; t < cfg_.window; ++t) {
    std::span<const double> in(window.data() + static_cast<std::size_t>(t) * cfg_.n_features,
                               static_cast<std::size_t>(cfg_.n_features));
    Vec carried;
    for (std::size_t l = 0; l < L; ++l) {
      qlstm_cell_step(cells_[l], spec_, in, h[l], c[l], h_new, c_new);
      h[l] = h_new;
      c[l] = c_new;
      trace.hidden[l].push_back(h[l]);
      carried = h[l];
      in = carried;
    }
    flat_hidden.insert(flat_hidden.end(), h[L - 1].begin(), h[L - 1].end());
  }
  trace.output = apply_head(head_, std::move(flat_hidden))[0];
  return trace;
}

nn::Tape::Var Hqrnn::output_tape(nn::Tape& tape, std::span<const double> window) const {
  check_window_shape(window, cfg_.window, cfg_.n_features, "hqrnn");
  const std::size_t L = cells_.size();
  std::vector<nn::Tape::Var> h(L), c(L);
  for (std::size_t l = 0; l < L; ++l) {
    const Vec zeros(static_cast<std::size_t>(cfg_.hidden[l]), 0.0);
    h[l] = tape.input(zeros);
    c[l] = tape.input(zeros);
  }
  std::vector<nn::Tape::Var> tops;
  tops.reserve(static_cast<std::size_t>(cfg_.window));
  for (int t = 0; t < cfg_.window; ++t) {
    nn::Tape::Var in = tape.input(std::span<const double>(
        window.data() + static_cast<std::size_t>(t) * cfg_.n_features,
        static_cast<std::size_t>(cfg_.n_features)));
    for (std::size_t l = 0; l < L; ++l) {
      auto [hn, cn] = tape_qlstm_step(tape, cells_[l], spec_, in, h[l], c[l]);
      h[l] = hn;
      c[l] = cn;
      in = hn;
    }
    tops.push_back(h[L - 1]);
  }
  return tape_head(tape, head_, tape.concat(tops));
}

void Hqrnn::collect(ParamSet& out) {
  for (std::size_t l = 0; l < cells_.size(); ++l) {
    const std::string base = "qlstm" + std::to_string(l);
    QlstmCellParams& cell = cells_[l];
    if (cell.in_projs.size() == 1) {
      out.add(base + ".in.w", cell.in_projs[0].w);
      out.add(base + ".in.b", cell.in_projs[0].b);
    }
    for (int g = 0; g < 4; ++g) {
      const std::string gb = base + "." + kGateNames[g];
      if (cell.in_projs.size() == 4) {
        out.add(gb + ".in.w", cell.in_projs[static_cast<std::size_t>(g)].w);
        out.add(gb + ".in.b", cell.in_projs[static_cast<std::size_t>(g)].b);
      }
      out.add(gb + ".angles", cell.qdi_angles[static_cast<std::size_t>(g)]);
      out.add(gb + ".out.w", cell.out_projs[static_cast<std::size_t>(g)].w);
      out.add(gb + ".out.b", cell.out_projs[static_cast<std::size_t>(g)].b);
    }
  }
  for (std::size_t k = 0; k < head_.size(); ++k) {
    const std::string base = "head" + std::to_string(k);
    out.add(base + ".w", head_[k].w);
    out.add(base + ".b", head_[k].b);
  }
}

LstmBaseline::LstmBaseline(RnnConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  int in = cfg_.n_features;
  for (int hdim : cfg_.hidden) {
    LstmCellParams cell;
    for (int g = 0; g < 4; ++g) {
      cell.ih[static_cast<std::size_t>(g)] = nn::DenseParams::zeros(hdim, in, true);
      cell.hh[static_cast<std::size_t>(g)] = nn::DenseParams::zeros(hdim, hdim, true);
    }
    cells_.push_back(std::move(cell));
    in = hdim;
  }
  head_ = build_head(cfg_.hidden.back() * cfg_.window, cfg_.head, true);
}

void LstmBaseline::init_params(std::uint64_t seed) {
  Rng rng(seed);
  for (LstmCellParams& cell : cells_) {
    for (int g = 0; g < 4; ++g) {
      init_dense(cell.ih[static_cast<std::size_t>(g)], rng);
      init_dense(cell.hh[static_cast<std::size_t>(g)], rng);
    }
  }
  for (nn::DenseParams& d : head_) init_dense(d, rng);
}

double LstmBaseline::predict(std::span<const double> window) const {
  return predict_trace(window).output;
}

Trace LstmBaseline::predict_trace(std::span<const double> window) const {
  check_window_shape(window, cfg_.window, cfg_.n_features, "rnn");
  const std::size_t L = cells_.size();
  std::vector<Vec> h(L), c(L);
  for (std::size_t l = 0; l < L; ++l) {
    h[l].assign(static_cast<std::size_t>(cfg_.hidden[l]), 0.0);
    c[l].assign(static_cast<std::size_t>(cfg_.hidden[l]), 0.0);
  }
  Trace trace;
  trace.hidden.resize(L);
  Vec flat_hidden;
  Vec h_new, c_new;
  for (int t = 0; t < cfg_.window; ++t) {
    std::span<const double> in(window.data() + static_cast<std::size_t>(t) * cfg_.n_features,
                               static_cast<std::size_t>(cfg_.n_features));
    Vec carried;
    for (std::size_t l = 0; l < L; ++l) {
      lstm_cell_step(cells_[l], in, h[l], c[l], h_new, c_new);
      h[l] = h_new;
      c[l] = c_new;
      trace.hidden[l].push_back(h[l]);
      carried = h[l];
      in = carried;
    }
    flat_hidden.insert(flat_hidden.end(), h[L - 1].begin(), h[L - 1].end());
  }
  trace.output = apply_head(head_, std::move(flat_hidden))[0];
  return trace;
}

nn::Tape::Var LstmBaseline::output_tape(nn::Tape& tape, std::span<const double> window) const {
  check_window_shape(window, cfg_.window, cfg_.n_features, "rnn");
  const std::size_t L = cells_.size();
  std::vector<nn::Tape::Var> h(L), c(L);
  for (std::size_t l = 0; l < L; ++l) {
    const Vec zeros(static_cast<std::size_t>(cfg_.hidden[l]), 0.0);
    h[l] = tape.input(zeros);
    c[l] = tape.input(zeros);
  }
  std::vector<nn::Tape::Var> tops;
  for (int t = 0; t < cfg_.window; ++t) {
    nn::Tape::Var in = tape.input(std::span<const double>(
        window.data() + static_cast<std::size_t>(t) * cfg_.n_features,
        static_cast<std::size_t>(cfg_.n_features)));
    for (std::size_t l = 0; l < L; ++l) {
      auto [hn, cn] = tape_lstm_step(tape, cells_[l], in, h[l], c[l]);
      h[l] = hn;
      c[l] = cn;
      in = hn;
    }
    tops.push_back(h[L - 1]);
  }
  return tape_head(tape, head_, tape.concat(tops));
}

void LstmBaseline::collect(ParamSet& out) {
  for (std::size_t l = 0; l < cells_.size(); ++l) {
    const std::string base = "lstm" + std::to_string(l);
    LstmCellParams& cell = cells_[l];
    for (int g = 0; g < 4; ++g) {
      const std::string gb = base + "." + kGateNames[g];
      out.add(gb + ".ih.w", cell.ih[static_cast<std::size_t>(g)].w);
      out.add(gb + ".ih.b", cell.ih[static_cast<std::size_t>(g)].b);
      out.add(gb + ".hh.w", cell.hh[static_cast<std::size_t>(g)].w);
      out.add(gb + ".hh.b", cell.hh[static_cast<std::size_t>(g)].b);
    }
  }
  for (std::size_t k = 0; k < head_.size(); ++k) {
    const std::string base = "head" + std::to_string(k);
    out.add(base + ".w", head_[k].w);
    out.add(base + ".b", head_[k].b);
  }
}

std::unique_ptr<SequenceModel> make_model(const std::string& kind,
                                          const std::string& config_json) {
  if (kind == "hqrnn") return std::make_unique<Hqrnn>(HqrnnConfig::from_json(config_json));
  if (kind == "rnn") return std::make_unique<LstmBaseline>(RnnConfig::from_json(config_json));
  throw InputError("model: unknown model kind '" + kind + "'");
}

}  // namespace qrul::model
