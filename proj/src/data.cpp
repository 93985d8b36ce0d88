#include "qrul/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "qrul/hash.hpp"
#include "qrul/rng.hpp"

namespace qrul::data {

namespace {

constexpr int kNumSensors = 21;
constexpr int kNumColumns = 26;

double parse_token(const std::string& tok, int line_no) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size() || !std::isfinite(v))
    throw ParseError(line_no, "non-numeric token '" + tok + "'");
  return v;
}

int parse_int_token(const std::string& tok, int line_no, const char* what) {
  const double v = parse_token(tok, line_no);
  if (v != std::floor(v) || v < 0 || v > 1e9)
    throw ParseError(line_no, std::string("invalid ") + what + " '" + tok + "'");
  return static_cast<int>(v);
}

struct UnitView {
  int unit;
  std::size_t begin;  // index into the sorted record vector
  std::size_t count;
};

std::vector<UnitView> group_by_unit(std::span<const RawRecord> records) {
  std::vector<UnitView> units;
  std::size_t i = 0;
  while (i < records.size()) {
    std::size_t j = i;
    while (j < records.size() && records[j].unit == records[i].unit) ++j;
    units.push_back({records[i].unit, i, j - i});
    i = j;
  }
  return units;
}

}  // namespace

std::vector<RawRecord> parse_cmapss(std::istream& in) {
  std::vector<RawRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<std::string> toks;
    std::string tok;
    while (ls >> tok) toks.push_back(tok);
    if (toks.empty()) continue;
    if (toks.size() != kNumColumns)
      throw ParseError(line_no, "expected 26 columns, got " + std::to_string(toks.size()));
    RawRecord r;
    r.unit = parse_int_token(toks[0], line_no, "unit id");
    r.cycle = parse_int_token(toks[1], line_no, "cycle");
    for (int k = 0; k < 3; ++k)
      r.op_settings[static_cast<std::size_t>(k)] = parse_token(toks[static_cast<std::size_t>(2 + k)], line_no);
    for (int k = 0; k < kNumSensors; ++k)
      r.sensors[static_cast<std::size_t>(k)] = parse_token(toks[static_cast<std::size_t>(5 + k)], line_no);
    records.push_back(r);
  }
  std::stable_sort(records.begin(), records.end(), [](const RawRecord& a, const RawRecord& b) {
    return a.unit != b.unit ? a.unit < b.unit : a.cycle < b.cycle;
  });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].unit == records[i - 1].unit && records[i].cycle <= records[i - 1].cycle)
      throw InputError("data: cycles not strictly increasing within unit " +
                       std::to_string(records[i].unit));
  }
  return records;
}

void serialize_records(std::span<const RawRecord> records, std::ostream& out) {
  char buf[64];
  for (const RawRecord& r : records) {
    out << r.unit << ' ' << r.cycle;
    for (double v : r.op_settings) {
      std::snprintf(buf, sizeof buf, " %.17g", v);
      out << buf;
    }
    for (double v : r.sensors) {
      std::snprintf(buf, sizeof buf, " %.17g", v);
      out << buf;
    }
    out << '\n';
  }
}

ChannelMask drop_constant_sensors(std::span<const RawRecord> train, double std_threshold) {
  if (train.empty()) throw InputError("data: empty training set");
  ChannelMask mask;
  const double n = static_cast<double>(train.size());
  for (int s = 0; s < kNumSensors; ++s) {
    double sum = 0.0;
    for (const RawRecord& r : train) sum += r.sensors[static_cast<std::size_t>(s)];
    const double mean = sum / n;
    double ss = 0.0;
    for (const RawRecord& r : train) {
      const double d = r.sensors[static_cast<std::size_t>(s)] - mean;
      ss += d * d;
    }
    if (std::sqrt(ss / n) > std_threshold) mask.kept.push_back(s);
  }
  return mask;
}

ScalerStats fit_scaler(std::span<const RawRecord> train, const ChannelMask& mask) {
  if (train.empty()) throw InputError("data: empty training set");
  if (mask.kept.empty()) throw InputError("data: empty channel mask");
  ScalerStats stats;
  const double n = static_cast<double>(train.size());
  for (int s : mask.kept) {
    double sum = 0.0;
    for (const RawRecord& r : train) sum += r.sensors[static_cast<std::size_t>(s)];
    const double mean = sum / n;
    double ss = 0.0;
    for (const RawRecord& r : train) {
      const double d = r.sensors[static_cast<std::size_t>(s)] - mean;
      ss += d * d;
    }
    const double stddev = std::sqrt(ss / n);
    if (stddev < 1e-12)
      throw InputError("data: zero standard deviation for kept sensor " + std::to_string(s + 1));
    stats.mean.push_back(mean);
    stats.stddev.push_back(stddev);
  }
  return stats;
}

std::vector<UnitSeries> apply_scaler(const ScalerStats& stats, const ChannelMask& mask,
                                     std::span<const RawRecord> records) {
  if (stats.mean.size() != mask.kept.size())
    throw InputError("data: scaler stats do not match channel mask");
  std::vector<UnitSeries> series;
  for (const UnitView& uv : group_by_unit(records)) {
    UnitSeries s;
    s.unit = uv.unit;
    s.length = static_cast<int>(uv.count);
    s.n_channels = static_cast<int>(mask.kept.size());
    s.rows.reserve(uv.count * mask.kept.size());
    for (std::size_t i = 0; i < uv.count; ++i) {
      const RawRecord& r = records[uv.begin + i];
      if (r.cycle != static_cast<int>(i) + 1)
        throw InputError("data: unit " + std::to_string(uv.unit) +
                         " cycles are not consecutive from 1");
      for (std::size_t k = 0; k < mask.kept.size(); ++k) {
        const double raw = r.sensors[static_cast<std::size_t>(mask.kept[k])];
        s.rows.push_back((raw - stats.mean[k]) / stats.stddev[k]);
      }
    }
    series.push_back(std::move(s));
  }
  return series;
}

std::vector<double> label_piecewise_rul(int length, double early_rul) {
  std::vector<double> rul(static_cast<std::size_t>(length));
  for (int c = 1; c <= length; ++c)
    rul[static_cast<std::size_t>(c - 1)] = std::min(early_rul, static_cast<double>(length - c));
  return rul;
}

std::vector<double> label_linear_rul(int length) {
  std::vector<double> rul(static_cast<std::size_t>(length));
  for (int c = 1; c <= length; ++c) rul[static_cast<std::size_t>(c - 1)] = length - c;
  return rul;
}

std::vector<WindowSample> make_train_windows(const UnitSeries& series,
                                             std::span<const double> labels, int window) {
  if (static_cast<int>(labels.size()) != series.length)
    throw InputError("data: label count does not match series length");
  std::vector<WindowSample> out;
  if (series.length < window + 1) return out;
  const int C = series.n_channels;
  for (int t = 1; t <= series.length - window; ++t) {
    WindowSample w;
    w.unit = series.unit;
    w.end_cycle = t + window - 1;
    w.target = labels[static_cast<std::size_t>(t + window - 1)];  // label at cycle t+window
    const auto first = series.rows.begin() + static_cast<std::ptrdiff_t>((t - 1) * C);
    w.x.assign(first, first + static_cast<std::ptrdiff_t>(window * C));
    out.push_back(std::move(w));
  }
  return out;
}

WindowSample make_test_window(const UnitSeries& series, int window, double true_rul, bool cap,
                              double early_rul) {
  WindowSample w;
  w.unit = series.unit;
  w.end_cycle = series.length;
  w.target = cap ? std::min(true_rul, early_rul) : true_rul;
  const int C = series.n_channels;
  w.x.reserve(static_cast<std::size_t>(window) * C);
  const int pad = std::max(0, window - series.length);
  for (int i = 0; i < pad; ++i)
    w.x.insert(w.x.end(), series.rows.begin(), series.rows.begin() + C);
  const int start = std::max(0, series.length - window);
  w.x.insert(w.x.end(), series.rows.begin() + static_cast<std::ptrdiff_t>(start * C),
             series.rows.end());
  return w;
}

namespace {

std::vector<RawRecord> parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("data: cannot open " + path);
  return parse_cmapss(in);
}

std::vector<double> parse_rul_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("data: cannot open " + path);
  std::vector<double> ruls;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    ruls.push_back(parse_token(tok, line_no));
    std::string extra;
    if (ls >> extra) throw ParseError(line_no, "expected a single RUL value");
  }
  return ruls;
}

}  // namespace

Dataset prepare_dataset(const std::string& train_path, const std::string& test_path,
                        const std::string& rul_path, const PrepareOptions& opts) {
  if (opts.window < 1) throw InputError("data: window must be >= 1");
  if (opts.degradation != "piecewise" && opts.degradation != "linear")
    throw InputError("data: unknown degradation model '" + opts.degradation + "'");

  std::vector<RawRecord> train_records = parse_file(train_path);
  if (train_records.empty()) throw InputError("data: no records in " + train_path);

  if (opts.max_units > 0) {
    std::vector<int> ids;
    for (const RawRecord& r : train_records)
      if (ids.empty() || ids.back() != r.unit) ids.push_back(r.unit);
    if (static_cast<int>(ids.size()) > opts.max_units) {
      const int cutoff = ids[static_cast<std::size_t>(opts.max_units - 1)];
      std::erase_if(train_records, [cutoff](const RawRecord& r) { return r.unit > cutoff; });
    }
  }

  Dataset ds;
  ds.window = opts.window;
  ds.early_rul = opts.early_rul;
  ds.rul_capped = opts.cap_test_rul;
  ds.seed = opts.seed;
  ds.mask = drop_constant_sensors(train_records, opts.const_threshold);
  if (ds.mask.kept.empty()) throw InputError("data: every sensor is constant");
  ds.stats = fit_scaler(train_records, ds.mask);
  ds.n_channels = static_cast<int>(ds.mask.kept.size());

  const std::vector<UnitSeries> train_series = apply_scaler(ds.stats, ds.mask, train_records);
  ds.n_train_units = static_cast<int>(train_series.size());
  ds.min_train_run = train_series.front().length;
  for (const UnitSeries& s : train_series) ds.min_train_run = std::min(ds.min_train_run, s.length);

  // engine-level validation split
  std::vector<int> unit_ids;
  for (const UnitSeries& s : train_series) unit_ids.push_back(s.unit);
  Rng rng = Rng::stream(opts.seed, 0xDA7A5917ULL, 0);
  rng.shuffle(unit_ids);
  const int n_val = static_cast<int>(std::lround(opts.val_fraction * static_cast<double>(unit_ids.size())));
  ds.val_units.assign(unit_ids.begin(), unit_ids.begin() + n_val);
  std::sort(ds.val_units.begin(), ds.val_units.end());

  for (const UnitSeries& s : train_series) {
    const std::vector<double> labels = opts.degradation == "piecewise"
                                           ? label_piecewise_rul(s.length, opts.early_rul)
                                           : label_linear_rul(s.length);
    std::vector<WindowSample> windows = make_train_windows(s, labels, opts.window);
    if (windows.empty()) {
      ds.warnings.push_back("unit " + std::to_string(s.unit) + " has only " +
                            std::to_string(s.length) + " cycles, skipped (needs " +
                            std::to_string(opts.window + 1) + ")");
      continue;
    }
    const bool is_val =
        std::binary_search(ds.val_units.begin(), ds.val_units.end(), s.unit);
    auto& dst = is_val ? ds.val : ds.train;
    for (WindowSample& w : windows) dst.push_back(std::move(w));
  }
  if (ds.train.empty()) throw InputError("data: no training windows (all engines too short?)");

  const std::vector<RawRecord> test_records = parse_file(test_path);
  const std::vector<UnitSeries> test_series = apply_scaler(ds.stats, ds.mask, test_records);
  const std::vector<double> true_ruls = parse_rul_file(rul_path);
  if (true_ruls.size() != test_series.size())
    throw InputError("data: RUL file has " + std::to_string(true_ruls.size()) +
                     " entries for " + std::to_string(test_series.size()) + " test units");
  for (std::size_t i = 0; i < test_series.size(); ++i) {
    ds.test.push_back(make_test_window(test_series[i], opts.window, true_ruls[i],
                                       opts.cap_test_rul, opts.early_rul));
  }

  ds.source_hashes = {fnv1a64_file(train_path), fnv1a64_file(test_path),
                      fnv1a64_file(rul_path)};
  return ds;
}

namespace {

constexpr char kCacheMagic[8] = {'Q', 'R', 'U', 'L', 'D', 'S', '1', '\n'};

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw InputError("data: truncated cache file");
  return v;
}

void put_windows(std::ostream& out, const std::vector<WindowSample>& ws) {
  put<std::uint64_t>(out, ws.size());
  for (const WindowSample& w : ws) {
    put<std::int32_t>(out, w.unit);
    put<std::int32_t>(out, w.end_cycle);
    put<double>(out, w.target);
    put<std::uint64_t>(out, w.x.size());
    out.write(reinterpret_cast<const char*>(w.x.data()),
              static_cast<std::streamsize>(w.x.size() * sizeof(double)));
  }
}

std::vector<WindowSample> get_windows(std::istream& in) {
  const auto n = get<std::uint64_t>(in);
  std::vector<WindowSample> ws(n);
  for (auto& w : ws) {
    w.unit = get<std::int32_t>(in);
    w.end_cycle = get<std::int32_t>(in);
    w.target = get<double>(in);
    const auto len = get<std::uint64_t>(in);
    w.x.resize(len);
    in.read(reinterpret_cast<char*>(w.x.data()),
            static_cast<std::streamsize>(len * sizeof(double)));
    if (!in) throw InputError("data: truncated cache file");
  }
  return ws;
}

}  // namespace

void save_cache(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("data: cannot write cache " + path);
  out.write(kCacheMagic, sizeof kCacheMagic);
  put<std::uint32_t>(out, 1);  // version
  put<std::int32_t>(out, ds.window);
  put<std::int32_t>(out, ds.n_channels);
  put<double>(out, ds.early_rul);
  put<std::uint8_t>(out, ds.rul_capped ? 1 : 0);
  put<std::uint64_t>(out, ds.seed);
  for (std::uint64_t h : ds.source_hashes) put<std::uint64_t>(out, h);
  put<std::int32_t>(out, ds.n_train_units);
  put<std::int32_t>(out, ds.min_train_run);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.mask.kept.size()));
  for (int s : ds.mask.kept) put<std::int32_t>(out, s);
  for (double m : ds.stats.mean) put<double>(out, m);
  for (double s : ds.stats.stddev) put<double>(out, s);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.val_units.size()));
  for (int u : ds.val_units) put<std::int32_t>(out, u);
  put_windows(out, ds.train);
  put_windows(out, ds.val);
  put_windows(out, ds.test);
}

Dataset load_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("data: cannot open cache " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kCacheMagic, sizeof magic) != 0)
    throw InputError("data: " + path + " is not a dataset cache");
  if (get<std::uint32_t>(in) != 1) throw InputError("data: unsupported cache version");
  Dataset ds;
  ds.window = get<std::int32_t>(in);
  ds.n_channels = get<std::int32_t>(in);
  ds.early_rul = get<double>(in);
  ds.rul_capped = get<std::uint8_t>(in) != 0;
  ds.seed = get<std::uint64_t>(in);
  for (auto& h : ds.source_hashes) h = get<std::uint64_t>(in);
  ds.n_train_units = get<std::int32_t>(in);
  ds.min_train_run = get<std::int32_t>(in);
  const auto n_kept = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_kept; ++i) ds.mask.kept.push_back(get<std::int32_t>(in));
  for (std::uint32_t i = 0; i < n_kept; ++i) ds.stats.mean.push_back(get<double>(in));
  for (std::uint32_t i = 0; i < n_kept; ++i) ds.stats.stddev.push_back(get<double>(in));
  const auto n_val = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_val; ++i) ds.val_units.push_back(get<std::int32_t>(in));
  ds.train = get_windows(in);
  ds.val = get_windows(in);
  ds.test = get_windows(in);
  return ds;
}

}  // namespace qrul::data
