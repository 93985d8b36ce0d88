#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qrul/data.hpp"
#include "qrul/rng.hpp"
#include "qrul/synth.hpp"

using namespace qrul;
using data::ChannelMask;
using data::RawRecord;
using data::ScalerStats;
using data::UnitSeries;

namespace {

std::string record_line(int unit, int cycle, double sensor_base) {
  std::ostringstream os;
  os << unit << ' ' << cycle << " -0.0007 -0.0004 100.0";
  for (int s = 0; s < 21; ++s) os << ' ' << sensor_base + s;
  return os.str();
}

std::vector<RawRecord> make_records(int n_units, int len, Rng& rng,
                                    int constant_sensor = -1) {
  std::vector<RawRecord> records;
  for (int u = 1; u <= n_units; ++u) {
    for (int c = 1; c <= len; ++c) {
      RawRecord r;
      r.unit = u;
      r.cycle = c;
      for (auto& o : r.op_settings) o = rng.normal() * 0.001;
      for (int s = 0; s < 21; ++s)
        r.sensors[static_cast<std::size_t>(s)] = 10.0 * s + rng.normal();
      if (constant_sensor >= 0) r.sensors[static_cast<std::size_t>(constant_sensor)] = 642.0;
      records.push_back(r);
    }
  }
  return records;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("qrul-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

}  // namespace

TEST_CASE("parse_cmapss") {
  SUBCASE("column mapping") {
    std::istringstream in(record_line(1, 1, 640.0) + "\n" + record_line(1, 2, 641.0) + "\n");
    const auto records = data::parse_cmapss(in);
    REQUIRE(records.size() == 2);
    CHECK(records[0].unit == 1);
    CHECK(records[0].cycle == 1);
    CHECK(records[0].op_settings[0] == doctest::Approx(-0.0007));
    CHECK(records[0].sensors[0] == doctest::Approx(640.0));
    CHECK(records[0].sensors[20] == doctest::Approx(660.0));
  }

  SUBCASE("empty stream gives an empty sequence") {
    std::istringstream in("");
    CHECK(data::parse_cmapss(in).empty());
  }

  SUBCASE("wrong column count names the line") {
    std::istringstream in(record_line(1, 1, 640.0) + "\n1 2 3\n");
    try {
      data::parse_cmapss(in);
      FAIL("expected ParseError");
    } catch (const data::ParseError& e) {
      CHECK(e.line == 2);
    }
  }

  SUBCASE("non-numeric token is a parse error") {
    std::istringstream in("1 1 a b c 1 2 3 4 5 6 7 8 9 10 11 12 13 14 15 16 17 18 19 20 21\n");
    CHECK_THROWS_AS(data::parse_cmapss(in), data::ParseError);
  }

  SUBCASE("rows are sorted by (unit, cycle)") {
    std::istringstream in(record_line(2, 1, 0.0) + "\n" + record_line(1, 2, 0.0) + "\n" +
                          record_line(1, 1, 0.0) + "\n");
    const auto records = data::parse_cmapss(in);
    CHECK(records[0].unit == 1);
    CHECK(records[0].cycle == 1);
    CHECK(records[2].unit == 2);
  }

  SUBCASE("duplicate cycle within a unit is rejected") {
    std::istringstream in(record_line(1, 1, 0.0) + "\n" + record_line(1, 1, 0.0) + "\n");
    CHECK_THROWS_AS(data::parse_cmapss(in), InputError);
  }

  SUBCASE("serialize then parse is the identity") {
    Rng rng(3);
    const auto records = make_records(2, 5, rng);
    std::ostringstream os;
    data::serialize_records(records, os);
    std::istringstream in(os.str());
    const auto back = data::parse_cmapss(in);
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      CHECK(back[i].unit == records[i].unit);
      CHECK(back[i].cycle == records[i].cycle);
      for (int s = 0; s < 21; ++s)
        CHECK(back[i].sensors[static_cast<std::size_t>(s)] ==
              records[i].sensors[static_cast<std::size_t>(s)]);
      for (int k = 0; k < 3; ++k)
        CHECK(back[i].op_settings[static_cast<std::size_t>(k)] ==
              records[i].op_settings[static_cast<std::size_t>(k)]);
    }
  }
}

TEST_CASE("drop_constant_sensors") {
  Rng rng(5);

  SUBCASE("a constant sensor is excluded") {
    const auto records = make_records(3, 40, rng, 2);
    const ChannelMask mask = data::drop_constant_sensors(records);
    CHECK(mask.kept.size() == 20);
    for (int s : mask.kept) CHECK(s != 2);
  }

  SUBCASE("all-constant input gives an empty mask and a downstream hard error") {
    std::vector<RawRecord> records = make_records(1, 10, rng);
    for (auto& r : records)
      for (auto& s : r.sensors) s = 7.0;
    const ChannelMask mask = data::drop_constant_sensors(records);
    CHECK(mask.kept.empty());
    CHECK_THROWS_AS(data::fit_scaler(records, mask), InputError);
  }

  SUBCASE("empty training set is an error") {
    CHECK_THROWS_AS(data::drop_constant_sensors({}), InputError);
  }
}

TEST_CASE("fit_scaler and apply_scaler") {
  SUBCASE("population statistics on a hand case") {
    // channel values 1, 2, 3 -> mean 2, population std sqrt(2/3)
    std::vector<RawRecord> records;
    for (int c = 1; c <= 3; ++c) {
      RawRecord r;
      r.unit = 1;
      r.cycle = c;
      for (int s = 0; s < 21; ++s) r.sensors[static_cast<std::size_t>(s)] = c;
      records.push_back(r);
    }
    ChannelMask mask;
    mask.kept = {0};
    const ScalerStats stats = data::fit_scaler(records, mask);
    CHECK(stats.mean[0] == doctest::Approx(2.0));
    CHECK(stats.stddev[0] == doctest::Approx(std::sqrt(2.0 / 3.0)));
    const auto series = data::apply_scaler(stats, mask, records);
    REQUIRE(series.size() == 1);
    CHECK(series[0].rows[0] == doctest::Approx(-1.22474487).epsilon(1e-6));
    CHECK(series[0].rows[1] == doctest::Approx(0.0));
    CHECK(series[0].rows[2] == doctest::Approx(1.22474487).epsilon(1e-6));
  }

  SUBCASE("train data scaled with its own stats has zero mean and unit std") {
    Rng rng(7);
    const auto records = make_records(4, 60, rng);
    const ChannelMask mask = data::drop_constant_sensors(records);
    const ScalerStats stats = data::fit_scaler(records, mask);
    const auto series = data::apply_scaler(stats, mask, records);
    const std::size_t C = mask.kept.size();
    for (std::size_t ch = 0; ch < C; ++ch) {
      double sum = 0.0, sq = 0.0;
      std::size_t n = 0;
      for (const auto& s : series) {
        for (int t = 0; t < s.length; ++t) {
          const double v = s.rows[static_cast<std::size_t>(t) * C + ch];
          sum += v;
          sq += v * v;
          ++n;
        }
      }
      const double mean = sum / static_cast<double>(n);
      CHECK(std::abs(mean) < 1e-9);
      CHECK(std::abs(std::sqrt(sq / static_cast<double>(n) - mean * mean) - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("label_piecewise_rul") {
  const auto labels = data::label_piecewise_rul(200, 125.0);
  CHECK(labels[49] == 125.0);   // cycle 50: 150 capped
  CHECK(labels[179] == 20.0);   // cycle 180
  CHECK(labels[199] == 0.0);    // failure cycle
  const auto lin = data::label_linear_rul(200);
  CHECK(lin[49] == 150.0);
  CHECK(lin[199] == 0.0);
}

TEST_CASE("make_train_windows") {
  UnitSeries s;
  s.unit = 9;
  s.length = 192;
  s.n_channels = 1;
  for (int c = 1; c <= s.length; ++c) s.rows.push_back(static_cast<double>(c));
  const auto labels = data::label_piecewise_rul(s.length, 125.0);
  const auto windows = data::make_train_windows(s, labels, 30);

  SUBCASE("window count is L - W") { CHECK(windows.size() == 162); }

  SUBCASE("last window targets RUL 0, first long window targets the cap") {
    CHECK(windows.back().target == 0.0);
    CHECK(windows.front().target == 125.0);
  }

  SUBCASE("targets are non-increasing and step by one below the cap") {
    for (std::size_t i = 1; i < windows.size(); ++i) {
      CHECK(windows[i].target <= windows[i - 1].target);
      if (windows[i - 1].target < 125.0)
        CHECK(windows[i - 1].target - windows[i].target == 1.0);
      CHECK(windows[i].target >= 0.0);
      CHECK(windows[i].target <= 125.0);
    }
  }

  SUBCASE("window rows align with cycles (ramp check)") {
    // sensor value equals the cycle number, so row j of window t is t + j
    for (std::size_t w = 0; w < windows.size(); w += 37) {
      const int t = static_cast<int>(w) + 1;
      for (int j = 0; j < 30; ++j)
        CHECK(windows[w].x[static_cast<std::size_t>(j)] == static_cast<double>(t + j));
    }
  }

  SUBCASE("series shorter than W + 1 yields nothing") {
    UnitSeries tiny;
    tiny.unit = 1;
    tiny.length = 30;
    tiny.n_channels = 1;
    tiny.rows.assign(30, 0.0);
    const auto empty =
        data::make_train_windows(tiny, data::label_piecewise_rul(30, 125.0), 30);
    CHECK(empty.empty());
  }
}

TEST_CASE("make_test_window") {
  UnitSeries s;
  s.unit = 4;
  s.n_channels = 1;

  SUBCASE("length 31 takes the last 30 cycles, no padding") {
    s.length = 31;
    for (int c = 1; c <= 31; ++c) s.rows.push_back(static_cast<double>(c));
    const auto w = data::make_test_window(s, 30, 80.0, true, 125.0);
    CHECK(w.x.size() == 30);
    CHECK(w.x.front() == 2.0);
    CHECK(w.x.back() == 31.0);
    CHECK(w.target == 80.0);
  }

  SUBCASE("length 20 left-pads with ten copies of the first row") {
    s.length = 20;
    s.rows.clear();
    for (int c = 1; c <= 20; ++c) s.rows.push_back(static_cast<double>(c));
    const auto w = data::make_test_window(s, 30, 80.0, true, 125.0);
    CHECK(w.x.size() == 30);
    for (int j = 0; j < 10; ++j) CHECK(w.x[static_cast<std::size_t>(j)] == 1.0);
    for (int j = 0; j < 20; ++j) CHECK(w.x[static_cast<std::size_t>(10 + j)] == j + 1.0);
  }

  SUBCASE("target capping is configurable") {
    s.length = 40;
    s.rows.assign(40, 0.0);
    CHECK(data::make_test_window(s, 30, 140.0, true, 125.0).target == 125.0);
    CHECK(data::make_test_window(s, 30, 140.0, false, 125.0).target == 140.0);
  }
}

TEST_CASE("prepare_dataset on the synthetic fixture") {
  TempDir dir;
  data::SynthOptions sopts;
  sopts.n_train_units = 25;
  sopts.n_test_units = 25;
  sopts.seed = 99;
  data::write_synthetic_cmapss(dir.path.string(), sopts);

  data::PrepareOptions popts;
  popts.seed = 5;
  const data::Dataset ds = data::prepare_dataset(
      (dir.path / "train_FD001.txt").string(), (dir.path / "test_FD001.txt").string(),
      (dir.path / "RUL_FD001.txt").string(), popts);

  SUBCASE("shape summary") {
    CHECK(ds.n_train_units == 25);
    CHECK(ds.min_train_run == 128);
    CHECK(ds.n_channels == 14);
    CHECK(ds.test.size() == 25);
    CHECK(ds.val_units.size() == 5);
  }

  SUBCASE("window counts per engine are L - W") {
    std::size_t expected = 0;
    {
      std::ifstream in(dir.path / "train_FD001.txt");
      const auto records = data::parse_cmapss(in);
      const auto series = data::apply_scaler(ds.stats, ds.mask, records);
      for (const auto& s : series) expected += static_cast<std::size_t>(s.length - ds.window);
    }
    CHECK(ds.train.size() + ds.val.size() == expected);
  }

  SUBCASE("train targets stay in [0, early_rul]") {
    for (const auto& w : ds.train) {
      CHECK(w.target >= 0.0);
      CHECK(w.target <= 125.0);
    }
  }

  SUBCASE("no leakage: pipeline stats equal a train-only fit") {
    std::ifstream in(dir.path / "train_FD001.txt");
    const auto train_records = data::parse_cmapss(in);
    const ChannelMask mask = data::drop_constant_sensors(train_records);
    const ScalerStats stats = data::fit_scaler(train_records, mask);
    CHECK(mask.kept == ds.mask.kept);
    for (std::size_t i = 0; i < stats.mean.size(); ++i) {
      CHECK(stats.mean[i] == ds.stats.mean[i]);
      CHECK(stats.stddev[i] == ds.stats.stddev[i]);
    }
  }

  SUBCASE("validation split holds out whole engines") {
    for (const auto& w : ds.val)
      CHECK(std::binary_search(ds.val_units.begin(), ds.val_units.end(), w.unit));
    for (const auto& w : ds.train)
      CHECK_FALSE(std::binary_search(ds.val_units.begin(), ds.val_units.end(), w.unit));
  }

  SUBCASE("cache round trip") {
    const std::string cache = (dir.path / "cache.bin").string();
    data::save_cache(ds, cache);
    const data::Dataset back = data::load_cache(cache);
    CHECK(back.window == ds.window);
    CHECK(back.n_channels == ds.n_channels);
    CHECK(back.mask.kept == ds.mask.kept);
    CHECK(back.train.size() == ds.train.size());
    CHECK(back.val.size() == ds.val.size());
    CHECK(back.test.size() == ds.test.size());
    CHECK(back.source_hashes == ds.source_hashes);
    for (std::size_t i = 0; i < ds.train.size(); i += 199) {
      CHECK(back.train[i].unit == ds.train[i].unit);
      CHECK(back.train[i].target == ds.train[i].target);
      CHECK(back.train[i].x == ds.train[i].x);
    }
  }

  SUBCASE("max_units subsets the fleet") {
    data::PrepareOptions sub = popts;
    sub.max_units = 10;
    const data::Dataset small = data::prepare_dataset(
        (dir.path / "train_FD001.txt").string(), (dir.path / "test_FD001.txt").string(),
        (dir.path / "RUL_FD001.txt").string(), sub);
    CHECK(small.n_train_units == 10);
    CHECK(small.test.size() == 25);  // test fleet untouched
  }

  SUBCASE("missing file is an input error") {
    CHECK_THROWS_AS(data::prepare_dataset((dir.path / "nope.txt").string(),
                                          (dir.path / "test_FD001.txt").string(),
                                          (dir.path / "RUL_FD001.txt").string(), popts),
                    InputError);
  }

  SUBCASE("RUL entry count mismatch is a hard error") {
    const std::string bad_rul = (dir.path / "bad_rul.txt").string();
    std::ofstream out(bad_rul);
    out << "10\n20\n";
    out.close();
    CHECK_THROWS_AS(data::prepare_dataset((dir.path / "train_FD001.txt").string(),
                                          (dir.path / "test_FD001.txt").string(), bad_rul, popts),
                    InputError);
  }
}
