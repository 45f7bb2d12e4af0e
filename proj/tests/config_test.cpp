#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "ient/config.hpp"
#include "ient/flow.hpp"
#include "ient/io.hpp"
#include "testbeds.hpp"

using namespace ient;
using testbeds::vec;

namespace {

const char* kScalarText = R"(
# scalar system with one input
dim = 1
inputs = 1
field.0.0 = x1
field.1.0 = 1
u.lo = -1
u.hi = 1

tau = 2.5          # trailing comment
flag = true
word = 0.25 -0.5 1
seed = 42
)";

std::string temp_path(const std::string& name) {
  return testing::TempDir() + name;
}

}  // namespace

TEST(KeyValues, ParsesTypedValuesWithCommentsAndDefaults) {
  KeyValues kv = KeyValues::parse_text(kScalarText, "inline");
  EXPECT_TRUE(kv.has("dim"));
  EXPECT_FALSE(kv.has("absent"));
  EXPECT_EQ(kv.get_long("dim"), 1);
  EXPECT_DOUBLE_EQ(kv.get_double("tau"), 2.5);
  EXPECT_TRUE(kv.get_bool("flag", false));
  EXPECT_EQ(kv.get_seed("seed", 0), 42u);
  EXPECT_EQ(kv.get_seed("missing.seed", 7), 7u);
  EXPECT_EQ(kv.get_string("missing", "dflt"), "dflt");
  EXPECT_DOUBLE_EQ(kv.get_double("missing", 1.5), 1.5);
  EXPECT_EQ(kv.get_long("missing", 9), 9);

  std::vector<double> w = kv.get_list("word");
  ASSERT_EQ(w.size(), 3u);
  EXPECT_DOUBLE_EQ(w[1], -0.5);
  VectorXd v = kv.get_vec("word");
  EXPECT_EQ(v.size(), 3);
  EXPECT_DOUBLE_EQ(v[2], 1.0);
}

TEST(KeyValues, RejectsMalformedInput) {
  EXPECT_THROW(KeyValues::parse_text("just words\n"), ConfigError);
  EXPECT_THROW(KeyValues::parse_text("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(KeyValues::parse_text("bad key = 1\n"), ConfigError);
  EXPECT_THROW(KeyValues::parse_text("a =\n"), ConfigError);
  EXPECT_THROW(KeyValues::parse_text("= 1\n"), ConfigError);

  KeyValues kv = KeyValues::parse_text("a = zzz\nb = 1.5\nc = maybe\n", "f");
  EXPECT_THROW(kv.get_double("a"), ConfigError);
  EXPECT_THROW(kv.get_long("b"), ConfigError);
  EXPECT_THROW(kv.get_bool("c", true), ConfigError);
  EXPECT_THROW(kv.get_seed("a", 0), ConfigError);
  try {
    kv.raw("missing.key");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("missing.key"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("f"), std::string::npos);
  }
}

TEST(KeyValues, ReportsLineNumbersAndMissingFiles) {
  try {
    KeyValues::parse_text("a = 1\nbroken line\n", "cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("cfg:2"), std::string::npos);
  }
  try {
    KeyValues::parse_file("/nonexistent/path.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/path.cfg"),
              std::string::npos);
  }
}

TEST(Loaders, SystemMatchesHandWrittenTestbed) {
  KeyValues kv = KeyValues::parse_text(kScalarText);
  SystemSpec sys = load_system(kv);
  EXPECT_EQ(sys.dim(), 1);
  EXPECT_EQ(sys.inputs(), 1);

  auto ref = testbeds::scalar_unstable();
  ControlSignal u = ControlSignal::constant(vec(0.5), 1.0);
  VectorXd a = integrate(sys, vec(0.3), u, 2.0).back_state();
  VectorXd b = integrate(ref, vec(0.3), u, 2.0).back_state();
  EXPECT_NEAR(a[0], b[0], 1e-12);
}

TEST(Loaders, SystemRejectsIncompleteSpecs) {
  EXPECT_THROW(
      load_system(KeyValues::parse_text("dim = 1\ninputs = 1\n"
                                        "field.0.0 = x1\n"
                                        "u.lo = -1\nu.hi = 1\n")),
      ConfigError);  // field.1.0 missing
  EXPECT_THROW(
      load_system(KeyValues::parse_text("dim = 1\ninputs = 2\n"
                                        "field.0.0 = x1\nfield.1.0 = 1\n"
                                        "field.2.0 = 1\n"
                                        "u.lo = -1\nu.hi = 1 1\n")),
      ConfigError);  // u.lo too short
  EXPECT_THROW(
      load_system(KeyValues::parse_text("dim = 0\ninputs = 0\n")),
      ConfigError);
}

TEST(Loaders, RegionAndControlForms) {
  KeyValues kv = KeyValues::parse_text(
      "r.lo = -1 -1\nr.hi = 1 1\nr.cell = 0.5\n"
      "c.delta = 0.25\nc.steps = 2\nc.step.0 = 1 0\nc.step.1 = 0 -1\n"
      "k.delta = 1\nk.const = 0.5 0.5\n");
  Region r = load_region(kv, "r", 2);
  EXPECT_EQ(r.size(), 16u);

  ControlSignal word = load_control(kv, "c", 2);
  EXPECT_TRUE(word.periodic());
  EXPECT_EQ(word.steps(), 2);
  EXPECT_DOUBLE_EQ(word.dt(), 0.25);
  EXPECT_DOUBLE_EQ(word.value(0.3)[1], -1.0);

  ControlSignal cst = load_control(kv, "k", 2);
  EXPECT_EQ(cst.steps(), 1);
  EXPECT_DOUBLE_EQ(cst.value(5.0)[0], 0.5);

  EXPECT_THROW(load_region(kv, "r", 3), ConfigError);
  EXPECT_THROW(load_control(kv, "c", 3), ConfigError);
  ControlSignal empty = load_control(kv, "k", 0);
  EXPECT_EQ(empty.dims(), 0);
}

TEST(Io, CsvWriterEmitsRoundTrippableDoubles) {
  std::string path = temp_path("io_csv_test.csv");
  {
    CsvWriter csv(path, {"a", "b"});
    csv.row({1.0 / 3.0, 0.1});
    csv.row_raw({"7", "x"});
    EXPECT_THROW(csv.row({1.0}), ConfigError);
  }
  std::ifstream in(path);
  std::string all((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  EXPECT_NE(all.find("a,b\n"), std::string::npos);
  EXPECT_NE(all.find("0.33333333333333331"), std::string::npos);
  EXPECT_NE(all.find("7,x\n"), std::string::npos);
  std::remove(path.c_str());

  EXPECT_THROW(CsvWriter("/nonexistent/dir/f.csv", {"a"}), ConfigError);
  EXPECT_THROW(CsvWriter(temp_path("io_csv_hdr.csv"), {}), ConfigError);
}

TEST(Io, ConfigHashTracksValuesNotOrder) {
  KeyValues a = KeyValues::parse_text("x = 1\ny = 2\n");
  KeyValues b = KeyValues::parse_text("y = 2\n\n# c\nx = 1\n");
  KeyValues c = KeyValues::parse_text("x = 1\ny = 3\n");
  EXPECT_EQ(config_hash(a.entries()), config_hash(b.entries()));
  EXPECT_NE(config_hash(a.entries()), config_hash(c.entries()));
  EXPECT_EQ(config_hash(a.entries()).size(), 16u);
}

TEST(Io, TimestampIsUtcIso8601) {
  std::string ts = utc_timestamp();
  ASSERT_EQ(ts.size(), 20u);
  EXPECT_EQ(ts[4], '-');
  EXPECT_EQ(ts[10], 'T');
  EXPECT_EQ(ts.back(), 'Z');
}
