#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "cli/report.hpp"
#include "iongate/constants.hpp"
#include "iongate/error.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

namespace fs = std::filesystem;
using namespace iongate;
using namespace iongate::cli;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string shipped_config() { return read_file(fs::path(IONGATE_SOURCE_DIR) / "configs" / "chain19.toml"); }

/// Shipped config with the pair list cut down to the first pair.
std::string single_pair_config() {
  std::string s = shipped_config();
  const auto second = s.find("[[pairs]]", s.find("[[pairs]]") + 1);
  const auto scan = s.find("[scan]");
  return s.substr(0, second) + s.substr(scan);
}

std::string without_pairs() {
  std::string s = shipped_config();
  const auto first = s.find("[[pairs]]");
  const auto scan = s.find("[scan]");
  s = s.substr(0, first) + s.substr(scan);
  // budget and repeat sections refer to configured pairs
  s = std::regex_replace(s, std::regex("\nions = \\[5, 6\\]"), "");
  return s;
}

class Workspace : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("iongate_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

  int run(std::vector<std::string> args) {
    std::vector<const char*> argv{"iongate"};
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return run_cli(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

}  // namespace

TEST(Report, NumbersUseSeventeenDigits) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Report, JsonWritesNonFiniteAsNull) {
  Json j;
  j["a"] = 0.1;
  j["b"] = std::nan("");
  j["c"] = Json::array();
  EXPECT_EQ(dump_json(j), "{\n  \"a\": 0.10000000000000001,\n  \"b\": null,\n  \"c\": []\n}\n");
}

TEST(Report, CsvCarriesHeaderAndChecksRowWidth) {
  CsvWriter csv("00ff", {"a", "b"});
  csv.cell(1LL).cell(std::string("x,y")).end_row();
  EXPECT_EQ(csv.str(), std::string("# iongate ") + kToolVersion + " config_fnv1a=00ff\na,b\n1,\"x,y\"\n");
  csv.cell(2.5);
  EXPECT_THROW(csv.end_row(), Error);
}

TEST(Config, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xaf63dc4c8601ec8cULL), "af63dc4c8601ec8c");
}

TEST(Config, ShippedConfigParses) {
  const RunConfig c = parse_config(shipped_config(), ConfigFormat::Toml);
  EXPECT_EQ(c.trap.n_ions, 19u);
  ASSERT_EQ(c.pairs.size(), 3u);
  EXPECT_EQ(c.pairs[2].ions, (IonPair{9, 14}));
  EXPECT_NEAR(c.pairs[0].mu, 0.995 * constants::two_pi * 3e6, 1e-6);
  EXPECT_NEAR(c.delta_k, 2.0 * constants::two_pi / 355e-9, 1e-3);
  EXPECT_TRUE(c.budget.requirements.has_value());
}

TEST(Config, JsonMatchesToml) {
  const std::string json = R"({
    "trap": {"n_ions": 5, "omega_x_hz": 3e6, "omega_y_hz": 3.2e6,
             "axial": {"kind": "harmonic", "omega_z_hz": 2e5}},
    "beam": {"wavelength_m": 355e-9},
    "thermal": {"n_bar": 0.5},
    "pairs": [{"ions": [1, 2], "n_seg": 4, "tau_s": 50e-6, "mu_hz": 2.9e6}]
  })";
  const std::string toml = R"(
[trap]
n_ions = 5
omega_x_hz = 3e6
omega_y_hz = 3.2e6
[trap.axial]
kind = "harmonic"
omega_z_hz = 2e5
[beam]
wavelength_m = 355e-9
[thermal]
n_bar = 0.5
[[pairs]]
ions = [1, 2]
n_seg = 4
tau_s = 50e-6
mu_hz = 2.9e6
)";
  const RunConfig a = parse_config(json, ConfigFormat::Json);
  const RunConfig b = parse_config(toml, ConfigFormat::Toml);
  EXPECT_EQ(a.trap.n_ions, b.trap.n_ions);
  EXPECT_EQ(std::get<HarmonicAxial>(a.trap.axial).omega_z, std::get<HarmonicAxial>(b.trap.axial).omega_z);
  EXPECT_EQ(a.pairs[0].mu, b.pairs[0].mu);
  EXPECT_EQ(a.pairs[0].tau, b.pairs[0].tau);
}

TEST(Config, RejectsUnknownKeyWithPath) {
  std::string s = shipped_config();
  s.replace(s.find("gamma4 = 4.3"), 12, "gamma4 = 4.3\ngama4 = 4.3");
  try {
    parse_config(s, ConfigFormat::Toml);
    FAIL() << "expected ConfigInvalid";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigInvalid);
    EXPECT_NE(std::string(e.what()).find("trap.axial.gama4"), std::string::npos) << e.what();
  }
}

TEST(Config, RejectsInconsistentFields) {
  std::string both = shipped_config();
  both.replace(both.find("n_bar = 0.5"), 11, "n_bar = 0.5\ntemperature_k = 1e-3");
  EXPECT_THROW(parse_config(both, ConfigFormat::Toml), Error);
  std::string outside = shipped_config();
  outside.replace(outside.find("ions = [9, 14]"), 14, "ions = [9, 19]");
  EXPECT_THROW(parse_config(outside, ConfigFormat::Toml), Error);
  EXPECT_THROW(parse_config("trap = 3", ConfigFormat::Toml), Error);
  EXPECT_THROW(parse_config("{not json", ConfigFormat::Json), Error);
}

TEST_F(Workspace, UnknownKeyExitsWithTwo) {
  std::string s = shipped_config();
  s.replace(s.find("[beam]"), 6, "[beam]\ncolour = \"uv\"");
  const fs::path cfg = write("bad.toml", s);
  EXPECT_EQ(run({"crystal", "--config", cfg.string(), "--out", (dir_ / "o").string()}), 2);
  EXPECT_NE(err_.str().find("beam.colour"), std::string::npos) << err_.str();
  EXPECT_FALSE(fs::exists(dir_ / "o"));
}

TEST_F(Workspace, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"crystal"}), 2);
  EXPECT_EQ(run({"unknown", "--config", "x.toml"}), 2);
  const fs::path cfg = write("c.toml", shipped_config());
  EXPECT_EQ(run({"design", "--config", cfg.string(), "--pair", "5;6"}), 2);
  EXPECT_EQ(run({"crystal", "--config", (dir_ / "missing.toml").string()}), 2);
}

TEST_F(Workspace, EmptyPairListNamesField) {
  const fs::path cfg = write("nopairs.toml", without_pairs());
  EXPECT_EQ(run({"suite", "--config", cfg.string(), "--out", (dir_ / "o").string()}), 2);
  EXPECT_NE(err_.str().find("pairs"), std::string::npos) << err_.str();
}

TEST_F(Workspace, DesignNeedsDetuning) {
  const fs::path cfg = write("nopairs.toml", without_pairs());
  const std::string out = (dir_ / "o").string();
  EXPECT_EQ(run({"design", "--config", cfg.string(), "--out", out, "--pair", "5,6", "--nseg", "10", "--tau",
                 "80.4e-6"}),
            2);
  EXPECT_NE(err_.str().find("mu_hz"), std::string::npos) << err_.str();
  EXPECT_EQ(run({"design", "--config", cfg.string(), "--out", out, "--pair", "5,6", "--nseg", "10", "--tau",
                 "80.4e-6", "--mu", "2985000"}),
            0)
      << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "o" / "design_5_6.json"));
  EXPECT_TRUE(fs::exists(dir_ / "o" / "segments_5_6.csv"));
}

TEST_F(Workspace, CrystalSpacingIsUniform) {
  const fs::path cfg = write("c.toml", shipped_config());
  ASSERT_EQ(run({"crystal", "--config", cfg.string(), "--out", (dir_ / "o").string()}), 0) << err_.str();
  const Json j = Json::parse(read_file(dir_ / "o" / "crystal.json"));
  EXPECT_NEAR(j["spacing_rsd"].get<double>(), 0.0227, 0.002);
  EXPECT_GT(j["harmonic_matched"]["spacing_rsd"].get<double>(), 3.0 * j["spacing_rsd"].get<double>());
  EXPECT_EQ(j["positions_m"].size(), 19u);
  EXPECT_LT(j["modes"]["spread_fraction"].get<double>(), 0.01);
  const std::string csv = read_file(dir_ / "o" / "modes.csv");
  EXPECT_EQ(csv.rfind("# iongate ", 0), 0u);
  EXPECT_NE(csv.find("mode,omega_hz,eta\n"), std::string::npos);
}

TEST_F(Workspace, OutputsAreByteIdenticalAcrossRunsAndThreads) {
  const fs::path cfg = write("c.toml", single_pair_config());
  const std::vector<std::string> commands{"crystal", "suite", "budget", "repeat", "scan"};
  const std::vector<std::pair<std::string, std::string>> runs{{"a", "1"}, {"b", "1"}, {"c", "3"}};
  for (const auto& [name, threads] : runs) {
    for (const std::string& c : commands) {
      ASSERT_EQ(run({c, "--config", cfg.string(), "--out", (dir_ / name).string(), "--threads", threads}), 0)
          << c << ": " << err_.str();
    }
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(dir_ / "a")) {
    const std::string reference = read_file(entry.path());
    for (const char* other : {"b", "c"}) {
      EXPECT_EQ(read_file(dir_ / other / entry.path().filename()), reference) << entry.path().filename();
    }
    ++compared;
  }
  EXPECT_GE(compared, 10u);
}

TEST_F(Workspace, SeedChangesRepeatDraws) {
  const fs::path cfg = write("c.toml", single_pair_config());
  ASSERT_EQ(run({"repeat", "--config", cfg.string(), "--out", (dir_ / "a").string(), "--seed", "1"}), 0);
  ASSERT_EQ(run({"repeat", "--config", cfg.string(), "--out", (dir_ / "b").string(), "--seed", "2"}), 0);
  const Json a = Json::parse(read_file(dir_ / "a" / "repeat.json"));
  const Json b = Json::parse(read_file(dir_ / "b" / "repeat.json"));
  EXPECT_EQ(a["seed"].get<std::uint64_t>(), 1u);
  EXPECT_NE(a["points"][5]["infidelity"].get<double>(), b["points"][5]["infidelity"].get<double>());
}

TEST_F(Workspace, BudgetListsEveryEntry) {
  const fs::path cfg = write("c.toml", shipped_config());
  ASSERT_EQ(run({"budget", "--config", cfg.string(), "--out", (dir_ / "o").string()}), 0) << err_.str();
  const Json j = Json::parse(read_file(dir_ / "o" / "budget.json"));
  // the longest configured gate is used by default
  EXPECT_EQ(j["ions"][0].get<int>(), 9);
  EXPECT_EQ(j["entries"].size(), 11u);
  for (const auto& e : j["entries"]) {
    if (e["reference_order"].is_null() || e["value"].is_null()) continue;
    const double ratio = e["value"].get<double>() / e["reference_order"].get<double>();
    EXPECT_GT(ratio, 0.1) << e["source"];
    EXPECT_LT(ratio, 10.0) << e["source"];
  }
  const std::string req = read_file(dir_ / "o" / "requirements.csv");
  EXPECT_NE(req.find("row,value,limit,pass\n"), std::string::npos);
}
