#include <gtest/gtest.h>

#include <filesystem>
#include <unistd.h>

#include "ionramp/cli.hpp"
#include "ionramp/config.hpp"
#include "ionramp/io.hpp"

using namespace ionramp;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("ionramp_cli_" + std::to_string(::getpid()) + "_" +
                                         ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string config(const std::string& body) {
    const auto path = root_ / "config.json";
    write_file(path, body);
    return path.string();
  }

  static std::size_t lines(const fs::path& p) {
    const std::string s = read_file(p);
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
  }

  fs::path root_;
};

const char* kSmall = R"({
  "schema_version": 1,
  "num_spins": 4,
  "ramp": {"family": "local-adiabatic", "tf_ms": 0.6},
  "sweep": {"tf_ms": [0, 0.3, 0.6]},
  "gap": {"grid": 60},
  "snapshots": 7,
  "repetitions": 500
})";

}  // namespace

TEST_F(CliTest, CouplingsForSixIons) {
  const auto out = root_ / "c";
  ASSERT_EQ(run_cli({"--out", out.string(), "couplings"}), kExitOk);
  // 15 pairs plus the header.
  EXPECT_EQ(lines(out / "couplings.csv"), 16u);
  const auto meta = nlohmann::json::parse(read_file(out / "couplings.json"));
  EXPECT_NEAR(meta["J_max_kHz"].get<double>(), 0.77, 1e-9);
  EXPECT_NEAR(meta["fit"]["alpha"].get<double>(), 1.0, 1e-6);
  EXPECT_NEAR(meta["B0_kHz"].get<double>(), 3.85, 1e-9);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run_cli(std::vector<std::string>{}), kExitConfig);
  EXPECT_EQ(run_cli({"nonsense"}), kExitConfig);
  EXPECT_EQ(run_cli({"--config", (root_ / "missing.json").string(), "couplings"}), kExitConfig);
  EXPECT_EQ(run_cli({"--config", config(R"({"schema_version": 1, "bogus": 1})"), "couplings"}), kExitConfig);
  EXPECT_EQ(run_cli({"--out", (root_ / "r").string(), "repro", "fig9"}), kExitConfig);
  // Without couplings nothing is coupled to the ground state.
  const auto zero = config(R"({"schema_version": 1, "couplings_kHz": [[0, 0, 0], [0, 0, 0], [0, 0, 0]], "B0_kHz": 1.0,
                                "gap": {"grid": 50}})");
  EXPECT_EQ(run_cli({"--config", zero, "--out", (root_ / "z").string(), "spectrum"}), kExitNumerical);
}

TEST_F(CliTest, FlagsOverrideConfigAndMetadataRoundTrips) {
  const auto cfg = config(kSmall);
  const auto out = root_ / "o";
  ASSERT_EQ(run_cli({"--config", cfg, "--out", out.string(), "--seed", "77", "--dense-cap", "3", "couplings"}), kExitOk);
  const auto meta = load_run_config((out / "run.json").string());
  EXPECT_EQ(meta.seed, 77u);
  EXPECT_EQ(meta.dense_cap, 3);
  EXPECT_EQ(meta.output_dir, out.string());
  EXPECT_EQ(meta.num_spins, 4);
  // Re-ingesting the emitted metadata reproduces it exactly.
  const auto again = root_ / "again";
  ASSERT_EQ(run_cli({"--config", (out / "run.json").string(), "--out", again.string(), "couplings"}), kExitOk);
  auto a = load_run_config((again / "run.json").string());
  a.output_dir = meta.output_dir;
  EXPECT_TRUE(a == meta);
}

TEST_F(CliTest, DeterministicOutputs) {
  const auto cfg = config(kSmall);
  const auto a = root_ / "a", b = root_ / "b";
  for (const auto& dir : {a, b}) {
    ASSERT_EQ(run_cli({"--config", cfg, "--out", dir.string(), "analyze"}), kExitOk);
    ASSERT_EQ(run_cli({"--config", cfg, "--out", dir.string(), "sweep"}), kExitOk);
  }
  for (const char* f : {"counts.csv", "prevalence.json", "distribution.csv", "sweep.csv", "gap_curve.csv"}) {
    EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
  }
  EXPECT_EQ(lines(a / "sweep.csv"), 1u + 3u * 3u);
  EXPECT_EQ(lines(a / "distribution.csv"), 17u);
}

TEST_F(CliTest, EvolveRampAndSpectrumOutputs) {
  const auto cfg = config(kSmall);
  const auto out = root_ / "e";
  ASSERT_EQ(run_cli({"--config", cfg, "--out", out.string(), "ramp"}), kExitOk);
  ASSERT_EQ(run_cli({"--config", cfg, "--out", out.string(), "evolve"}), kExitOk);
  ASSERT_EQ(run_cli({"--config", cfg, "--out", out.string(), "spectrum", "--sizes", "3,4"}), kExitOk);
  EXPECT_EQ(lines(out / "evolution.csv"), 8u);
  EXPECT_EQ(read_file(out / "evolution.csv").rfind("t_ms,P_overlap,P_pop,P_decohered\n0,", 0), 0u);
  EXPECT_EQ(lines(out / "critical_points.csv"), 3u);
  const auto ramp = nlohmann::json::parse(read_file(out / "ramp.json"));
  EXPECT_EQ(ramp["family"], "local-adiabatic");
  EXPECT_GT(ramp["gamma"].get<double>(), 0.0);
  const auto evo = nlohmann::json::parse(read_file(out / "evolution.json"));
  EXPECT_LT(evo["norm_drift"].get<double>(), 1e-8);
}

TEST_F(CliTest, PiecewiseWithConfiguredCriticalPoint) {
  const auto cfg = config(R"({"schema_version": 1, "num_spins": 4, "ramp": {"tf_ms": 0.5},
    "piecewise": {"enabled": true, "B_c_kHz": 0.3, "Delta_c_kHz": 0.4}, "snapshots": 3})");
  const auto out = root_ / "p";
  ASSERT_EQ(run_cli({"--config", cfg, "--out", out.string(), "evolve"}), kExitOk);
  const auto crit = nlohmann::json::parse(read_file(out / "critical.json"));
  EXPECT_EQ(crit["source"], "piecewise");
  EXPECT_DOUBLE_EQ(crit["critical"]["Delta_c_kHz"].get<double>(), 0.4);
}
