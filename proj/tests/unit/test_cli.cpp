// Drives the pfode_cli binary end to end in scratch directories.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("pfode_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& name, const std::string& text) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  int run(const std::string& sub, const fs::path& cfg, const fs::path& out,
          const std::string& extra = "") const {
    const std::string cmd = std::string(PFODE_CLI_PATH) + " --config " + cfg.string() + " --out " +
                            out.string() + " " + extra + " " + sub + " > " +
                            (dir_ / "stdout.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
};

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::map<std::string, std::string> read_meta(const fs::path& p) {
  std::map<std::string, std::string> m;
  const auto rows = read_csv(p);
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].size() >= 2) m[rows[i][0]] = rows[i][1];
  return m;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const char* kSanity = R"(experiment = gaussian_sanity
[basis]
kind = rbf
points = 100
truncation = 16
[sampler]
nfe = 100
methods = ode
count = 64
seed = 7
)";

const char* kHeat = R"(experiment = heat
[heat]
beta = 0.05
t_end = 1.0
dt = 1e-3
grid_points = 32
frames = 6
spatial_modes = 6
structure_modes = 3
samples = 4
self_test = true
self_test_terms = 3
)";

}  // namespace

TEST_F(CliTest, MissingBasisIsConfigError) {
  const auto cfg = write_config("c.ini", "experiment = quadratic\n[sampler]\nnfe = 10\n");
  EXPECT_EQ(run("sample", cfg, dir_ / "out"), 2);
  EXPECT_NE(slurp(dir_ / "stdout.txt").find("[basis]"), std::string::npos);
}

TEST_F(CliTest, EmptyNfeListIsConfigError) {
  const auto cfg = write_config("c.ini", "experiment = quadratic\n[basis]\n[sampler]\nnfe = \" , \"\n");
  EXPECT_EQ(run("sweep-nfe", cfg, dir_ / "out"), 2);
}

TEST_F(CliTest, HeatWithoutDtIsConfigError) {
  const auto cfg = write_config("c.ini", "experiment = heat\n[heat]\nbeta = 0.05\n");
  EXPECT_EQ(run("heat-eval", cfg, dir_ / "out"), 2);
  EXPECT_NE(slurp(dir_ / "stdout.txt").find("dt"), std::string::npos);
}

TEST_F(CliTest, CflViolationExitsFour) {
  std::string text = kHeat;
  text.replace(text.find("dt = 1e-3"), 9, "dt = 0.5");
  const auto cfg = write_config("c.ini", text);
  EXPECT_EQ(run("heat-eval", cfg, dir_ / "out"), 4);
  EXPECT_FALSE(fs::exists(dir_ / "out" / "results.csv"));
}

TEST_F(CliTest, MissingConfigFile) {
  EXPECT_EQ(run("sample", dir_ / "absent.ini", dir_ / "out"), 2);
}

TEST_F(CliTest, SampleWritesRowsAndMetadata) {
  const auto cfg = write_config("c.ini", kSanity);
  ASSERT_EQ(run("sample", cfg, dir_ / "out"), 0);
  const auto rows = read_csv(dir_ / "out" / "samples_ode_nfe100.csv");
  ASSERT_EQ(rows.size(), 65u);
  EXPECT_EQ(rows[0].size(), 17u);  // sample_id plus 16 modes
  const auto meta = read_meta(dir_ / "out" / "samples_ode_nfe100.meta.csv");
  EXPECT_EQ(meta.at("score_evaluations"), "6400");
  EXPECT_EQ(meta.at("nfe"), "100");
  EXPECT_EQ(meta.at("seed"), "7");
  EXPECT_TRUE(fs::exists(dir_ / "out" / "grid_ode_nfe100.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "basis.csv"));
}

TEST_F(CliTest, FixedSeedRerunIsByteIdentical) {
  const auto cfg = write_config("c.ini", kSanity);
  ASSERT_EQ(run("sample", cfg, dir_ / "a", "--threads 1"), 0);
  ASSERT_EQ(run("sample", cfg, dir_ / "b", "--threads 4"), 0);
  ASSERT_EQ(run("sample", cfg, dir_ / "c", "--seed 8"), 0);
  const std::string a = slurp(dir_ / "a" / "samples_ode_nfe100.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir_ / "b" / "samples_ode_nfe100.csv"));
  EXPECT_NE(a, slurp(dir_ / "c" / "samples_ode_nfe100.csv"));
}

TEST_F(CliTest, QuadraticSweepHasOneRowPerCell) {
  const auto cfg = write_config("c.ini", R"(experiment = quadratic
[basis]
truncation = 8
[sampler]
nfe = 10,20,30,40,50,60,70,80,90,100
methods = ode,sde
count = 64
seed = 1
[metrics]
list = sw,power
projections = 16
power_samples = 20
permutations = 100
trials = 4
)");
  ASSERT_EQ(run("sweep-nfe", cfg, dir_ / "out"), 0);
  const auto rows = read_csv(dir_ / "out" / "results.csv");
  ASSERT_EQ(rows.size(), 41u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"experiment", "method", "nfe", "metric", "value",
                                               "seed"}));
  std::map<std::string, int> per_metric;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), 6u);
    EXPECT_EQ(rows[i][0], "quadratic");
    ++per_metric[rows[i][3]];
    const double v = std::stod(rows[i][4]);
    EXPECT_GE(v, 0.0);
    if (rows[i][3] == "power") {
      EXPECT_LE(v, 1.0);
    }
  }
  EXPECT_EQ(per_metric["sw"], 20);
  EXPECT_EQ(per_metric["power"], 20);
}

TEST_F(CliTest, HeatSelfTestIsAccurate) {
  const auto cfg = write_config("c.ini", kHeat);
  ASSERT_EQ(run("heat-eval", cfg, dir_ / "out"), 0);
  const auto rows = read_csv(dir_ / "out" / "results.csv");
  bool found = false;
  for (const auto& r : rows) {
    if (r.size() >= 5 && r[3] == "l2_mean") {
      found = true;
      EXPECT_LE(std::stod(r[4]), 1e-2);
    }
  }
  EXPECT_TRUE(found);
  EXPECT_EQ(read_csv(dir_ / "out" / "heat_distances.csv").size(), 5u);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "field_exact_nfe0_truth.csv"));
}

TEST_F(CliTest, BasisDump) {
  const auto cfg = write_config("c.ini", "experiment = quadratic\n[basis]\ntruncation = 12\n");
  ASSERT_EQ(run("basis-dump", cfg, dir_ / "out"), 0);
  const auto rows = read_csv(dir_ / "out" / "basis.csv");
  ASSERT_GE(rows.size(), 13u);
  double prev = 1e300;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double lam = std::stod(rows[i].back());
    EXPECT_GT(lam, 0.0);
    EXPECT_LE(lam, prev);
    prev = lam;
  }
  EXPECT_TRUE(fs::exists(dir_ / "out" / "basis_vectors.csv"));
}

TEST_F(CliTest, UnknownSubcommandFails) {
  const auto cfg = write_config("c.ini", kSanity);
  EXPECT_NE(run("train-fno", cfg, dir_ / "out"), 0);
}
