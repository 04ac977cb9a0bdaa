#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bite/cli.hpp"
#include "test_support.hpp"

using namespace bite;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("bite_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "bite");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return cli_main(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  static std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
  }

  static nlohmann::json json_file(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

  static std::vector<std::vector<std::string>> csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream is(slurp(p));
    std::string line;
    while (std::getline(is, line)) {
      std::vector<std::string> cells;
      std::string cell;
      std::istringstream ls(line);
      while (std::getline(ls, cell, ',')) cells.push_back(cell);
      if (!line.empty() && line.back() == ',') cells.emplace_back();
      rows.push_back(cells);
    }
    return rows;
  }

  // Trace rows without the wall-time column.
  static std::vector<std::vector<std::string>> timeless(const fs::path& p) {
    auto rows = csv(p);
    for (auto& r : rows) r.pop_back();
    return rows;
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST_F(CliTest, TwoSiteIteMatchesExactEnergy) {
  const int code = run({"--model", "tfim", "--n", "2", "--j", "0.5", "--g", "1.5", "--dtau", "0.005", "--order", "2",
                        "--method", "ite", "--tol", "1e-5", "--out", path("out").string()});
  EXPECT_EQ(code, 0) << err_.str();
  const auto s = json_file(path("out/ite.summary.json"));
  EXPECT_NEAR(s["final_energy"].get<double>(), -3.041381, 1e-5);
  EXPECT_TRUE(s["converged"].get<bool>());
  EXPECT_TRUE(fs::exists(path("out/ite.trace.csv")));
}

TEST_F(CliTest, SummaryHasRequiredFields) {
  ASSERT_EQ(run({"--n", "6", "--method", "bite", "--out", path("out").string()}), 0) << err_.str();
  const auto s = json_file(path("out/bite.summary.json"));
  for (const char* key : {"config", "final_energy", "reference_energy", "converged", "tebd_steps", "boosts_attempted",
                          "boosts_accepted", "t_r", "chi_max", "chi_av", "fidelity", "counters"})
    EXPECT_TRUE(s.contains(key)) << key;
  EXPECT_EQ(s["config"]["n"].get<int>(), 6);
  EXPECT_EQ(s["config"]["method"].get<std::string>(), "bite");
  EXPECT_EQ(s["config"]["reference"].get<std::string>(), "auto");
  EXPECT_TRUE(s["fidelity"].is_number());
  // Eight gates per second-order step at N = 6 (3 even, 2 odd, 3 even).
  EXPECT_EQ(s["tebd_steps"].get<std::size_t>(), s["counters"]["gate_applications"].get<std::size_t>() / 8);
}

TEST_F(CliTest, TraceSchema) {
  ASSERT_EQ(run({"--n", "6", "--method", "bite", "--tol", "1e-6", "--out", path("out").string()}), 0);
  const auto rows = csv(path("out/bite.trace.csv"));
  ASSERT_GT(rows.size(), 2u);
  std::ifstream is(path("out/bite.trace.csv"));
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "step,tau,energy,energy_per_site,chi_max,chi_av,discarded_weight,event,wall_time_s");
  const auto s = json_file(path("out/bite.summary.json"));
  EXPECT_EQ(rows.size() - 1, s["records"].get<std::size_t>());
  bool saw_boost = false;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    ASSERT_EQ(rows[k].size(), 9u);
    const std::string& e = rows[k][2];
    std::size_t digits = 0;
    for (char ch : e.substr(0, e.find('e')))
      if (std::isdigit(static_cast<unsigned char>(ch))) ++digits;
    EXPECT_GE(digits, 12u) << e;
    saw_boost |= rows[k][7] == "boost_accepted";
  }
  EXPECT_TRUE(saw_boost);
  EXPECT_DOUBLE_EQ(std::stod(rows.back()[2]), s["final_energy"].get<double>());
}

TEST_F(CliTest, ZeroThresholdBiteTraceEqualsIte) {
  ASSERT_EQ(run({"--n", "6", "--method", "ite", "--seed", "5", "--out", path("a").string()}), 0);
  ASSERT_EQ(run({"--n", "6", "--method", "bite", "--threshold", "0", "--seed", "5", "--out", path("b").string()}), 0);
  EXPECT_EQ(timeless(path("a/ite.trace.csv")), timeless(path("b/bite.trace.csv")));
}

TEST_F(CliTest, RepeatedRunsAreByteIdenticalApartFromWallTime) {
  for (const char* d : {"a", "b"})
    ASSERT_EQ(run({"--n", "8", "--method", "bite", "--seed", "3", "--out", path(d).string()}), 0);
  EXPECT_EQ(timeless(path("a/bite.trace.csv")), timeless(path("b/bite.trace.csv")));
}

TEST_F(CliTest, MissingRequiredFlagWritesNothing) {
  EXPECT_EQ(run({"--method", "ite", "--out", path("out").string()}), 1);
  EXPECT_FALSE(fs::exists(path("out")));
  EXPECT_EQ(run({"--n", "4", "--out", path("out").string()}), 1);
  EXPECT_FALSE(fs::exists(path("out")));
  EXPECT_FALSE(err_.str().empty());
}

TEST_F(CliTest, BadValuesWriteNothing) {
  EXPECT_EQ(run({"--n", "4", "--method", "ite", "--dtau", "-0.1", "--out", path("out").string()}), 1);
  EXPECT_EQ(run({"--n", "4", "--method", "ite", "--order", "3", "--out", path("out").string()}), 1);
  EXPECT_EQ(run({"--n", "4", "--method", "dmrg", "--out", path("out").string()}), 1);
  EXPECT_EQ(run({"--n", "4", "--method", "ite", "--model", "xxz", "--out", path("out").string()}), 1);
  EXPECT_EQ(run({"--n", "4", "--method", "ite", "--reference", "low", "--out", path("out").string()}), 1);
  EXPECT_EQ(run({"--n", "4", "--method", "ite", "--max-steps", "0", "--out", path("out").string()}), 1);
  EXPECT_EQ(run({"--config", path("missing.ini").string(), "--out", path("out").string()}), 1);
  EXPECT_FALSE(fs::exists(path("out")));
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  std::ofstream(path("run.ini")) << "n = 6\nmethod = ite\ndtau = 0.02\ntol = 1e-4\n";
  ASSERT_EQ(run({"--config", path("run.ini").string(), "--dtau", "0.005", "--out", path("out").string()}), 0)
      << err_.str();
  const auto s = json_file(path("out/ite.summary.json"));
  EXPECT_EQ(s["config"]["n"].get<int>(), 6);
  EXPECT_DOUBLE_EQ(s["config"]["dtau"].get<double>(), 0.005);
  EXPECT_DOUBLE_EQ(s["config"]["tol"].get<double>(), 1e-4);
}

TEST_F(CliTest, NonConvergedRunExitsTwo) {
  EXPECT_EQ(run({"--n", "6", "--method", "ite", "--max-steps", "3", "--out", path("out").string()}), 2);
  const auto s = json_file(path("out/ite.summary.json"));
  EXPECT_FALSE(s["converged"].get<bool>());
  EXPECT_EQ(s["tebd_steps"].get<int>(), 3);
}

TEST_F(CliTest, CompareModeWritesAlignedTraces) {
  ASSERT_EQ(run({"--n", "8", "--method", "compare", "--dtau", "0.001", "--out", path("out").string()}), 0);
  for (const char* f : {"ite.trace.csv", "bite.trace.csv", "ite.summary.json", "bite.summary.json", "compare.csv"})
    EXPECT_TRUE(fs::exists(path("out") / f)) << f;
  const auto rows = csv(path("out/compare.csv"));
  EXPECT_EQ(rows[0][0], "step");
  EXPECT_EQ(rows[0][2], "ite_energy");
  EXPECT_EQ(rows[0][3], "bite_energy");
  EXPECT_EQ(rows[1][0], "0");
  EXPECT_EQ(rows[1][2], rows[1][3]);
  const auto ite = json_file(path("out/ite.summary.json"));
  EXPECT_EQ(rows.size() - 2, std::max(ite["tebd_steps"].get<std::size_t>(),
                                      json_file(path("out/bite.summary.json"))["tebd_steps"].get<std::size_t>()));
  // The table on stdout has a header, a separator and one row per run.
  std::istringstream table(out_.str());
  std::vector<std::string> lines;
  for (std::string l; std::getline(table, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "| method | Δτ | t_r (s) | χ_max | χ_av | fidelity |");
  EXPECT_EQ(lines[2].rfind("| ite |", 0), 0u);
  EXPECT_EQ(lines[3].rfind("| bite |", 0), 0u);
}

TEST_F(CliTest, StateSaveAndLoad) {
  ASSERT_EQ(run({"--n", "6", "--method", "ite", "--tol", "1e-2", "--save-state", path("psi.mps").string(), "--out",
                 path("a").string()}),
            0);
  ASSERT_TRUE(fs::exists(path("psi.mps")));
  const Mps saved = load_state(path("psi.mps"));
  EXPECT_EQ(saved.size(), 6u);
  ASSERT_EQ(run({"--n", "6", "--method", "ite", "--tol", "1e-5", "--load-state", path("psi.mps").string(), "--out",
                 path("b").string()}),
            0);
  const auto a = json_file(path("a/ite.summary.json"));
  const auto b = json_file(path("b/ite.summary.json"));
  EXPECT_NEAR(b["initial_energy"].get<double>(), a["final_energy"].get<double>(), 1e-10);
  EXPECT_EQ(run({"--n", "7", "--method", "ite", "--load-state", path("psi.mps").string(), "--out", path("c").string()}),
            1);
  EXPECT_FALSE(fs::exists(path("c")));
}

TEST(StateIo, RoundTrip) {
  Mps m = bite::testing::random_mps(7, 5, 3);
  m.log_norm = -2.5;
  m = canonicalize(m, 3);
  std::stringstream ss;
  write_state(ss, m);
  const Mps back = read_state(ss);
  EXPECT_EQ(back.size(), m.size());
  EXPECT_EQ(back.center, m.center);
  EXPECT_EQ(back.log_norm, m.log_norm);
  for (std::size_t k = 0; k < m.size(); ++k) EXPECT_EQ(back.sites[k].data(), m.sites[k].data());
}

TEST(StateIo, RejectsGarbage) {
  std::stringstream bad("not a state file at all");
  EXPECT_THROW(read_state(bad), InvalidInput);
  std::stringstream ss;
  write_state(ss, bite::testing::random_mps(4, 2, 1));
  const std::string full = ss.str();
  std::stringstream cut(full.substr(0, full.size() - 5));
  EXPECT_THROW(read_state(cut), InvalidInput);
}

TEST(EmitTable, BlankFidelityForLongChains) {
  RunConfig c;
  c.n_sites = 16;
  c.max_steps = 2;
  RunSummary s;
  s.config = c;
  s.trace = ite_run(c).trace;
  s.wall_times = {0.5, 0.25};
  EXPECT_FALSE(s.trace.final_fidelity);
  EXPECT_DOUBLE_EQ(s.t_r(), 0.25);
  const std::string table = emit_table({s, s});
  std::istringstream is(table);
  std::vector<std::string> lines;
  for (std::string l; std::getline(is, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[2].substr(lines[2].size() - 4), "|  |");
  EXPECT_NE(lines[2].find("| 0.250 |"), std::string::npos);
}

TEST(EmitTable, ChiAverageIsOverWholeRun) {
  RunSummary s;
  s.config.dtau = 0.01;
  s.trace.method = Method::Bite;
  TraceRecord r;
  r.chi_max = 2;
  r.chi_av = 2.0;
  s.trace.records.push_back(r);
  r.chi_max = 6;
  r.chi_av = 5.0;
  s.trace.records.push_back(r);
  s.trace.final_fidelity = 0.5;
  s.wall_times = {1.0};
  const std::string table = emit_table({s});
  EXPECT_NE(table.find("| bite | 0.01 | 1.000 | 6 | 3.50 | 0.500000 |"), std::string::npos) << table;
}
