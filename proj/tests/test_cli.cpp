#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "varfit/io.hpp"

namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("varfit_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Runs the CLI from inside the temp dir; returns the exit code.
  int run(const std::string& args) {
    const std::string cmd = "cd '" + dir_.string() + "' && '" VARFIT_CLI_PATH "' " + args + " > '" +
                            path("stdout.txt") + "' 2> '" + path("stderr.txt") + "'";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string slurp(const std::string& name) const {
    std::ifstream in(path(name));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  nlohmann::json manifest(const std::string& name) const { return nlohmann::json::parse(slurp(name)); }

  fs::path dir_;
};

TEST_F(Cli, GenShapes) {
  ASSERT_EQ(run("gen --kind sphere-plane --m 1600 --sigma 0 --seed 1 -o sp.csv"), 0) << slurp("stderr.txt");
  auto c = varfit::load_cloud(path("sp.csv"));
  EXPECT_EQ(c.size(), 1600u);
  EXPECT_EQ(c.dim(), 3u);
  ASSERT_EQ(run("gen --kind noisy-line --m 200 --sigma 0.02 --seed 2 -o line.csv"), 0);
  EXPECT_EQ(varfit::load_cloud(path("line.csv")).size(), 200u);
  ASSERT_EQ(run("gen --kind sphere-plane-singular --m 400 --seed 3 -o circle.csv"), 0);
  EXPECT_EQ(varfit::load_cloud(path("circle.csv")).size(), 400u);

  const auto man = manifest("sp.csv.manifest.json");
  EXPECT_EQ(man["command"], "gen");
  EXPECT_EQ(man["seed"], 1);
  EXPECT_EQ(man["flags"]["m"], 1600);
  EXPECT_EQ(man["result"]["points"], 1600);
  EXPECT_TRUE(man["timings"].contains("total_seconds"));
}

TEST_F(Cli, InputErrorsExitTwo) {
  EXPECT_EQ(run("gen --kind torus --m 10 --seed 1 -o x.csv"), 2);
  EXPECT_EQ(run("gen --kind sphere-plane --m 10 -o x.csv"), 2);  // no seed
  EXPECT_NE(slurp("stderr.txt").find("--seed"), std::string::npos);
  EXPECT_EQ(run("fit -i missing.csv -D 2 -o m.json"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("gen --kind sphere-plane --m 10 --seed 1 -o /nonexistent/dir/x.csv"), 2);
}

TEST_F(Cli, FitReportsLambda) {
  ASSERT_EQ(run("gen --kind sphere-plane --m 1600 --seed 1 -o sp.csv"), 0);
  ASSERT_EQ(run("fit -i sp.csv --degree 3 -o model.json"), 0) << slurp("stderr.txt");
  const auto man = manifest("model.json.manifest.json");
  EXPECT_LE(man["result"]["lambda"].get<double>(), 1e-12 * man["result"]["trace"].get<double>());
  EXPECT_EQ(man["result"]["kernel_dim"], 1);
  const auto model = varfit::load_model(path("model.json"));
  EXPECT_EQ(model.poly.degree(), 3);
}

TEST_F(Cli, FitDegreeZeroAndDiagonalLine) {
  {
    std::ofstream out(path("diag.csv"));
    out << "0,0\n0.25,0.25\n0.5,0.5\n0.75,0.75\n1,1\n";
  }
  ASSERT_EQ(run("fit -i diag.csv -D 1 -o m1.json"), 0);
  EXPECT_EQ(manifest("m1.json.manifest.json")["result"]["kernel_dim"], 1);
  ASSERT_EQ(run("fit -i diag.csv -D 0 -o m0.json"), 0);
  EXPECT_NEAR(manifest("m0.json.manifest.json")["result"]["lambda"].get<double>(), 5.0, 1e-12);
  EXPECT_EQ(varfit::load_model(path("m0.json")).poly.coeffs(), std::vector<double>{1.0});
}

TEST_F(Cli, SampleSingularCompare) {
  ASSERT_EQ(run("gen --kind sphere-plane --m 1600 --seed 1 -o sp.csv"), 0);
  ASSERT_EQ(run("fit -i sp.csv -D 3 -o model.json"), 0);
  ASSERT_EQ(run("sample --model model.json --method direct --eta 0.001 --m 1600 --seed 7 -o s.csv"), 0)
      << slurp("stderr.txt");
  ASSERT_EQ(run("singular --model model.json -i s.csv --epsilon 0.02 -o sing.csv"), 0);
  const auto count = manifest("sing.csv.manifest.json")["result"]["accepted"].get<int>();
  EXPECT_GE(count, 150);
  EXPECT_LE(count, 350);
  ASSERT_EQ(run("compare -i s.csv -r s.csv -o same.json"), 0);
  EXPECT_EQ(manifest("same.json")["distance"].get<double>(), 0.0);
}

TEST_F(Cli, WarnsWhenEpsilonNotAboveEta) {
  ASSERT_EQ(run("gen --kind noisy-line --m 50 --seed 1 -o l.csv"), 0);
  ASSERT_EQ(run("fit -i l.csv -D 1 -o m.json"), 0);
  ASSERT_EQ(run("singular --model m.json -i l.csv --epsilon 0.001 --eta 0.01 -o s.csv"), 0);
  EXPECT_NE(slurp("stderr.txt").find("epsilon"), std::string::npos);
}

TEST_F(Cli, BudgetExhaustionExitsThree) {
  ASSERT_EQ(run("gen --kind noisy-line --m 50 --seed 1 -o l.csv"), 0);
  ASSERT_EQ(run("fit -i l.csv -D 1 -o m.json"), 0);
  EXPECT_EQ(run("sample --model m.json --eta 1e-9 --m 10 --max-proposals 1000 --seed 1 -o s.csv"), 3);
}

TEST_F(Cli, ReplayReproducesBitExactly) {
  ASSERT_EQ(run("gen --kind sphere-plane --m 400 --sigma 0.01 --seed 5 -o sp.csv"), 0);
  ASSERT_EQ(run("fit -i sp.csv -D 2 -o model.json"), 0);
  ASSERT_EQ(run("sample --model model.json --eta 0.01 --m 300 --seed 9 -o s.csv"), 0);
  const std::string first = slurp("s.csv");
  const std::string model = slurp("model.json");
  fs::remove(path("s.csv"));
  fs::remove(path("model.json"));
  ASSERT_EQ(run("replay model.json.manifest.json"), 0);
  EXPECT_EQ(slurp("model.json"), model);
  ASSERT_EQ(run("replay s.csv.manifest.json"), 0) << slurp("stderr.txt");
  EXPECT_EQ(slurp("s.csv"), first);
  ASSERT_EQ(run("sample --model model.json --eta 0.01 --m 300 --seed 9 --workers 3 -o p.csv"), 0);
  EXPECT_EQ(slurp("p.csv"), first);
}

TEST_F(Cli, ExportAlgebra) {
  ASSERT_EQ(run("gen --kind sphere-plane --m 1600 --seed 1 -o sp.csv"), 0);
  ASSERT_EQ(run("fit -i sp.csv -D 3 -o model.json"), 0);
  ASSERT_EQ(run("export-algebra --model model.json -o script.sing"), 0) << slurp("stderr.txt");
  const std::string script = slurp("script.sing");
  EXPECT_NE(script.find("ring R = 0,(x,y,z),lp;"), std::string::npos);
  EXPECT_NE(script.find("ideal I = x^3-x^2*y+x*y^2+x*z^2-y^3-y*z^2-x^2-x*z+y^2+y*z+1/2*x-1/2*y;"),
            std::string::npos);
  EXPECT_NE(script.find("minAssGTZ(I2);"), std::string::npos);
  ASSERT_EQ(run("export-algebra --model model.json -o again.sing"), 0);
  EXPECT_EQ(slurp("again.sing"), script);
}

TEST_F(Cli, ExportAlgebraRejectsIrrationalLookingModel) {
  ASSERT_EQ(run("gen --kind noisy-line --m 100 --sigma 0.05 --seed 3 -o l.csv"), 0);
  ASSERT_EQ(run("fit -i l.csv -D 1 -o m.json"), 0);
  EXPECT_EQ(run("export-algebra --model m.json --max-denominator 2 -o s.sing"), 2);
  EXPECT_NE(slurp("stderr.txt").find("rational"), std::string::npos);
}

TEST_F(Cli, FitNormalizesRawInput) {
  {
    std::ofstream out(path("raw.csv"));
    out << "x,y\n-2,10\n0,14\n2,18\n4,22\n";
  }
  EXPECT_EQ(run("fit -i raw.csv -D 1 -o bad.json"), 2);
  ASSERT_EQ(run("fit -i raw.csv -D 1 --normalize -o m.json"), 0) << slurp("stderr.txt");
  const auto model = varfit::load_model(path("m.json"));
  ASSERT_TRUE(model.normalization);
  EXPECT_EQ(model.normalization->scale, (std::vector<double>{1.0 / 6.0, 1.0 / 12.0}));
  ASSERT_EQ(run("sample --model m.json --eta 0.001 --m 20 --seed 1 --denormalize -o s.csv"), 0);
  const auto s = varfit::load_cloud(path("s.csv"));
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(s.point(i)[1], 2.0 * s.point(i)[0] + 14.0, 0.05);
}

TEST_F(Cli, PipelineSweep) {
  ASSERT_EQ(run("pipeline --m 300 --degrees 1,3 --repeats 1 --eta 0.01 --seed 4 -o sweep.json"), 0)
      << slurp("stderr.txt");
  const auto res = nlohmann::json::parse(slurp("sweep.json"));
  ASSERT_EQ(res["summary"].size(), 2u);
  EXPECT_EQ(res["runs"].size(), 2u);
  EXPECT_TRUE(manifest("sweep.json.manifest.json")["result"].contains("best_degree"));
  EXPECT_NE(slurp("stdout.txt").find("best degree"), std::string::npos);
}

}  // namespace
