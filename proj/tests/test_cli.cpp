#include "cndr/config.hpp"
#include "cndr/hypothesis.hpp"
#include "cndr/io.hpp"
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace cndr;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(CNDR_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("cndr_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

const std::string kConfig = std::string(CNDR_SOURCE_DIR) + "/configs/default.cfg";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("exit codes") {
    CHECK(run("") == 1);
    CHECK(run("train") == 1);
    CHECK(run("train -c /nonexistent.cfg") == 1);
    const fs::path d = scratch("codes");
    {
      std::ofstream(d / "bad.cfg") << "bogus = 1\n";
      std::ofstream(d / "bad.csv") << "1,0.5\n5,0.5\n";
    }
    CHECK(run("train -c " + (d / "bad.cfg").string()) == 1);
    CHECK(run("predict -m /nonexistent.json -d " + (d / "bad.csv").string()) == 2);
  }

  TEST_CASE("train, predict and rerun") {
    const fs::path a = scratch("a");
    const fs::path b = scratch("b");
    REQUIRE(run("train -c " + kConfig + " -o " + a.string()) == 0);
    REQUIRE(run("train -c " + kConfig + " -o " + b.string()) == 0);
    for (const char* f : {"model.json", "trace.csv", "train_report.json", "train_report.csv"})
      CHECK(slurp(a / f) == slurp(b / f));
    CHECK(fs::exists(a / "metadata_train.json"));

    const std::string test_csv = std::string(CNDR_SOURCE_DIR) + "/data/blocks_test.csv";
    REQUIRE(run("predict -m " + (a / "model.json").string() + " -d " + test_csv + " --out " +
                (a / "pred.csv").string()) == 0);
    const Model model = load_model((a / "model.json").string());
    const LabeledData test = load_labeled(test_csv, DataFormat::csv);
    const Vector scores = evaluate_batch(model, test.points);
    std::istringstream pred(slurp(a / "pred.csv"));
    std::string line;
    std::getline(pred, line);
    CHECK(line == "index,score,label");
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
      REQUIRE(std::getline(pred, line));
      std::istringstream row(line);
      std::string idx, score, label;
      std::getline(row, idx, ',');
      std::getline(row, score, ',');
      std::getline(row, label, ',');
      CHECK(std::stol(idx) == i);
      CHECK(std::stod(score) == scores(i));
    }

    REQUIRE(run("bounds -c " + kConfig + " -o " + a.string() + " -m " + (a / "model.json").string()) == 0);
    REQUIRE(run("bounds -c " + kConfig + " -o " + b.string() + " -m " + (a / "model.json").string()) == 0);
    CHECK(slurp(a / "bounds.json") == slurp(b / "bounds.json"));
  }

  TEST_CASE("demo writes its report") {
    const fs::path d = scratch("demo");
    REQUIRE(run("demo -o " + d.string()) == 0);
    CHECK(fs::exists(d / "demo.json"));
    CHECK(slurp(d / "demo.json").find("\"training_error\"") != std::string::npos);
  }
}
