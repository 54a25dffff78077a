#include "cndr/config.hpp"
#include "cndr/errors.hpp"
#include "cndr/io.hpp"
#include "doctest.h"

#include <sstream>
#include <string>

using namespace cndr;

namespace {

LabeledData labeled(const std::string& text, DataFormat f, int dim = 0) {
  std::istringstream in(text);
  return parse_labeled(in, f, "mem", dim);
}

RunConfig config(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "mem.cfg", ".");
}

std::string error_of(const std::string& text) {
  try {
    config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("io_config") {
  TEST_CASE("csv rows") {
    const LabeledData d = labeled("+1,0.5,1.0\n# note\n\n-1,2,-3\n", DataFormat::csv);
    REQUIRE(d.points.rows() == 2);
    CHECK(d.points.cols() == 2);
    CHECK(d.labels(0) == 1.0);
    CHECK(d.labels(1) == -1.0);
    CHECK(d.points(0, 1) == 1.0);
    CHECK(d.points(1, 1) == -3.0);
    CHECK_THROWS_AS(labeled("2,0.5\n", DataFormat::csv), DataError);
    CHECK_THROWS_AS(labeled("1,0.5\n1,0.5,2\n", DataFormat::csv), DataError);
    CHECK_THROWS_AS(labeled("1,abc\n", DataFormat::csv), DataError);
    CHECK_THROWS_AS(labeled("", DataFormat::csv), DataError);

    std::istringstream u("0.1,0.2\n0.3,0.4\n");
    CHECK(parse_unlabeled(u, DataFormat::csv, "mem").rows() == 2);
  }

  TEST_CASE("svmlight rows") {
    const LabeledData d = labeled("-1 3:2.5\n+1 1:1 4:-1\n", DataFormat::svmlight, 4);
    CHECK(d.points.cols() == 4);
    CHECK(d.points(0, 2) == 2.5);
    CHECK(d.points(0, 0) == 0.0);
    CHECK(d.points(1, 3) == -1.0);
    CHECK(labeled("1 2:1\n", DataFormat::svmlight).points.cols() == 2);
    CHECK_THROWS_AS(labeled("1 0:1\n", DataFormat::svmlight), DataError);
    CHECK_THROWS_AS(labeled("1 2:1 1:1\n", DataFormat::svmlight), DataError);
    CHECK_THROWS_AS(labeled("1 5:1\n", DataFormat::svmlight, 4), DataError);
    CHECK(data_format_from_string("libsvm") == DataFormat::svmlight);
  }

  TEST_CASE("errors carry line numbers") {
    try {
      labeled("1,0.5\n1,0.5\n3,0.5\n", DataFormat::csv);
      FAIL("expected an error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("mem:3") != std::string::npos);
    }
  }

  TEST_CASE("config parsing") {
    const RunConfig c = config(
        "seed = 5\n"
        "# comment\n"
        "kernel.1.kind = coordinate-linear\n"
        "kernel.1.coords = 1,2\n"
        "kernel.2.kind = polynomial\n"
        "kernel.2.degree = 3\n"
        "kernel.2.normalize = true\n"
        "constraints.r = 2\n"
        "constraints.lambda_r = 0.5\n"
        "constraints.nu = 8\n"
        "train.mode = coupled\n"
        "output.formats = json\n");
    CHECK(c.seed == 5);
    REQUIRE(c.num_kernels() == 2);
    CHECK(c.kernels[0].spec.kind == KernelKind::coordinate_linear);
    CHECK(c.kernels[0].spec.coords == std::vector<std::size_t>{0, 1});
    CHECK(c.kernels[1].spec.degree == 3);
    CHECK(c.constraints.r == 2);
    CHECK(c.constraints.nu == 8.0);
    CHECK(c.write_json);
    CHECK_FALSE(c.write_csv);
    CHECK(config_to_json(c)["seed"] == 5);
  }

  TEST_CASE("config errors") {
    CHECK(error_of("bogus = 1\n").find("mem.cfg:1") != std::string::npos);
    CHECK(error_of("seed = 1\nseed = 2\n").find("mem.cfg:2") != std::string::npos);
    CHECK_FALSE(error_of("seed = 1\ntrain.seed = 2\n").empty());
    CHECK(error_of("seed = 1\ntrain.seed = 1\n").empty());
    CHECK_FALSE(error_of("kernel.2.kind = linear\n").empty());
    CHECK_FALSE(error_of("kernel.1.kind = spline\n").empty());
    CHECK_FALSE(error_of("constraints.r = two\n").empty());
    CHECK_FALSE(error_of("no equals sign\n").empty());
    CHECK_FALSE(error_of("data.labeled = /nonexistent/file.csv\n").empty());
  }
}
