#include "cndr/errors.hpp"
#include "cndr/kernels.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cndr;

TEST_SUITE("kernels") {
  TEST_CASE("pointwise evaluation") {
    Vector x(2), y(2);
    x << 1, 2;
    y << 3, -1;
    CHECK(eval_kernel(KernelSpec::linear(), x, y) == 1.0);
    CHECK(eval_kernel(KernelSpec::gaussian(0.37), x, x) == 1.0);
    Vector a(2), b(2);
    a << 1, 1;
    b << 2, 0;
    CHECK(eval_kernel(KernelSpec::polynomial(2), a, b) == 4.0);
    CHECK(eval_kernel(KernelSpec::polynomial(3), a, b) == 8.0);
  }

  TEST_CASE("gram matrices") {
    PointSet id(2, 2);
    id << 1, 0, 0, 1;
    CHECK(gram(KernelSpec::linear(), id).isApprox(Matrix::Identity(2, 2)));
    CHECK(normalized_gram(KernelSpec::linear(), id).isApprox(0.5 * Matrix::Identity(2, 2)));

    PointSet same(2, 1);
    same << 0, 0;
    CHECK(gram(KernelSpec::gaussian(1.0), same).isApprox(Matrix::Ones(2, 2)));

    PointSet xy(2, 2);
    xy << 5, 1, 7, 2;
    Matrix expect(2, 2);
    expect << 1, 2, 2, 4;
    CHECK(gram(KernelSpec::coordinate_linear({1}), xy) == expect);

    PointSet one(1, 3);
    one << 0.2, -0.4, 0.1;
    CHECK(normalized_gram(KernelSpec::gaussian(2.0), one)(0, 0) == 1.0);
  }

  TEST_CASE("parallel gram matches the serial reference") {
    const PointSet x = testutil::gaussian(37, 4, 5);
    for (const auto& spec : {KernelSpec::linear(), KernelSpec::polynomial(3), KernelSpec::gaussian(1.3),
                             KernelSpec::coordinate_linear({0, 2})}) {
      const Matrix a = gram(spec, x);
      const Matrix b = gram_serial(spec, x);
      CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
      CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  TEST_CASE("cross gram agrees with pointwise evaluation") {
    const PointSet a = testutil::gaussian(5, 3, 1), b = testutil::gaussian(4, 3, 2);
    const KernelSpec k = KernelSpec::gaussian(0.8);
    const Matrix c = cross_gram(k, a, b);
    REQUIRE(c.rows() == 5);
    REQUIRE(c.cols() == 4);
    CHECK(c(3, 2) == doctest::Approx(eval_kernel(k, a.row(3).transpose(), b.row(2).transpose())));
  }

  TEST_CASE("normalization scales the diagonal to at most one") {
    PointSet x(3, 2);
    x << 2, 0, 1, 1, 0, 1;
    const KernelSpec lin = normalize_spec(KernelSpec::linear(), x);
    CHECK(lin.scale == doctest::Approx(0.25));
    CHECK(lin.normalize);
    CHECK(normalize_spec(KernelSpec::gaussian(1.0), x).scale == 1.0);

    Matrix pre(2, 2);
    pre << 2.5, 0.5, 0.5, 1.0;
    PointSet idx(2, 1);
    idx << 0, 1;
    const KernelSpec p = normalize_spec(KernelSpec::precomputed(pre), idx);
    CHECK(p.scale == doctest::Approx(0.4));
    CHECK(gram(p, idx)(0, 0) == doctest::Approx(1.0));
  }

  TEST_CASE("invalid specifications are rejected") {
    PointSet x(2, 2);
    x << 1, 2, 3, 4;
    CHECK_THROWS_AS(gram(KernelSpec::coordinate_linear({5}), x), InputError);
    CHECK_THROWS_AS(gram(KernelSpec::gaussian(-1.0), x), Error);
    CHECK_THROWS_AS(gram(KernelSpec::polynomial(0), x), Error);
    PointSet zero = PointSet::Zero(2, 2);
    CHECK_THROWS_AS(normalize_spec(KernelSpec::linear(), zero), NumericError);
    CHECK_THROWS_AS(kernel_kind_from_string("rbf-ish"), ConfigError);
    Matrix asym(2, 2);
    asym << 1, 0.3, 0.2, 1;
    CHECK_THROWS(KernelSpec::precomputed(asym));
  }
}
