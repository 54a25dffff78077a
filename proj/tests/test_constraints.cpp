#include "cndr/constraints.hpp"
#include "cndr/errors.hpp"
#include "doctest.h"
#include "test_util.hpp"

#include <cmath>

using namespace cndr;

namespace {

SpectralBundle diagonal_bundle(const std::vector<std::vector<double>>& spectra) {
  std::vector<Matrix> grams;
  for (const auto& s : spectra) {
    Vector d(static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) d(static_cast<Eigen::Index>(i)) = s[i];
    grams.push_back(d.asDiagonal());
  }
  return bundle_from_normalized_grams(grams, kDefaultRankTol, "test");
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_SUITE("constraints") {
  TEST_CASE("kappa") {
    CHECK(kappa(1, 2.0 * std::exp(-2.0)) == doctest::Approx(8.0).epsilon(1e-14));
    CHECK(kappa(2, 0.05) == doctest::Approx(9.9208287492031935).epsilon(1e-14));
    CHECK_THROWS_AS(kappa(0, 0.05), InputError);
    CHECK_THROWS_AS(kappa(2, 1.5), InputError);
  }

  TEST_CASE("membership in M") {
    const SpectralBundle b = diagonal_bundle({{0.5, 0.3}, {0.4, 0.2}});
    ConstraintParams cp;
    cp.r = 1;
    cp.lambda_r = 100.0;
    cp.nu = 4.0;
    CHECK(check_M(vec({0.5, 0.5}), cp, b).feasible());

    const FeasibilityReport bad = check_M(vec({0.9, 0.05}), cp, b);
    CHECK_FALSE(bad.feasible());
    CHECK_FALSE(bad.inv_sum_ok);
    CHECK(bad.inv_sum_slack == doctest::Approx(4.0 - 1.0 / 0.9 - 20.0));

    const FeasibilityReport zero = check_M(vec({0.0, 1.0}), cp, b);
    CHECK_FALSE(zero.feasible());
    CHECK_FALSE(zero.positive_ok);
    CHECK(std::isinf(zero.inv_sum_slack));

    ConstraintParams tight = cp;
    tight.lambda_r = 0.1;
    const FeasibilityReport over = check_M(vec({0.5, 0.5}), tight, b);
    CHECK_FALSE(over.kyfan_ok);
    CHECK(over.kyfan == doctest::Approx(0.25));
  }

  TEST_CASE("membership in the extended set N") {
    const SpectralBundle b = diagonal_bundle({{20.0, 1.0}});
    ConstraintParams cp;
    cp.r = 1;
    cp.lambda_r = 1.0;
    cp.nu = 4.0;
    cp.delta = 2.0 * std::exp(-2.0);  // kappa = 8
    const Vector half = vec({(1.0 + 4.0) / 20.0});
    CHECK(check_N(half, cp, b).feasible());
    CHECK_FALSE(check_M(half, cp, b).feasible());
    const Vector twice = vec({(1.0 + 16.0) / 20.0});
    CHECK_FALSE(check_N(twice, cp, b).feasible());
    CHECK_FALSE(check_M(twice, cp, b).feasible());
  }

  TEST_CASE("parameter validation") {
    ConstraintParams cp;
    cp.nu = 3.0;
    CHECK_THROWS_AS(cp.validate(2), ConfigError);
    cp.nu = 4.0;
    CHECK_NOTHROW(cp.validate(2));
    cp.r = 0;
    CHECK_THROWS_AS(cp.validate(2), ConfigError);
  }

  TEST_CASE("projection onto M") {
    const SpectralBundle b = diagonal_bundle({{0.5, 0.3}, {0.5, 0.3}});
    ConstraintParams cp;
    cp.r = 1;
    cp.lambda_r = 10.0;
    cp.nu = 4.0;
    // nu = p^2 leaves the single point (1/2, 1/2) on the simplex face.
    ConstraintParams loose = cp;
    loose.nu = 4.5;
    const Vector feasible = vec({0.45, 0.55});
    CHECK(project_to_M(feasible, loose, b) == feasible);

    const Vector proj = project_to_M(vec({1.0, 1.0}), cp, b);
    CHECK(proj(0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(proj(1) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(check_M(proj, cp, b).feasible());
  }

  TEST_CASE("projection handles an active Ky-Fan budget") {
    const SpectralBundle b = diagonal_bundle({{0.6, 0.2}, {0.3, 0.1}});
    ConstraintParams cp;
    cp.r = 2;
    cp.lambda_r = 0.3;
    cp.nu = 8.0;
    const Vector proj = project_to_M(vec({0.9, 0.4}), cp, b);
    const FeasibilityReport rep = check_M(proj, cp, b);
    CHECK(rep.feasible());
    CHECK(rep.kyfan == doctest::Approx(0.3).epsilon(1e-6));
    // No feasible point is closer than the projection on a grid over M.
    const double d = (proj - vec({0.9, 0.4})).norm();
    for (int i = 1; i < 200; ++i)
      for (int j = 1; i + j <= 200; ++j) {
        const Vector mu = vec({i / 200.0, j / 200.0});
        if (check_M(mu, cp, b, 0.0).feasible()) CHECK((mu - vec({0.9, 0.4})).norm() >= d - 1e-6);
      }
  }

  TEST_CASE("empty weight set") {
    const SpectralBundle b = diagonal_bundle({{0.6, 0.2}, {0.3, 0.1}});
    ConstraintParams cp;
    cp.r = 1;
    cp.lambda_r = 0.01;
    cp.nu = 4.0;
    CHECK_THROWS_AS(project_to_M(vec({0.5, 0.5}), cp, b), InfeasibleError);
  }

  TEST_CASE("Ky-Fan cuts are supporting pieces") {
    const SpectralBundle b = diagonal_bundle({{0.6, 0.2}, {0.3, 0.1}});
    const Vector mu = vec({0.3, 0.7});
    const IndexSet top = top_r_index_set(b, mu, 2);
    const Vector cut = kyfan_cut(b, selection_counts(b, top));
    CHECK(cut.dot(mu) == doctest::Approx(kyfan_r(b, mu, 2)));
    for (const auto& counts : enumerate_count_vectors(b, 2)) CHECK(kyfan_cut(b, counts).dot(mu) <= kyfan_r(b, mu, 2) + 1e-15);
  }
}
