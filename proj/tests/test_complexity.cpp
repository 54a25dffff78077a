#include "cndr/complexity.hpp"
#include "cndr/errors.hpp"
#include "doctest.h"
#include "test_util.hpp"

#include <cmath>

using namespace cndr;

namespace {

SpectralBundle diagonal_bundle(const std::vector<double>& s) {
  Vector d(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) d(static_cast<Eigen::Index>(i)) = s[i];
  return bundle_from_normalized_grams({Matrix(d.asDiagonal())}, kDefaultRankTol, "test");
}

}  // namespace

TEST_SUITE("complexity") {
  TEST_CASE("sign vectors and draws") {
    CHECK(sign_vector(0, 3) == -Vector::Ones(3));
    const Vector s = sign_vector(5, 3);
    CHECK(s(0) == 1.0);
    CHECK(s(1) == -1.0);
    CHECK(s(2) == 1.0);
    CHECK(rademacher_draw(3, 7, 20) == rademacher_draw(3, 7, 20));
    CHECK(rademacher_draw(3, 7, 20) != rademacher_draw(3, 8, 20));
    CHECK(draw_seed(1, 2) != draw_seed(2, 1));
  }

  TEST_CASE("two-point hand example") {
    const SpectralBundle b = diagonal_bundle({0.7, 0.3});
    ConstraintParams cp;
    cp.r = 1;
    cp.lambda_r = 0.7;
    cp.nu = 1.0;
    const RademacherEstimate ex = rademacher_exhaustive(b, cp);
    CHECK(ex.exhaustive);
    CHECK(ex.estimate == doctest::Approx(std::sqrt(1.4) / 2.0).epsilon(1e-14));
    const RademacherEstimate mc = estimate_rademacher(b, cp, 1000, 1);
    CHECK(mc.estimate == doctest::Approx(std::sqrt(1.4) / 2.0).epsilon(1e-14));
    CHECK(mc.std_error == doctest::Approx(0.0).epsilon(1e-14));
  }

  TEST_CASE("exhaustive value on a fixed sample") {
    const PointSet x = testutil::x6();
    const SpectralBundle b = build_bundle({normalize_spec(KernelSpec::linear(), x)}, x);
    ConstraintParams cp;
    cp.r = 2;
    cp.lambda_r = 0.32056358845093463;
    cp.nu = 4.0;
    CHECK(rademacher_exhaustive(b, cp).estimate == doctest::Approx(0.2089409396246454).epsilon(1e-12));
  }

  TEST_CASE("parallel and serial estimators agree bit for bit") {
    const PointSet x = testutil::gaussian(12, 4, 8);
    std::vector<KernelSpec> ks;
    for (const auto& k : testutil::blocks(2, 2)) ks.push_back(normalize_spec(k, x));
    const SpectralBundle b = build_bundle(ks, x);
    ConstraintParams cp;
    cp.r = 2;
    cp.lambda_r = 0.5 * kyfan_r(b, Vector::Ones(2), 2);
    cp.nu = 8.0;
    const RademacherEstimate a = estimate_rademacher(b, cp, 300, 5);
    const RademacherEstimate s = estimate_rademacher_serial(b, cp, 300, 5);
    CHECK(a.estimate == s.estimate);
    CHECK(a.std_error == s.std_error);
    CHECK(a.lower_estimate);
  }

  TEST_CASE("lower-bound construction") {
    const LowerBoundInstance inst = lower_bound_construct(4, 2, 0.1);
    const auto& v = inst.bundle.spectra[0].values;
    CHECK(inst.bundle.spectra[0].effective_rank == 2);
    CHECK(v(0) > v(1) + 1e-6);
    CHECK(v(2) < 1e-12);
    CHECK(lower_bound_value(0.5, 100) == doctest::Approx(0.05).epsilon(1e-15));

    // Per-draw value is sqrt(Lambda / m) max_j |v_j^T sigma| on the construction.
    const LowerBoundInstance big = lower_bound_construct(16, 3, 0.05);
    const RademacherSup sup(big.bundle, big.params);
    for (std::uint64_t i = 0; i < 20; ++i) {
      const Vector s = rademacher_draw(4, i, 16);
      double best = 0.0;
      for (int j = 0; j < 3; ++j) best = std::max(best, std::abs(big.bundle.spectra[0].vectors.col(j).dot(s)));
      CHECK(sup.dual_norm_value(s) == doctest::Approx(std::sqrt(0.05 / 16.0) * best).epsilon(1e-12));
      CHECK(sup.value(s) <= sup.dual_norm_value(s) + 1e-12);
    }
    CHECK_THROWS_AS(lower_bound_construct(4, 4, 0.1), InputError);
  }

  TEST_CASE("upper bound values") {
    ConstraintParams cp;
    cp.r = 1;
    cp.lambda_r = 1.0;
    cp.nu = 1.0;
    cp.delta = 2.0 * std::exp(-2.0);
    const BoundReport one = complexity_bound(cp, 1, 100, Eigengap{0.3, false, true});
    CHECK(one.kappa == doctest::Approx(8.0));
    CHECK(one.term2 == 0.0);
    CHECK(one.term2_vanishes);
    CHECK(one.total == doctest::Approx(0.97657417843123755).epsilon(1e-14));

    ConstraintParams c3;
    c3.r = 2;
    c3.lambda_r = 0.5;
    c3.nu = 9.0;
    c3.delta = 0.05;
    const BoundReport three = complexity_bound(c3, 3, 50, Eigengap{0.2, false, false});
    CHECK(three.term1 == doctest::Approx(1.5616143666377218).epsilon(1e-13));
    CHECK(three.term2 == doctest::Approx(1236.6614870451109).epsilon(1e-13));
    CHECK(three.total == doctest::Approx(1238.2231014117486).epsilon(1e-13));
    CHECK_FALSE(three.gap_plugin);
    CHECK_FALSE(three.precondition_ok);

    const BoundReport mb = margin_bound(c3, 3, 50, Eigengap{0.2, false, false}, 0.25, 0.5);
    CHECK(mb.margin_bound == doctest::Approx(4953.8447285806231).epsilon(1e-13));

    const BoundReport zero = margin_bound(cp, 1, 100, Eigengap{0.3, false, true}, 0.0, 0.5);
    CHECK(zero.margin_bound ==
          doctest::Approx(4.0 * one.term1 + 3.0 * std::sqrt(std::log(4.0 / cp.delta) / 200.0)).epsilon(1e-14));

    const BoundReport flat = complexity_bound(c3, 3, 50, Eigengap{0.0, true, true});
    CHECK(std::isinf(flat.term2));
    CHECK_FALSE(flat.diagnostics.empty());
    CHECK(to_json(flat)["term2"] == "inf");
  }

  TEST_CASE("Khintchine") {
    Vector e1 = Vector::Zero(4);
    e1(0) = 1.0;
    CHECK(khintchine_exact(e1) == 1.0);
    Vector h(2);
    h << 1.0, 1.0;
    h /= std::sqrt(2.0);
    CHECK(khintchine_exact(h) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    Vector v = testutil::gaussian(16, 1, 21).col(0);
    v.normalize();
    const McValue mc = khintchine_check(v, 20000, 3);
    CHECK(mc.estimate >= kKhintchineConstant - 3.0 * mc.std_error);
    CHECK_THROWS_AS(khintchine_check(2.0 * v, 10, 3), InputError);
  }

  TEST_CASE("Massart") {
    CHECK(massart_bound(1, 4) == doctest::Approx(2.0393).epsilon(1e-4));
    PointSet one(1, 1);
    one << 0.5;
    const SpectralBundle b1 = build_bundle({KernelSpec::linear()}, one);
    CHECK(massart_exact(b1) == doctest::Approx(1.0));
    CHECK(massart_exact(b1) <= massart_bound(1, 1));

    const PointSet x = testutil::gaussian(8, 4, 31);
    const SpectralBundle b = build_bundle(testutil::blocks(2, 2), x);
    const double exact = massart_exact(b);
    CHECK(exact <= massart_bound(2, 8));
    const McValue mc = massart_check(b, 40000, 2);
    CHECK(std::abs(mc.estimate - exact) <= 4.0 * mc.std_error);
  }

  TEST_CASE("eigengap example") {
    for (double eps : {1e-6, 0.5, 1.0}) {
      const EigengapExample ex = eigengap_proposition(eps);
      CHECK(ex.rhs == doctest::Approx(2.0).epsilon(1e-9));
      CHECK(ex.lhs_trace == doctest::Approx(2.0).epsilon(1e-12));
      CHECK(ex.lhs_operator == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("concentration on identical samples and small runs") {
    BoxGenerator gen{{{0.95, 0.25}, {0.9, 0.3}}};
    CHECK(gen.exact_gap(1) == doctest::Approx(std::min((0.95 * 0.95 - 0.25 * 0.25) / 3.0, (0.81 - 0.09) / 3.0)));
    ConcentrationConfig cc;
    cc.sizes = {40, 160};
    cc.trials = 20;
    cc.seed = 3;
    const ConcentrationReport a = concentration_experiment(gen, cc);
    const ConcentrationReport b = concentration_experiment(gen, cc);
    CHECK(to_json(a).dump() == to_json(b).dump());
    for (const auto& row : a.rows) CHECK(row.rate == 1.0);
    CHECK(a.rows[1].mean_difference < a.rows[0].mean_difference);
    CHECK(loglog_slope({1, 10, 100}, {1, 0.1, 0.01}) == doctest::Approx(-1.0));
  }

  TEST_CASE("comparison terms") {
    const PointSet x = testutil::x6();
    const SpectralBundle b = build_bundle({KernelSpec::coordinate_linear({0, 1}), KernelSpec::coordinate_linear({2})}, x);
    CHECK(compare_complexity_terms(b, 1).coupled == doctest::Approx(4.443263047744922).epsilon(1e-13));
    CHECK(compare_complexity_terms(b, 2).coupled == doctest::Approx(7.78).epsilon(1e-13));
    CHECK(compare_complexity_terms(b, 3).coupled == doctest::Approx(10.08).epsilon(1e-13));
    CHECK(compare_complexity_terms(b, 3).standard == doctest::Approx(7.78).epsilon(1e-13));

    const SpectralBundle single = build_bundle({KernelSpec::linear()}, x);
    const ComplexityTerms t = compare_complexity_terms(single, 6);
    CHECK(t.coupled == doctest::Approx(t.standard).epsilon(1e-14));
    CHECK(t.standard == doctest::Approx(x.squaredNorm()).epsilon(1e-12));
    CHECK(compare_complexity_terms(single, 1).coupled <= t.standard);
  }

  TEST_CASE("independence diagnostic") {
    const PointSet x = testutil::gaussian(10, 4, 12);
    const PointSet grid = testutil::gaussian(30, 4, 13);
    const auto disjoint = independence_diagnostic(testutil::blocks(2, 2), x, grid);
    for (double r : disjoint) CHECK(r > 0.1);
    const auto dup = independence_diagnostic({KernelSpec::linear(), KernelSpec::linear()}, x, grid);
    CHECK(dup[0] < 1e-8);
    const auto mixed = independence_diagnostic({KernelSpec::gaussian(1.0), KernelSpec::linear()}, x, grid);
    for (double r : mixed) CHECK(r > 1e-6);
  }
}
