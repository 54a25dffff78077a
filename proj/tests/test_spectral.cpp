#include "cndr/errors.hpp"
#include "cndr/spectral.hpp"
#include "doctest.h"
#include "test_util.hpp"

#include <cmath>

using namespace cndr;

namespace {

// Bundle whose normalized Gram matrices are the given diagonals (axis eigenvectors).
SpectralBundle diagonal_bundle(const std::vector<std::vector<double>>& spectra) {
  std::vector<Matrix> grams;
  for (const auto& s : spectra) {
    Vector d(static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) d(static_cast<Eigen::Index>(i)) = s[i];
    grams.push_back(d.asDiagonal());
  }
  return bundle_from_normalized_grams(grams, kDefaultRankTol, "test");
}

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("eigendecompose on simple matrices") {
    const Eigenpairs id = eigendecompose(Matrix::Identity(3, 3));
    CHECK(id.values.isApprox(Vector::Ones(3)));

    Matrix d = Matrix::Zero(3, 3);
    d.diagonal() << 3, 1, 2;
    const Eigenpairs e = eigendecompose(d);
    CHECK(e.values(0) == doctest::Approx(3));
    CHECK(e.values(1) == doctest::Approx(2));
    CHECK(e.values(2) == doctest::Approx(1));
    CHECK(std::abs(e.vectors(0, 0)) == doctest::Approx(1));
    CHECK(std::abs(e.vectors(2, 1)) == doctest::Approx(1));
    CHECK(std::abs(e.vectors(1, 2)) == doctest::Approx(1));
  }

  TEST_CASE("eigendecompose reconstructs a random symmetric matrix") {
    const PointSet a = testutil::gaussian(8, 8, 42);
    const Matrix s = a + a.transpose();
    const Eigenpairs e = eigendecompose(s);
    const Matrix back = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    CHECK((back - s).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((e.vectors.transpose() * e.vectors - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() <= 1e-10);
    for (int j = 0; j < 8; ++j) {
      Eigen::Index arg;
      e.vectors.col(j).cwiseAbs().maxCoeff(&arg);
      CHECK(e.vectors(arg, j) > 0.0);
    }
  }

  TEST_CASE("bundle from orthonormal points") {
    const PointSet x = Matrix::Identity(4, 4);
    const SpectralBundle b = build_bundle({KernelSpec::linear()}, x);
    REQUIRE(b.spectra[0].effective_rank == 4);
    for (int j = 0; j < 4; ++j) CHECK(b.value(0, j) == doctest::Approx(0.25));
  }

  TEST_CASE("bundle spectra equal block covariance spectra") {
    const PointSet x = testutil::x6();
    const SpectralBundle b = build_bundle({KernelSpec::coordinate_linear({0, 1}), KernelSpec::coordinate_linear({2})}, x);
    const Matrix c0 = x.leftCols(2).transpose() * x.leftCols(2) / 6.0;
    const Eigenpairs e0 = eigendecompose(c0);
    CHECK(b.spectra[0].effective_rank == 2);
    CHECK(b.value(0, 0) == doctest::Approx(e0.values(0)).epsilon(1e-12));
    CHECK(b.value(0, 1) == doctest::Approx(e0.values(1)).epsilon(1e-12));
    CHECK(b.spectra[1].effective_rank == 1);
    CHECK(b.value(1, 0) == doctest::Approx(x.col(2).squaredNorm() / 6.0).epsilon(1e-12));
    CHECK(b.value(1, 3) == 0.0);
  }

  TEST_CASE("trace identity") {
    const PointSet x = testutil::gaussian(4, 3, 9);
    const std::vector<KernelSpec> ks{KernelSpec::gaussian(1.0), KernelSpec::polynomial(2)};
    const SpectralBundle b = build_bundle(ks, x);
    for (int k = 0; k < 2; ++k)
      CHECK(b.spectra[k].values.sum() == doctest::Approx(normalized_gram(ks[k], x).trace()).epsilon(1e-8));
  }

  TEST_CASE("union spectrum ordering and ties") {
    const SpectralBundle one = diagonal_bundle({{0.5, 0.3, 0.2}});
    const auto u1 = union_spectrum(one, Vector::Ones(1));
    REQUIRE(u1.size() == 3);
    CHECK(u1[0].value == 0.5);
    CHECK(u1[2].value == 0.2);

    const SpectralBundle two = diagonal_bundle({{0.6, 0.4}, {0.5, 0.5}});
    Vector mu(2);
    mu << 0.5, 0.5;
    const auto u = union_spectrum(two, mu);
    REQUIRE(u.size() == 4);
    CHECK(u[0].value == doctest::Approx(0.3));
    CHECK(u[1].pair == PairIndex{1, 0});
    CHECK(u[2].pair == PairIndex{1, 1});
    CHECK(u[3].value == doctest::Approx(0.2));

    const IndexSet top = top_r_index_set(two, mu, 2);
    CHECK(top == IndexSet{{0, 0}, {1, 0}});
    CHECK(kyfan_r(two, mu, 2) == doctest::Approx(0.55));
    CHECK(kyfan_r(one, Vector::Ones(1), 2) == doctest::Approx(0.8));
    CHECK(top_r_index_set(one, Vector::Ones(1), 2) == IndexSet{{0, 0}, {0, 1}});

    Vector zero_first(2);
    zero_first << 0.0, 1.0;
    const auto uz = union_spectrum(two, zero_first);
    CHECK(uz[2].value == 0.0);
    CHECK(uz[3].value == 0.0);
    CHECK(uz[2].pair.kernel == 0);
  }

  TEST_CASE("plug-in eigengap") {
    const SpectralBundle one = diagonal_bundle({{0.5, 0.3, 0.2}});
    const Eigengap g1 = eigengap_plugin(one, 1);
    CHECK(g1.value == doctest::Approx(0.2));
    CHECK(g1.plugin);
    CHECK(eigengap_plugin(one, 2).value == doctest::Approx(0.1));
    const Eigengap g = eigengap_plugin(diagonal_bundle({{0.5, 0.3}, {0.4, 0.4}}), 1);
    CHECK(g.value == doctest::Approx(0.0));
    CHECK(g.degenerate);
  }

  TEST_CASE("projected sigma norm") {
    const SpectralBundle b = diagonal_bundle({{0.7, 0.3}});
    Vector s(2);
    s << 1, 1;
    CHECK(projected_sigma_norm(b, Vector::Ones(1), 1, s) == doctest::Approx(std::sqrt(1.4)));

    const PointSet x = testutil::x6();
    const KernelSpec k = normalize_spec(KernelSpec::linear(), x);
    const SpectralBundle bx = build_bundle({k}, x);
    const Vector sig = testutil::sigma6();
    const double direct = std::sqrt(6.0 * sig.dot(normalized_gram(k, x) * sig));
    CHECK(projected_sigma_norm(bx, Vector::Ones(1), bx.total_rank(), sig) == doctest::Approx(direct).epsilon(1e-12));
    CHECK(full_sigma_norm(bx, Vector::Ones(1), sig) == doctest::Approx(direct).epsilon(1e-12));
  }

  TEST_CASE("projected sigma norm on two blocks matches the explicit reference") {
    const PointSet x = testutil::x6();
    const SpectralBundle b = build_bundle({KernelSpec::coordinate_linear({0, 1}), KernelSpec::coordinate_linear({2})}, x);
    Vector mu(2);
    mu << 0.3, 0.7;
    CHECK(projected_sigma_norm(b, mu, 2, testutil::sigma6()) == doctest::Approx(2.6682191307016345).epsilon(1e-12));
  }

  TEST_CASE("bundle serialization round trip") {
    const PointSet x = testutil::x6();
    const SpectralBundle b = build_bundle({KernelSpec::linear(), KernelSpec::gaussian(0.9)}, x);
    const SpectralBundle c = bundle_from_json(nlohmann::json::parse(bundle_to_json(b).dump()));
    CHECK(c.anchor_hash == b.anchor_hash);
    CHECK(c.anchor_hash == hash_points(x));
    CHECK(c.sample_size == 6);
    for (int k = 0; k < 2; ++k) {
      CHECK(c.spectra[k].values == b.spectra[k].values);
      CHECK(c.spectra[k].vectors == b.spectra[k].vectors);
      CHECK(c.spectra[k].effective_rank == b.spectra[k].effective_rank);
    }
  }

  TEST_CASE("invalid inputs") {
    Matrix asym(2, 2);
    asym << 1, 2, 0, 1;
    CHECK_THROWS_AS(eigendecompose(asym), InputError);
    const SpectralBundle b = diagonal_bundle({{0.5, 0.3}});
    CHECK_THROWS(kyfan_r(b, Vector::Ones(2), 1));
    CHECK_THROWS(top_r_index_set(b, Vector::Ones(1), 0));
  }
}
