#pragma once

// Slow explicit-feature-space reference implementations. Used by the test
// suites and the verify command to cross-check the spectral fast paths.

#include "cndr/constraints.hpp"
#include "cndr/kernels.hpp"
#include "cndr/spectral.hpp"

#include <vector>

namespace cndr::oracle {

struct JacobiResult {
  Vector values;   // descending
  Matrix vectors;  // columns
  int sweeps = 0;
};

// Cyclic Jacobi rotations on a symmetric matrix, to 1e-15 relative
// off-diagonal mass.
JacobiResult jacobi_eigen(const Matrix& m, int max_sweeps = 100);

// x -> phi(x) in R^D with <phi(x), phi(y)> = K(x, y) (scale included).
class ExplicitFeatureMap {
 public:
  ExplicitFeatureMap(KernelSpec spec, int input_dim);

  int dim() const { return dim_; }
  Vector map(const Eigen::Ref<const Vector>& x) const;
  Matrix map_all(const PointSet& points) const;  // n x D
  // Input coordinates the features depend on.
  const std::vector<std::size_t>& support() const { return support_; }

 private:
  KernelSpec spec_;
  int input_dim_;
  int dim_ = 0;
  std::vector<std::size_t> support_;
};

// (1/n) sum_i phi(x_i) phi(x_i)^T.
Matrix explicit_covariance(const ExplicitFeatureMap& map, const PointSet& points);

// Norm of the top-r projection of sum_n sigma_n phi_stack(x_n), where
// phi_stack(x) = (sqrt(mu_1) phi_1(x), ..., sqrt(mu_p) phi_p(x)) and the
// projection is onto the top-r eigenspace of the direct-sum covariance
// diag(mu_1 C_1, ..., mu_p C_p) (cross-kernel blocks are not formed). Maps must
// depend on disjoint input coordinates.
double explicit_projection_norm(const std::vector<ExplicitFeatureMap>& maps, const Vector& mu, int r,
                                const Vector& sigma, const PointSet& points);

// Exact average over all 2^m sign vectors of the supremum over M, with M and
// the projections built from explicit covariances. p = 1 uses the closed-form
// maximizer; p = 2 maximizes over a grid of `grid` x `grid` weight vectors.
double exhaustive_rademacher(const std::vector<ExplicitFeatureMap>& maps, const ConstraintParams& params,
                             const PointSet& points, int grid = 200);

// Largest r-long sum of unscaled eigenvalues m * lambda_bar_{k,j} over every
// index set of size r (all pairs, zero eigenvalues included), by subset
// enumeration. Requires p * m <= 24.
double coupled_term_bruteforce(const SpectralBundle& bundle, int r);
double standard_term_bruteforce(const SpectralBundle& bundle);

}  // namespace cndr::oracle
