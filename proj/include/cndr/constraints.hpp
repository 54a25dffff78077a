#pragma once

#include "cndr/spectral.hpp"
#include "cndr/weight_region.hpp"

#include <vector>

namespace cndr {

// Slack below -tol counts as a violation in feasibility reports.
inline constexpr double kFeasibilityTol = 1e-8;

// (r, Lambda_(r), nu, delta): rank of the projection, Ky-Fan budget, budget on
// sum_k 1/mu_k, and confidence level.
struct ConstraintParams {
  int r = 1;
  double lambda_r = 1.0;
  double nu = 4.0;
  double delta = 0.05;

  // Throws ConfigError for out-of-range values or when nu < p^2 (M empty).
  void validate(int p) const;
};

// kappa = 4 (1 + sqrt(log(2p/delta) / 2)).
double kappa(int p, double delta);

struct FeasibilityReport {
  double kyfan = 0.0;
  double budget = 0.0;  // Lambda_(r) for M, Lambda_(r) + kappa for N
  double kyfan_slack = 0.0;
  double l1_slack = 0.0;
  double inv_sum_slack = 0.0;  // -inf when some mu_k = 0
  double min_mu = 0.0;
  bool kyfan_ok = false;
  bool l1_ok = false;
  bool inv_sum_ok = false;
  bool positive_ok = false;

  bool feasible() const { return kyfan_ok && l1_ok && inv_sum_ok && positive_ok; }
};

FeasibilityReport check_M(const Vector& mu, const ConstraintParams& params,
                          const SpectralBundle& bundle, double tol = kFeasibilityTol);

// Same constraints with the Ky-Fan budget widened to Lambda_(r) + kappa(p, delta),
// evaluated on the labeled-sample bundle.
FeasibilityReport check_N(const Vector& mu, const ConstraintParams& params,
                          const SpectralBundle& bundle_s, double tol = kFeasibilityTol);

// Count vector n of an index set: n_k = number of selected pairs from kernel k.
std::vector<int> selection_counts(const SpectralBundle& bundle, const IndexSet& set);

// Coefficients of the linear piece of the Ky-Fan norm for count vector n:
// a_k = sum_{j < n_k} lambda_bar_{k,j}. kyfan_r(mu) = max_n a(n) . mu.
Vector kyfan_cut(const SpectralBundle& bundle, const std::vector<int>& counts);

// Every count vector with sum r and n_k <= effective rank of kernel k.
// Throws ConfigError past `limit` vectors.
std::vector<std::vector<int>> enumerate_count_vectors(const SpectralBundle& bundle, int r,
                                                      std::size_t limit = 200000);

// Homogeneous rows (A mu <= -margin) describing the cone of weights for which
// the selection with count vector n is the strict top-r of the union spectrum.
WeightRegion selection_cone(const SpectralBundle& bundle, const std::vector<int>& counts,
                            double margin);

// Euclidean projection onto M (Ky-Fan constraint on `bundle`). Feasible inputs
// are returned unchanged. The result is strictly feasible. Extra linear rows
// (`extra`, may be empty) further restrict the set.
Vector project_to_M(const Vector& mu, const ConstraintParams& params, const SpectralBundle& bundle);
Vector project_to_M(const Vector& mu, const ConstraintParams& params, const SpectralBundle& bundle,
                    const WeightRegion& extra);

}  // namespace cndr
