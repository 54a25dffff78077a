#pragma once

#include "cndr/constraints.hpp"
#include "cndr/hypothesis.hpp"
#include "cndr/spectral.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cndr {

// ---------------------------------------------------------------------------
// Rademacher draws

// Deterministic per-draw seed derived from (seed, draw index).
std::uint64_t draw_seed(std::uint64_t seed, std::uint64_t index);

// Sign vector of length m for draw `index`.
Vector rademacher_draw(std::uint64_t seed, std::uint64_t index, int m);

// Sign vector number `code` in the lexicographic enumeration of {-1,+1}^m
// (bit n set means sigma_n = +1).
Vector sign_vector(std::uint64_t code, int m);

// ---------------------------------------------------------------------------
// Empirical Rademacher complexity

struct RademacherEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  long long draws = 0;
  std::uint64_t seed = 0;
  std::string method;   // "analytic", "region-enumeration"
  bool exhaustive = false;
  bool lower_estimate = false;
  // p = 1 only: average of sqrt(Lambda/m) max_{j<=r} |v_j^T sigma|.
  double dual_norm_estimate = 0.0;
  bool has_dual_norm = false;
  int regions = 0;  // count vectors with non-empty interior (p > 1)
};

// Supremum of (1/m) ||Pi sum_n sigma_n Phi(x_n)|| over mu in M for a fixed sigma.
//
// p = 1: the set M is an interval of mu and the objective increases in mu, so
// the supremum is attained at mu* = min(1, Lambda / prefix_r).
// p > 1: M splits into cones where a fixed count vector n is the top-r
// selection; on each cone the squared norm is linear in mu, and its maximum
// over the cone is found by a barrier method. Cones without interior are
// skipped, so the result is a lower estimate.
class RademacherSup {
 public:
  RademacherSup(const SpectralBundle& bundle, const ConstraintParams& params);

  double value(const Vector& sigma) const;
  double dual_norm_value(const Vector& sigma) const;  // p = 1 only

  int num_regions() const { return static_cast<int>(regions_.size()); }
  bool analytic() const { return analytic_; }
  double mu_star() const { return mu_star_; }  // p = 1 only

 private:
  struct Region {
    std::vector<int> counts;
    Vector cut;
    WeightRegion region;
    Vector start;
  };

  const SpectralBundle& bundle_;
  ConstraintParams params_;
  bool analytic_ = false;
  double mu_star_ = 0.0;
  int max_count_ = 0;
  std::vector<Region> regions_;
};

RademacherEstimate estimate_rademacher(const SpectralBundle& bundle, const ConstraintParams& params,
                                       long long n_draws, std::uint64_t seed);
// Single-threaded reference; identical output.
RademacherEstimate estimate_rademacher_serial(const SpectralBundle& bundle,
                                              const ConstraintParams& params, long long n_draws,
                                              std::uint64_t seed);
// Exact expectation over all 2^m sign vectors (m <= 24).
RademacherEstimate rademacher_exhaustive(const SpectralBundle& bundle, const ConstraintParams& params);

// ---------------------------------------------------------------------------
// Bounds

inline constexpr double kEta0 = 23.0 / 22.0;

struct BoundReport {
  int p = 0;
  int m = 0;
  ConstraintParams params;
  double kappa = 0.0;
  double gap = 0.0;
  bool gap_plugin = true;
  bool gap_degenerate = false;
  int log_p_ceil = 0;
  double eta0 = kEta0;
  double term1 = 0.0;
  double term2 = 0.0;
  double total = 0.0;
  bool precondition_ok = false;  // sqrt(m) > 2 kappa / gap
  bool term2_vanishes = false;   // p = 1 zeroes the learning-kernels term
  // Margin bound (present when has_margin_bound).
  bool has_margin_bound = false;
  double rho = 0.0;
  double margin_loss = 0.0;
  double confidence_term = 0.0;
  double margin_bound = 0.0;
  // Lower bound sqrt(Lambda / 2m), attained by the single-kernel construction.
  double lower_bound = 0.0;
  bool lower_bound_applies = false;  // p == 1
  std::vector<std::string> diagnostics;
};

BoundReport complexity_bound(const ConstraintParams& params, int p, int m, const Eigengap& gap);

BoundReport margin_bound(const ConstraintParams& params, int p, int m, const Eigengap& gap,
                         double margin_loss, double rho);

// Margin bound for a trained model on labeled points, using the plug-in gap of
// the model's bundle.
BoundReport margin_bound(const Model& model, const PointSet& points, const Vector& labels, double rho);

double lower_bound_value(double lambda_r, int m);

// 8 kappa nu / (gap sqrt(m)); the projection-difference scale.
double projection_drift_bound(double kappa, double nu, double gap, int m);

nlohmann::json to_json(const BoundReport& r);
nlohmann::json to_json(const RademacherEstimate& r);
std::string csv_header(const BoundReport&);
std::string csv_row(const BoundReport& r);

// ---------------------------------------------------------------------------
// Lower-bound instance

struct LowerBoundInstance {
  PointSet points;  // labeled and unlabeled sample coincide
  Vector labels;
  KernelSpec kernel;
  ConstraintParams params;
  SpectralBundle bundle;
};

// Rank-r data on m points (orthogonal Fourier columns with distinct weights)
// under a normalized linear kernel, with Ky-Fan budget lambda_r.
LowerBoundInstance lower_bound_construct(int m, int r, double lambda_r, double delta = 0.05);

// ---------------------------------------------------------------------------
// Inequality checks

struct McValue {
  double estimate = 0.0;
  double std_error = 0.0;
  long long draws = 0;
};

// E|v^T sigma| for a unit vector v.
McValue khintchine_check(const Vector& v, long long n_draws, std::uint64_t seed);
double khintchine_exact(const Vector& v);
inline const double kKhintchineConstant = 0.70710678118654752440;

// E[max_{k,j,s} s v_{k,j}^T sigma] over all eigenvectors of the bundle.
McValue massart_check(const SpectralBundle& bundle, long long n_draws, std::uint64_t seed);
double massart_exact(const SpectralBundle& bundle);
double massart_bound(int p, int m);

struct EigengapExample {
  double epsilon = 0.0;
  double lhs_operator = 0.0;  // ||P(A) - P(B)|| in operator norm
  double lhs_trace = 0.0;     // same difference in trace norm
  double diff_norm = 0.0;     // ||A - B|| in operator norm
  double gap = 0.0;           // lambda_1(A) - lambda_2(A)
  double rhs = 0.0;           // 2 ||A - B|| / gap
};

// A = diag(1 + eps, 1), B = diag(1, 1 + eps), top-1 eigenprojections.
EigengapExample eigengap_proposition(double epsilon);

// ---------------------------------------------------------------------------
// Concentration of projections

// Independent coordinates x_i ~ Uniform[-a_i, a_i], grouped into blocks; each
// block carries a coordinate-linear kernel. The per-block covariance is
// diag(a_i^2 / 3), so eigengaps are known exactly.
struct BoxGenerator {
  std::vector<std::vector<double>> blocks;

  int dim() const;
  int num_kernels() const { return static_cast<int>(blocks.size()); }
  void validate() const;  // K(x, x) <= 1 on the support, non-empty blocks
  PointSet sample(int n, std::uint64_t seed) const;
  std::vector<KernelSpec> kernels() const;
  // min_k (lambda_r(C_k) - lambda_{r+1}(C_k)) of the true per-block covariances.
  double exact_gap(int r) const;
};

struct ConcentrationConfig {
  std::vector<int> sizes{50, 100, 200, 400};
  int trials = 200;
  int test_functions = 8;
  int r = 2;
  double nu = 0.0;  // 0 selects p^2
  double delta = 0.05;
  std::uint64_t seed = 1;
};

struct ConcentrationRow {
  int m = 0;
  int trials = 0;
  int satisfied = 0;
  double rate = 0.0;
  double mean_difference = 0.0;
  double max_difference = 0.0;
  double bound = 0.0;
  double mean_kyfan_drift = 0.0;
  double max_kyfan_drift = 0.0;
};

struct ConcentrationReport {
  double kappa = 0.0;
  double gap = 0.0;
  double nu = 0.0;
  double slope = 0.0;  // log-log fit of mean difference against m
  std::vector<ConcentrationRow> rows;
};

// Labeled and unlabeled samples of equal size m drawn independently; mixture
// weights uniform. Compares the top-r projections of the two empirical mixture
// covariances on random unit test functions.
ConcentrationReport concentration_experiment(const BoxGenerator& gen, const ConcentrationConfig& cfg);

nlohmann::json to_json(const ConcentrationReport& r);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Diagnostics

struct ComplexityTerms {
  double coupled = 0.0;   // largest r-long sum of unscaled eigenvalues across kernels
  double standard = 0.0;  // largest single-kernel trace of the unscaled matrix
};

ComplexityTerms compare_complexity_terms(const SpectralBundle& bundle, int r);

// Per kernel: sine of the smallest principal angle between the span of
// {K_k(., x_n)} and the span of every other kernel's functions, both evaluated
// on the grid. Zero means some function of kernel k is reproduced by the others.
std::vector<double> independence_diagnostic(const std::vector<KernelSpec>& kernels,
                                            const PointSet& sample, const PointSet& grid);

}  // namespace cndr
