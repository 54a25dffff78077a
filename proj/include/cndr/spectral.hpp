#pragma once

#include "cndr/kernels.hpp"

#include "json.hpp"

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace cndr {

inline constexpr double kDefaultRankTol = 1e-10;

struct Eigenpairs {
  Vector values;   // descending
  Matrix vectors;  // column i pairs with values(i); orthonormal
};

// Dense symmetric eigendecomposition, eigenvalues sorted descending. Each
// eigenvector's largest-magnitude coordinate is made positive (first such
// coordinate on ties). Input must be symmetric within 1e-10 relative.
Eigenpairs eigendecompose(const Matrix& m);

// A (kernel, eigen-index) pair, both 0-based.
struct PairIndex {
  int kernel = 0;
  int index = 0;
  auto operator<=>(const PairIndex&) const = default;
};

struct KernelSpectrum {
  Vector values;   // eigenvalues of the normalized Gram, descending, clamped >= 0
  Matrix vectors;  // m x m, orthonormal columns
  int effective_rank = 0;
};

// Per-kernel spectra of the normalized Gram matrices on one anchor sample.
// Immutable once built.
struct SpectralBundle {
  std::vector<KernelSpectrum> spectra;
  double rank_tol = kDefaultRankTol;
  std::string anchor_hash;
  int sample_size = 0;

  int num_kernels() const { return static_cast<int>(spectra.size()); }
  int total_rank() const;
  // Eigenvalue lambda_bar_{k,j}, zero-padded beyond the computed spectrum.
  double value(int k, int j) const;
};

// Hex digest identifying a point set (FNV-1a over shape and raw doubles).
std::string hash_points(const PointSet& points);

SpectralBundle build_bundle(const std::vector<KernelSpec>& kernels, const PointSet& points,
                            double rank_tol = kDefaultRankTol);

// Builds a bundle from already-normalized Gram matrices (one per kernel).
SpectralBundle bundle_from_normalized_grams(const std::vector<Matrix>& grams, double rank_tol,
                                            std::string anchor_hash);

struct SpectrumEntry {
  double value = 0.0;
  PairIndex pair;
};

// All pairs (k, j) with j below kernel k's effective rank, valued
// mu_k * lambda_bar_{k,j}, sorted descending with ties broken by
// (smaller k, smaller j).
std::vector<SpectrumEntry> union_spectrum(const SpectralBundle& bundle, const Vector& mu);

// Ordered set of the r selected pairs (sorted by PairIndex).
using IndexSet = std::vector<PairIndex>;

IndexSet top_r_index_set(const SpectralBundle& bundle, const Vector& mu, int r);

// Ky-Fan r-norm of the mixture covariance: sum of the top-r union values.
double kyfan_r(const SpectralBundle& bundle, const Vector& mu, int r);

// Largest Ky-Fan value reachable with count vector n (n_k pairs from kernel k)
// is sum_k mu_k * prefix_k(n_k); prefix_k(n) = sum of the first n eigenvalues.
double prefix_sum(const SpectralBundle& bundle, int k, int n);

struct Eigengap {
  double value = 0.0;
  bool degenerate = false;  // below 1e-12
  bool plugin = true;       // empirical substitute for the population gap
};

// min_k (lambda_bar_{k,r} - lambda_bar_{k,r+1}) with 1-based r, zero padded.
Eigengap eigengap_plugin(const SpectralBundle& bundle, int r);

// ||Pi sum_n sigma_n Phi(x_n)|| via sqrt(m * sum_{I_mu} mu_k lambda_bar (v^T sigma)^2).
double projected_sigma_norm(const SpectralBundle& bundle, const Vector& mu, int r,
                            const Vector& sigma);

// Same quantity for an explicit index set (no top-r selection).
double projected_sigma_norm(const SpectralBundle& bundle, const Vector& mu, const IndexSet& set,
                            const Vector& sigma);

// ||sum_n sigma_n Phi(x_n)|| = sqrt(m * sigma^T (sum_k mu_k Kbar_k) sigma), computed
// from the spectra.
double full_sigma_norm(const SpectralBundle& bundle, const Vector& mu, const Vector& sigma);

nlohmann::json bundle_to_json(const SpectralBundle& bundle);
SpectralBundle bundle_from_json(const nlohmann::json& j);

}  // namespace cndr
