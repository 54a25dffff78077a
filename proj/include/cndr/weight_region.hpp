#pragma once

#include "cndr/kernels.hpp"

#include <optional>

namespace cndr {

// Convex region of mixture weights
//   { mu in R^p : mu > 0, A mu <= b, sum_k 1/mu_k <= nu }.
// Every feasible set used by this library (M, N, M restricted to the cone
// where a given index set is the top-r selection) has this form.
struct WeightRegion {
  Matrix A;  // rows x p
  Vector b;
  double nu = 0.0;

  int dim() const { return static_cast<int>(A.cols()); }
  void add_row(const Vector& a, double rhs);

  // Largest constraint violation at mu (<= 0 means feasible); +inf outside mu > 0.
  double max_violation(const Vector& mu) const;
};

struct BarrierOptions {
  // Stop when the duality-gap bound (number of barrier terms) / t drops below this.
  double gap_tol = 1e-12;
  int max_outer = 60;
  int max_newton = 200;
};

// Strictly feasible point of the region, found by a phase-I barrier method
// that maximizes the smallest (row-normalized) slack. Empty optional if the
// region has no interior.
std::optional<Vector> interior_point(const WeightRegion& region, const Vector& hint);

// Minimizes 0.5 * quad * ||mu - anchor||^2 + linear . mu over the region by a
// log-barrier Newton method started at the strictly feasible `start`. The
// returned point is strictly feasible.
Vector barrier_minimize(const WeightRegion& region, const Vector& start, double quad,
                        const Vector& anchor, const Vector& linear,
                        const BarrierOptions& opts = {});

}  // namespace cndr
