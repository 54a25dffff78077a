#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace cndr {

// Points are stored row-wise: a point list of n points in R^d is an n x d matrix.
using PointSet = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class KernelKind { linear, polynomial, gaussian, coordinate_linear, precomputed };

std::string_view to_string(KernelKind kind);
KernelKind kernel_kind_from_string(std::string_view name);

// One member of a base kernel family.
//
// `scale` is the multiplicative factor set by normalize_spec(); the effective
// kernel is scale * K_raw. Precomputed kernels address their matrix through
// points whose single coordinate is a 0-based row index.
struct KernelSpec {
  KernelKind kind = KernelKind::linear;
  int degree = 1;
  double bandwidth = 1.0;
  std::vector<std::size_t> coords;  // 0-based, coordinate_linear only
  bool normalize = false;
  double scale = 1.0;
  std::shared_ptr<const Matrix> matrix;  // precomputed only

  static KernelSpec linear();
  static KernelSpec polynomial(int degree);
  static KernelSpec gaussian(double bandwidth);
  static KernelSpec coordinate_linear(std::vector<std::size_t> coords);
  // Validates symmetry and PSD (minimum eigenvalue >= -1e-8 * maximum).
  static KernelSpec precomputed(Matrix m);

  // Throws InputError when the spec itself is malformed or does not fit
  // points of dimension `dim`.
  void validate(Eigen::Index dim) const;
};

double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                   const Eigen::Ref<const Vector>& y);

// Unscaled sample kernel matrix [K]_ij = K(x_i, x_j). Upper triangle is
// computed and mirrored, rows are distributed over OpenMP threads. Every
// entry is computed independently, so the result does not depend on the
// thread count.
Matrix gram(const KernelSpec& spec, const PointSet& points);

// Single-threaded reference for gram(); bitwise identical output.
Matrix gram_serial(const KernelSpec& spec, const PointSet& points);

// Normalized kernel matrix gram / n.
Matrix normalized_gram(const KernelSpec& spec, const PointSet& points);

// Rectangular kernel matrix [K]_ij = K(a_i, b_j).
Matrix cross_gram(const KernelSpec& spec, const PointSet& a, const PointSet& b);

// Rescales the spec by 1 / max_i K(x_i, x_i) so that the diagonal on `points`
// is at most one, and sets normalize = true.
KernelSpec normalize_spec(const KernelSpec& spec, const PointSet& points);

}  // namespace cndr
