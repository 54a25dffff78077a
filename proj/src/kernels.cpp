#include "cndr/kernels.hpp"

#include "cndr/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace cndr {

namespace {

constexpr double kDiagSlack = 1e-12;

Eigen::Index precomputed_index(const KernelSpec& spec, const Eigen::Ref<const Vector>& x) {
  if (x.size() != 1) throw InputError("precomputed kernel expects 1-D index points");
  const double v = x(0);
  const double r = std::round(v);
  if (r != v || r < 0 || r >= static_cast<double>(spec.matrix->rows()))
    throw InputError("precomputed kernel index out of range: " + std::to_string(v));
  return static_cast<Eigen::Index>(r);
}

double eval_raw(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                const Eigen::Ref<const Vector>& y) {
  switch (spec.kind) {
    case KernelKind::linear:
      return x.dot(y);
    case KernelKind::polynomial:
      return std::pow(x.dot(y), spec.degree);
    case KernelKind::gaussian:
      return std::exp(-(x - y).squaredNorm() / spec.bandwidth);
    case KernelKind::coordinate_linear: {
      double s = 0.0;
      for (auto c : spec.coords) s += x(static_cast<Eigen::Index>(c)) * y(static_cast<Eigen::Index>(c));
      return s;
    }
    case KernelKind::precomputed:
      return (*spec.matrix)(precomputed_index(spec, x), precomputed_index(spec, y));
  }
  return 0.0;
}

void check_dims(const KernelSpec& spec, Eigen::Index dx, Eigen::Index dy) {
  if (dx != dy)
    throw InputError("kernel arguments have different dimensions: " + std::to_string(dx) +
                     " vs " + std::to_string(dy));
  if (spec.kind == KernelKind::coordinate_linear) {
    for (auto c : spec.coords)
      if (static_cast<Eigen::Index>(c) >= dx)
        throw InputError("coordinate-linear kernel uses coordinate " + std::to_string(c + 1) +
                         " beyond data dimension " + std::to_string(dx));
  }
}

double finite_or_throw(double v) {
  if (!std::isfinite(v)) throw NumericError("kernel evaluation produced a non-finite value");
  return v;
}

void check_normalized_diag(const KernelSpec& spec, const Matrix& k) {
  if (!spec.normalize) return;
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    if (k(i, i) > 1.0 + kDiagSlack)
      throw NumericError("normalized kernel has K(x,x) = " + std::to_string(k(i, i)) +
                         " > 1 on the given points");
}

}  // namespace

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::linear: return "linear";
    case KernelKind::polynomial: return "polynomial";
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::coordinate_linear: return "coordinate-linear";
    case KernelKind::precomputed: return "precomputed";
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(std::string_view name) {
  if (name == "linear") return KernelKind::linear;
  if (name == "polynomial") return KernelKind::polynomial;
  if (name == "gaussian") return KernelKind::gaussian;
  if (name == "coordinate-linear" || name == "coordinate_linear") return KernelKind::coordinate_linear;
  if (name == "precomputed") return KernelKind::precomputed;
  throw ConfigError("unknown kernel kind '" + std::string(name) + "'");
}

KernelSpec KernelSpec::linear() { return KernelSpec{}; }

KernelSpec KernelSpec::polynomial(int degree) {
  KernelSpec s;
  s.kind = KernelKind::polynomial;
  s.degree = degree;
  return s;
}

KernelSpec KernelSpec::gaussian(double bandwidth) {
  KernelSpec s;
  s.kind = KernelKind::gaussian;
  s.bandwidth = bandwidth;
  return s;
}

KernelSpec KernelSpec::coordinate_linear(std::vector<std::size_t> coords) {
  KernelSpec s;
  s.kind = KernelKind::coordinate_linear;
  s.coords = std::move(coords);
  return s;
}

KernelSpec KernelSpec::precomputed(Matrix m) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw InputError("precomputed kernel matrix must be square and non-empty");
  if (!m.allFinite()) throw InputError("precomputed kernel matrix has non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InputError("precomputed kernel matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo < -1e-8 * std::max(hi, 0.0))
    throw InputError("precomputed kernel matrix is not positive semi-definite (min eigenvalue " +
                     std::to_string(lo) + ")");
  KernelSpec s;
  s.kind = KernelKind::precomputed;
  s.matrix = std::make_shared<const Matrix>(std::move(m));
  return s;
}

void KernelSpec::validate(Eigen::Index dim) const {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InputError("kernel scale must be positive");
  switch (kind) {
    case KernelKind::polynomial:
      if (degree < 1) throw InputError("polynomial degree must be >= 1");
      break;
    case KernelKind::gaussian:
      if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
        throw InputError("gaussian bandwidth must be positive");
      break;
    case KernelKind::coordinate_linear: {
      if (coords.empty()) throw InputError("coordinate-linear kernel needs at least one coordinate");
      std::set<std::size_t> seen;
      for (auto c : coords) {
        if (static_cast<Eigen::Index>(c) >= dim)
          throw InputError("coordinate " + std::to_string(c + 1) + " exceeds data dimension " +
                           std::to_string(dim));
        if (!seen.insert(c).second) throw InputError("coordinate-linear kernel repeats a coordinate");
      }
      break;
    }
    case KernelKind::precomputed:
      if (!matrix) throw InputError("precomputed kernel has no matrix");
      if (dim != 1) throw InputError("precomputed kernel expects 1-D index points");
      break;
    case KernelKind::linear:
      break;
  }
}

double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                   const Eigen::Ref<const Vector>& y) {
  check_dims(spec, x.size(), y.size());
  return finite_or_throw(spec.scale * eval_raw(spec, x, y));
}

Matrix gram_serial(const KernelSpec& spec, const PointSet& points) {
  const Eigen::Index n = points.rows();
  if (n < 1) throw InputError("gram matrix needs at least one point");
  spec.validate(points.cols());
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector xi = points.row(i).transpose();
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = spec.scale * eval_raw(spec, xi, points.row(j).transpose());
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  if (!k.allFinite()) throw NumericError("kernel evaluation produced a non-finite value");
  check_normalized_diag(spec, k);
  return k;
}

Matrix gram(const KernelSpec& spec, const PointSet& points) {
  const Eigen::Index n = points.rows();
  if (n < 1) throw InputError("gram matrix needs at least one point");
  spec.validate(points.cols());
  Matrix k(n, n);
  // Row i writes the upper-triangle entries (i, j >= i) and their mirrors;
  // no two rows touch the same entry.
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector xi = points.row(i).transpose();
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = spec.scale * eval_raw(spec, xi, points.row(j).transpose());
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  if (!k.allFinite()) throw NumericError("kernel evaluation produced a non-finite value");
  check_normalized_diag(spec, k);
  return k;
}

Matrix normalized_gram(const KernelSpec& spec, const PointSet& points) {
  Matrix k = gram(spec, points);
  return k / static_cast<double>(points.rows());
}

Matrix cross_gram(const KernelSpec& spec, const PointSet& a, const PointSet& b) {
  check_dims(spec, a.cols(), b.cols());
  spec.validate(a.cols());
  Matrix k(a.rows(), b.rows());
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const Vector ai = a.row(i).transpose();
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      k(i, j) = spec.scale * eval_raw(spec, ai, b.row(j).transpose());
  }
  if (!k.allFinite()) throw NumericError("kernel evaluation produced a non-finite value");
  return k;
}

KernelSpec normalize_spec(const KernelSpec& spec, const PointSet& points) {
  if (points.rows() < 1) throw InputError("normalize_spec needs at least one point");
  spec.validate(points.cols());
  KernelSpec raw = spec;
  raw.scale = 1.0;
  raw.normalize = false;
  double max_diag = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Vector xi = points.row(i).transpose();
    max_diag = std::max(max_diag, eval_raw(raw, xi, xi));
  }
  if (!std::isfinite(max_diag)) throw NumericError("kernel diagonal is not finite");
  if (!(max_diag > 0.0))
    throw NumericError("degenerate kernel: K(x,x) = 0 on every point, cannot normalize");
  KernelSpec out = spec;
  out.scale = 1.0 / max_diag;
  out.normalize = true;
  return out;
}

}  // namespace cndr
